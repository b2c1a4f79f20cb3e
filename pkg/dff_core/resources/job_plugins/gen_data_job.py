"""
DFF Core: exact toy system data generation job plugin
"""

from typing import List as TList

from marshmallow.fields import Integer, List, Nested, String
from numpy.random import default_rng

from ...models import Job, JobResult, Trajectory
from ...schemas import Boolean, Float
from ...dataio import write_trajectory
from ...toyworlds import boltzmann_sample, get_system, projected_forces


__all__ = ['GenDataJob']


class GenDataJobResult(JobResult):
    n_frames: int = Integer(dump_default=0)
    n_beads: int = Integer()
    dim: int = Integer()
    kT: float = Float()
    mean: TList[float] = List(Float(), dump_default=list)
    std: TList[float] = List(Float(), dump_default=list)


class GenDataJob(Job):
    """
    Draw i.i.d. Boltzmann samples of a toy system and save them as an oracle
    trajectory; optionally coarse-grain them and save the projected forces
    for the force-matching baseline
    """
    type = 'gen-data'
    description = 'Generate Exact Samples'

    result: GenDataJobResult = Nested(GenDataJobResult, dump_default={})
    system: str = String(dump_default='double_well')
    n: int = Integer(dump_default=10000)
    kT: float = Float(dump_default=None)
    seed: int = Integer(dump_default=0)
    out: str = String(dump_default='data.traj')
    cg: bool = Boolean(dump_default=False)
    forces: str = String(dump_default=None)

    def run(self) -> None:
        params = {} if self.kT is None else dict(kT=self.kT)
        system = get_system(self.system, **params)
        rng = default_rng(self.seed)

        x = boltzmann_sample(system, self.n, rng)
        self.update_progress(50)
        cg_map = system.cg_map()
        f = None
        if self.cg:
            x, f = projected_forces(system, cg_map, x)
        elif self.forces:
            f = system.force(x)

        traj = Trajectory(x, kT=system.kT, provenance='oracle')
        self.create_job_file(
            self.out, writer=lambda path: write_trajectory(path, traj))
        if self.forces:
            ftraj = Trajectory(f, kT=system.kT, provenance='oracle')
            self.create_job_file(
                self.forces, writer=lambda path: write_trajectory(path, ftraj))

        flat = traj.frames.reshape(len(traj), -1)
        self.result.n_frames = traj.n_frames
        self.result.n_beads = traj.n_beads
        self.result.dim = traj.dim
        self.result.kT = system.kT
        if len(flat):
            self.result.mean = flat.mean(0).tolist()
            self.result.std = flat.std(0).tolist()
