"""
DFF Core: i.i.d. sampling job plugin
"""

from marshmallow.fields import Integer, Nested, String
from numpy.random import default_rng

from ...dataio import read_checkpoint, read_checkpoint_kt, write_trajectory
from ...errors import MissingFieldError
from ...models import Job, JobResult
from ...sampler import ancestral_sample, iid_trajectory
from ...schemas import Float


__all__ = ['SampleJob']


class SampleJobResult(JobResult):
    n_samples: int = Integer(dump_default=0)
    n_failed: int = Integer(dump_default=0)


class SampleJob(Job):
    """
    Draw i.i.d. samples from a trained model by ancestral sampling
    """
    type = 'sample'
    description = 'Ancestral Sampling'

    result: SampleJobResult = Nested(SampleJobResult, dump_default={})
    checkpoint: str = String(dump_default=None)
    n: int = Integer(dump_default=10000)
    seed: int = Integer(dump_default=0)
    out: str = String(dump_default='samples.traj')
    batch_size: int = Integer(dump_default=4096)
    kT: float = Float(dump_default=None)

    def run(self) -> None:
        if not self.checkpoint:
            raise MissingFieldError('checkpoint', 'Model checkpoint required')
        model = read_checkpoint(self.checkpoint)
        kT = self.kT
        if kT is None:
            kT = read_checkpoint_kt(self.checkpoint) or 1.0
        samples, failed = ancestral_sample(
            model, self.n, default_rng(self.seed), self.batch_size,
            return_failed=True)
        traj = iid_trajectory(samples, kT)
        self.create_job_file(
            self.out, writer=lambda path: write_trajectory(path, traj))
        self.result.n_samples = len(samples)
        self.result.n_failed = failed
        if self.result.n_failed:
            self.add_warning(
                '{} of {} samples diverged and were dropped'.format(
                    self.result.n_failed, self.n))
