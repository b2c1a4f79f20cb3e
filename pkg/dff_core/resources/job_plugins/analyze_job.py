"""
DFF Core: trajectory comparison job plugin
"""

from typing import Any, Dict as TDict, List as TList

from marshmallow.fields import Dict, Integer, List, Nested, String
from numpy import abs as np_abs, asarray, column_stack, nan, pi

from ...analysis import (
    assign_states, check_same_beads, common_range, contact_probability_map,
    dihedral_angles, free_energy, histogram, histogram_js, js_divergence,
    kmeans, pwd_js, report_name, rmsd, rmsd_free_energy, tica_fit,
    transition_js, transition_matrix, write_csv, write_heatmap_svg,
    write_metrics_json)
from ...dataio import read_trajectory
from ...errors import ValidationError
from ...models import Job, JobResult, Trajectory
from ...schemas import Float


__all__ = ['AnalyzeJob', 'METRICS']


METRICS = ('tic', 'pwd', 'dihedral', 'contact', 'rmsd', 'msm')


def _centers(edges) -> Any:
    e = asarray(edges)
    return (e[1:] + e[:-1])/2


class AnalyzeJobResult(JobResult):
    metrics: TDict[str, float] = Dict(
        keys=String(), values=Float(allow_nan=True), dump_default=dict)


class AnalyzeJob(Job):
    """
    Compare a model trajectory with a reference trajectory and write the
    metrics JSON, CSV curves, and SVG heatmaps
    """
    type = 'analyze'
    description = 'Compare Trajectories'

    result: AnalyzeJobResult = Nested(AnalyzeJobResult, dump_default={})
    ref: str = String(dump_default=None)
    model: str = String(dump_default=None)
    metrics: TList[str] = List(String(), dump_default=lambda: list(METRICS))
    lag: int = Integer(dump_default=None)
    bins: int = Integer(dump_default=None)
    n_states: int = Integer(dump_default=10)
    min_offset: int = Integer(dump_default=None)
    contact_threshold: float = Float(dump_default=None)
    reference_frame: int = Integer(dump_default=0)
    seed: int = Integer(dump_default=0)

    _ref: Trajectory = None
    _model: Trajectory = None
    _values: TDict[str, Any] = None

    def run(self) -> None:
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise ValidationError(
                'metrics', 'Unknown metric(s) {}; expected {}'.format(
                    ', '.join(sorted(unknown)), ', '.join(METRICS)))
        if not self.ref or not self.model:
            raise ValidationError('ref', 'Need reference and model files')
        self._ref = read_trajectory(self.ref)
        self._model = read_trajectory(self.model)
        check_same_beads(self._ref, self._model)
        self._values = {}

        for n, metric in enumerate(self.metrics):
            getattr(self, 'analyze_' + metric)()
            self.update_progress((n + 1)/len(self.metrics)*100)

        self.create_job_file(
            'metrics.json',
            writer=lambda path: write_metrics_json(path, self._values))
        self.result.metrics = {
            k: float(v) for k, v in self._values.items()
            if isinstance(v, (int, float))}

    def _csv(self, metric: str, what: str, header, rows) -> None:
        self.create_job_file(
            report_name(metric, what, 'csv'),
            writer=lambda path: write_csv(path, header, rows))

    def _svg(self, metric: str, what: str, values, **kwargs) -> None:
        self.create_job_file(
            report_name(metric, what, 'svg'),
            writer=lambda path: write_heatmap_svg(path, values, **kwargs))

    def _profile(self, metric: str, ref, other) -> float:
        """Shared-range 1D free energy curves and their JS divergence"""
        rng = common_range(ref, other)
        h_ref = histogram(ref, self.bins, rng)
        h_other = histogram(other, self.bins, rng)
        self._csv(metric, 'free_energy', ('x', 'ref', 'model'), column_stack([
            _centers(h_ref.edges[0]), free_energy(h_ref).filled(nan),
            free_energy(h_other).filled(nan)]))
        return js_divergence(h_ref, h_other)

    def analyze_tic(self) -> None:
        model = tica_fit(self._ref, self.lag)
        y_ref = model.transform(self._ref)
        y_model = model.transform(self._model)
        self._values['tic_eigenvalues'] = model.eigenvalues[:2].tolist()
        self._values['tic1_js'] = self._profile('tic', y_ref[:, 0],
                                                y_model[:, 0])
        if y_ref.shape[1] < 2:
            return
        rng = common_range(y_ref[:, :2], y_model[:, :2])
        h_ref = histogram(y_ref[:, :2], self.bins, rng)
        h_model = histogram(y_model[:, :2], self.bins, rng)
        self._values['tic_js'] = js_divergence(h_ref, h_model)
        extent = rng[0] + rng[1]
        for what, h in (('ref_fes', h_ref), ('model_fes', h_model)):
            self._svg('tic', what, free_energy(h), extent=extent,
                      title='Free energy (kT)', xlabel='TIC 1',
                      ylabel='TIC 2')

    def analyze_pwd(self) -> None:
        mean, per_pair = pwd_js(
            self._ref, self._model, self.min_offset, self.bins)
        self._values['pwd_js'] = mean
        self._csv('pwd', 'js', ('bead1', 'bead2', 'js'),
                  [(j, k, v) for (j, k), v in per_pair.items()])

    def analyze_dihedral(self) -> None:
        if self._ref.dim != 3 or self._ref.n_beads < 4:
            self.add_warning(
                'Dihedral angles need at least 4 beads in 3D; skipped')
            return
        a_ref = dihedral_angles(self._ref)
        a_model = dihedral_angles(self._model)
        rng = [(-pi, pi)]
        per = [histogram_js(a_ref[:, k], a_model[:, k], self.bins, rng)
               for k in range(a_ref.shape[1])]
        self._values['dihedral_js'] = sum(per)/len(per)
        self._csv('dihedral', 'js', ('dihedral', 'js'), list(enumerate(per)))
        if a_ref.shape[1] < 2:
            return
        rng2 = [(-pi, pi)]*2
        h_ref = histogram(a_ref[:, :2], self.bins, rng2)
        h_model = histogram(a_model[:, :2], self.bins, rng2)
        self._values['dihedral_pair_js'] = js_divergence(h_ref, h_model)
        for what, h in (('ref_fes', h_ref), ('model_fes', h_model)):
            self._svg('dihedral', what, free_energy(h), extent=(-pi, pi)*2,
                      title='Free energy (kT)', xlabel='dihedral 1',
                      ylabel='dihedral 2')

    def analyze_contact(self) -> None:
        c_ref = contact_probability_map(self._ref, self.contact_threshold)
        c_model = contact_probability_map(self._model, self.contact_threshold)
        self._values['contact_mae'] = float(np_abs(c_ref - c_model).mean())
        for what, c in (('ref', c_ref), ('model', c_model)):
            self._svg('contact', what, c, title='Contact probability',
                      xlabel='bead', ylabel='bead')
        self._svg('contact', 'difference', c_model - c_ref, cmap='RdBu_r',
                  title='Contact probability difference', xlabel='bead',
                  ylabel='bead')

    def analyze_rmsd(self) -> None:
        reference = self._ref.frames[self.reference_frame]
        r_ref = rmsd(self._ref, reference)
        r_model = rmsd(self._model, reference)
        rng = common_range(r_ref, r_model)[0]
        h_ref, f_ref = rmsd_free_energy(self._ref, reference, self.bins, rng)
        h_model, f_model = rmsd_free_energy(
            self._model, reference, self.bins, rng)
        self._values['rmsd_js'] = js_divergence(h_ref, h_model)
        self._csv('rmsd', 'free_energy', ('rmsd', 'ref', 'model'), column_stack(
            [_centers(h_ref.edges[0]), f_ref.filled(nan), f_model.filled(nan)]))

    def analyze_msm(self) -> None:
        model = tica_fit(self._ref, self.lag)
        lag = model.lag
        y_ref = model.transform(self._ref, 2)
        y_model = model.transform(self._model, 2)
        clusters = kmeans(y_ref, self.n_states, self.seed)
        labels_ref = clusters.labels
        labels_model = assign_states(clusters.centroids, y_model)
        P_ref = transition_matrix(
            labels_ref, lag, self._ref.segments, self.n_states)
        pi_model = transition_matrix(
            labels_model, 1, (), self.n_states).pi
        self._values['msm_state_js'] = js_divergence(P_ref.pi, pi_model)
        self._csv('msm', 'populations', ('state', 'ref', 'model'),
                  column_stack([range(self.n_states), P_ref.pi, pi_model]))
        if self._model.provenance == 'iid' or not self._model.dt:
            self.add_warning(
                'Model frames are not a time series; transition matrix '
                'comparison skipped')
            return
        P_model = transition_matrix(
            labels_model, lag, self._model.segments, self.n_states)
        mean, weighted = transition_js(P_model, P_ref)
        self._values['msm_js'] = mean
        self._values['msm_js_weighted'] = weighted
        self._svg('msm', 'ref_transitions', P_ref.P,
                  title='Transition probability', xlabel='from', ylabel='to')
        self._svg('msm', 'model_transitions', P_model.P,
                  title='Transition probability', xlabel='from', ylabel='to')
