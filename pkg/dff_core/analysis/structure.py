"""
DFF Core: structural observables of bead chains

Dihedral angles, pairwise distances, contact maps, RMSD after optimal
superposition, and chain-integrity statistics.
"""

from typing import Dict as TDict, List as TList, Optional, Tuple, Union

from numpy import (
    arange, arctan2, asarray, cross, diag_indices, einsum, eye, float64,
    linalg, ndarray, pi, sqrt, triu_indices, where)
from numpy.linalg import det, svd

from .. import config
from ..errors import ValidationError
from ..errors.analysis import ShapeMismatchError
from ..models import Trajectory
from .histograms import Histogram, common_range, free_energy, histogram, \
    histogram_js


__all__ = [
    'bond_length_distributions', 'bond_lengths', 'check_same_beads',
    'contact_probability_map', 'dihedral_angles', 'distant_pairs',
    'min_distance_tail', 'pairwise_distance_distributions',
    'pairwise_distances', 'pwd_js', 'rmsd', 'rmsd_free_energy',
]


Frames = Union[Trajectory, ndarray]


def _frames(traj: Frames) -> ndarray:
    if isinstance(traj, Trajectory):
        return traj.frames.astype(float64)
    f = asarray(traj, float64)
    return f[None] if f.ndim == 2 else f


def check_same_beads(ref: Frames, other: Frames) -> None:
    """
    Require equal bead count and dimension of two ensembles

    :param ref: reference frames
    :param other: compared frames
    """
    a, b = _frames(ref), _frames(other)
    if a.shape[1:] != b.shape[1:]:
        raise ShapeMismatchError(shape1=a.shape[1:], shape2=b.shape[1:])


def dihedral_angles(traj: Frames) -> ndarray:
    """
    Torsion angles of consecutive bead quadruplets (j, j+1, j+2, j+3) with the
    IUPAC sign: cis is 0, trans is pi, and the angle is positive when the
    near bond turns clockwise onto the far one viewed along the central bond

    :param traj: frames with at least 4 beads in 3D

    :return: array (n_frames, n_beads - 3) of angles in (-pi, pi]
    """
    x = _frames(traj)
    if x.shape[2] != 3 or x.shape[1] < 4:
        raise ValidationError(
            'traj', 'Dihedral angles need at least 4 beads in 3D, got shape '
            '{}'.format(x.shape[1:]))
    b1 = x[:, 1:-2] - x[:, :-3]
    b2 = x[:, 2:-1] - x[:, 1:-2]
    b3 = x[:, 3:] - x[:, 2:-1]
    n1 = cross(b1, b2)
    n2 = cross(b2, b3)
    b2_unit = b2/linalg.norm(b2, axis=-1, keepdims=True)
    phi = arctan2((cross(n1, n2)*b2_unit).sum(-1), (n1*n2).sum(-1))
    return where(phi <= -pi, pi, phi)


def distant_pairs(n_beads: int, min_offset: Optional[int] = None) \
        -> TList[Tuple[int, int]]:
    """
    Bead pairs (j, k) with k - j > min_offset

    :param n_beads: number of beads
    :param min_offset: minimum sequence separation; defaults to
        PWD_MIN_OFFSET

    :return: list of pairs in lexicographic order
    """
    if min_offset is None:
        min_offset = config['PWD_MIN_OFFSET']
    return [(j, k) for j in range(n_beads) for k in range(j + 1, n_beads)
            if k - j > min_offset]


def pairwise_distances(traj: Frames,
                       pairs: Optional[TList[Tuple[int, int]]] = None) \
        -> ndarray:
    """
    Inter-bead distances per frame

    :param traj: frames
    :param pairs: bead pairs; defaults to all pairs j < k

    :return: array (n_frames, n_pairs)
    """
    x = _frames(traj)
    if pairs is None:
        j, k = triu_indices(x.shape[1], 1)
    else:
        j = asarray([p[0] for p in pairs], int)
        k = asarray([p[1] for p in pairs], int)
    return linalg.norm(x[:, k] - x[:, j], axis=-1)


def pairwise_distance_distributions(
        traj: Frames, min_offset: Optional[int] = None,
        bins: Optional[int] = None,
        range: Optional[Tuple[float, float]] = None) \
        -> TDict[Tuple[int, int], Histogram]:
    """
    Distance histograms of sequence-distant bead pairs

    :param traj: frames
    :param min_offset: minimum sequence separation; defaults to
        PWD_MIN_OFFSET
    :param bins: number of bins
    :param range: common binning range for all pairs; defaults to each pair's
        data range

    :return: dictionary {(j, k): histogram}; empty if no pair qualifies
    """
    x = _frames(traj)
    pairs = distant_pairs(x.shape[1], min_offset)
    d = pairwise_distances(x, pairs)
    return {p: histogram(d[:, n], bins, None if range is None else [range])
            for n, p in enumerate(pairs)}


def pwd_js(ref: Frames, other: Frames, min_offset: Optional[int] = None,
           bins: Optional[int] = None) \
        -> Tuple[float, TDict[Tuple[int, int], float]]:
    """
    Pairwise-distance JS divergences of sequence-distant pairs on shared
    per-pair binning

    :param ref: reference frames
    :param other: compared frames
    :param min_offset: minimum sequence separation
    :param bins: number of bins

    :return: mean divergence (NaN if no pair qualifies) and per-pair values
    """
    check_same_beads(ref, other)
    a, b = _frames(ref), _frames(other)
    pairs = distant_pairs(a.shape[1], min_offset)
    da, db = pairwise_distances(a, pairs), pairwise_distances(b, pairs)
    per_pair = {p: histogram_js(da[:, n], db[:, n], bins)
                for n, p in enumerate(pairs)}
    mean = sum(per_pair.values())/len(per_pair) if per_pair else float('nan')
    return mean, per_pair


def contact_probability_map(traj: Frames,
                            threshold: Optional[float] = None) -> ndarray:
    """
    Fraction of frames in which each bead pair is closer than the threshold

    :param traj: frames
    :param threshold: contact distance; defaults to CONTACT_THRESHOLD

    :return: symmetric (n_beads x n_beads) matrix with unit diagonal
    """
    if threshold is None:
        threshold = config['CONTACT_THRESHOLD']
    x = _frames(traj)
    n = x.shape[1]
    if not len(x):
        return eye(n)
    d = linalg.norm(x[:, :, None] - x[:, None], axis=-1)
    res = (d < threshold).mean(0)
    res[diag_indices(n)] = 1
    return res


def rmsd(frame: Frames, reference: ndarray) -> Union[float, ndarray]:
    """
    Root mean square deviation after optimal superposition by proper rigid
    motions (Kabsch alignment with reflections excluded)

    :param frame: configuration (n_beads, dim) or frames (n, n_beads, dim)
    :param reference: reference configuration (n_beads, dim)

    :return: RMSD or array of RMSDs per frame
    """
    single = not isinstance(frame, Trajectory) and asarray(frame).ndim == 2
    p = _frames(frame)
    q = asarray(reference, float64)
    if p.shape[1:] != q.shape:
        raise ShapeMismatchError(shape1=p.shape[1:], shape2=q.shape)
    p = p - p.mean(1, keepdims=True)
    q = q - q.mean(0)
    dim = q.shape[1]
    u, _, vt = svd(einsum('nbi,bj->nij', p, q))
    d = eye(dim)[None].repeat(len(p), 0)
    d[:, -1, -1] = where(det(einsum('nji,nkj->nik', vt, u)) < 0, -1, 1)
    # Rotation mapping centered frames onto the centered reference
    rot = einsum('nji,njk,nlk->nil', vt, d, u)
    diff = einsum('nij,nbj->nbi', rot, p) - q
    res = sqrt((diff**2).sum((1, 2))/q.shape[0])
    return float(res[0]) if single else res


def rmsd_free_energy(traj: Frames, reference: ndarray,
                     bins: Optional[int] = None,
                     range: Optional[Tuple[float, float]] = None) \
        -> Tuple[Histogram, ndarray]:
    """
    Free energy profile along the RMSD to a reference structure

    :param traj: frames
    :param reference: reference configuration
    :param bins: number of bins
    :param range: binning range

    :return: RMSD histogram and the masked free energy per bin
    """
    h = histogram(rmsd(_frames(traj), reference), bins,
                  None if range is None else [range])
    return h, free_energy(h)


def bond_lengths(traj: Frames) -> ndarray:
    """
    Distances between consecutive beads

    :param traj: frames

    :return: array (n_frames, n_beads - 1)
    """
    x = _frames(traj)
    return linalg.norm(x[:, 1:] - x[:, :-1], axis=-1)


def bond_length_distributions(traj: Frames, bins: Optional[int] = None,
                              range: Optional[Tuple[float, float]] = None) \
        -> TDict[Tuple[int, int], Histogram]:
    """
    Histograms of consecutive-bead distances

    :param traj: frames
    :param bins: number of bins
    :param range: common binning range; defaults to the range of all bonds

    :return: dictionary {(j, j + 1): histogram}
    """
    b = bond_lengths(traj)
    if range is None:
        range = common_range(b.ravel())[0]
    return {(j, j + 1): histogram(b[:, j], bins, [range])
            for j in arange(b.shape[1]).tolist()}


def min_distance_tail(traj: Frames, min_offset: Optional[int] = None) \
        -> ndarray:
    """
    Per-frame minimum distance between sequence-distant beads; small values
    flag unphysical overlaps

    :param traj: frames
    :param min_offset: minimum sequence separation

    :return: array (n_frames,); empty if no pair qualifies
    """
    x = _frames(traj)
    pairs = distant_pairs(x.shape[1], min_offset)
    if not pairs:
        return asarray([], float64)
    return pairwise_distances(x, pairs).min(1)
