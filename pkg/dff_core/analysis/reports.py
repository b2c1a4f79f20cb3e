"""
DFF Core: analysis report writers

Reports are named "<metric>_<what>.<ext>", e.g. "tic_free_energy_ref.svg" or
"msm_transition_ref.csv"; all metric values go to a single metrics JSON file.
"""

import os
from math import isfinite
from typing import Any, Dict as TDict, Optional, Sequence, Tuple

from matplotlib.figure import Figure
from numpy import asarray, float64, generic, ma, ndarray, savetxt

from .. import json_dumps


__all__ = [
    'report_name', 'write_csv', 'write_heatmap_svg', 'write_metrics_json',
]


def report_name(metric: str, what: str, ext: str) -> str:
    return '{}_{}.{}'.format(metric, what, ext)


def _finite_or_none(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_none(v) for v in obj]
    if isinstance(obj, ndarray):
        return _finite_or_none(obj.tolist())
    if isinstance(obj, generic):
        obj = obj.item()
    if isinstance(obj, float) and not isfinite(obj):
        return None
    return obj


def write_metrics_json(path: str, metrics: TDict[str, Any]) -> None:
    """
    Write named metric values as JSON; non-finite values become null

    :param path: output file path
    :param metrics: metric values, possibly nested
    """
    with open(path, 'w') as f:
        f.write(json_dumps(_finite_or_none(metrics), indent=2, sort_keys=True))
        f.write('\n')


def write_csv(path: str, header: Sequence[str], rows: Any,
              fmt: str = '%.10g') -> None:
    """
    Write a numeric table as comma-separated values with a header line

    :param path: output file path
    :param header: column names
    :param rows: 2D array-like of numbers
    :param fmt: number format
    """
    data = asarray(rows, float64).reshape(-1, len(header))
    savetxt(path, data, fmt=fmt, delimiter=',', header=','.join(header),
            comments='')


def write_heatmap_svg(path: str, values: ndarray,
                      extent: Optional[
                          Tuple[float, float, float, float]] = None,
                      title: str = '', xlabel: str = '', ylabel: str = '',
                      cmap: str = 'viridis') -> None:
    """
    Render a 2D array, e.g. a free energy surface or a contact map, as an SVG
    heatmap; masked cells are left blank

    :param path: output file path
    :param values: 2D array indexed [x, y]; may be masked
    :param extent: (xmin, xmax, ymin, ymax) of the axes; defaults to indices
    :param title: plot title
    :param xlabel: x axis label
    :param ylabel: y axis label
    :param cmap: colormap name
    """
    values = ma.asarray(values)
    fig = Figure(figsize=(5, 4))
    ax = fig.add_subplot(1, 1, 1)
    im = ax.imshow(values.T, origin='lower', aspect='auto', cmap=cmap,
                   extent=extent, interpolation='nearest')
    fig.colorbar(im, ax=ax)
    if title:
        ax.set_title(title)
    if xlabel:
        ax.set_xlabel(xlabel)
    if ylabel:
        ax.set_ylabel(ylabel)
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    fig.savefig(path, format='svg')
