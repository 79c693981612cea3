"""Gauss rules shared by the solvers (face, cell and time averages)."""
import numpy as np
from numpy.polynomial.legendre import leggauss

#: points per direction for every face/cell/time average
ORDER = 3

_x, _w = leggauss(ORDER)
#: nodes and weights on [0, 1], weights summing to 1
NODES = (_x + 1.0) / 2.0
WEIGHTS = _w / 2.0

# degree-2 rule on a triangle: edge midpoints, equal weights
_TRI_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])


def gauss_points(lo, hi):
    """Nodes and weights (summing to 1) for averaging over ``[lo, hi]``.

    ``lo`` and ``hi`` may be arrays; the node axis is the leading one.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    pts = lo[None, ...] + NODES.reshape((-1,) + (1,) * lo.ndim) * (hi - lo)[None, ...]
    return pts, WEIGHTS


def time_average(func, t0, t1):
    """Average of ``func(t)`` over ``[t0, t1]`` with the 3-point rule."""
    total = 0.0
    for w, s in zip(WEIGHTS, NODES):
        total = total + w * func(t0 + s * (t1 - t0))
    return total


def polygon_rule(verts):
    """Quadrature points and weights (summing to 1) for a polygon average.

    The polygon is fanned from its vertex mean and each triangle gets the
    edge-midpoint rule, weighted by its area.
    """
    verts = np.asarray(verts, dtype=float)
    c = verts.mean(axis=0)
    nxt = np.roll(verts, -1, axis=0)
    pts, wts = [], []
    for p, q in zip(verts, nxt):
        area = 0.5 * ((p[0] - c[0]) * (q[1] - c[1]) - (q[0] - c[0]) * (p[1] - c[1]))
        tri = np.array([c, p, q])
        pts.append(_TRI_BARY @ tri)
        wts.append(np.full(3, area / 3.0))
    pts = np.concatenate(pts)
    wts = np.concatenate(wts)
    return pts, wts / wts.sum()
