"""Explicit scheme for fully nonlinear fluxes ``d_t a + div F(t, x, a) = S``.

``F = (a + b, c + d)`` is split into nondecreasing parts ``a, c`` and
nonincreasing parts ``b, d``.  With ``gamma_f(s)`` the time integral and face
average of ``gamma(t, x, y, s)`` over face ``f`` and ``[t_n, t_{n+1}]``::

    a_ij <- a_ij - (a_{i+1/2}(a_ij) - a_{i-1/2}(a_{i-1,j}) + b_{i+1/2}(a_{i+1,j}) - b_{i-1/2}(a_ij)) / k_i
                 - (c_{j+1/2}(a_ij) - c_{j-1/2}(a_{i,j-1}) + d_{j+1/2}(a_{i,j+1}) - d_{j-1/2}(a_ij)) / h_j
                 + delta * avg_{t, K_ij} S(t, x, a_ij)
"""
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import metrics, quadrature
from .fv2d import CFLError, DiscreteField2D, RunTrace, cell_time_average, steps_for
from .mesh import CartesianGrid2D
from .physics import Split

CFL_MODES = ("theorem", "monotone", "off")


def cfl_nonlinear(grid, lip_F):
    """``delta_max = 1 / (4 Lip(F) max_ij(1/k_i + 1/h_j))``."""
    if lip_F <= 0:
        raise ValueError("Lip(F) must be positive")
    return 1.0 / (4.0 * lip_F * (1.0 / grid.k.min() + 1.0 / grid.h.min()))


def monotone_bound(grid, shifts):
    """Largest ``delta`` keeping every update a convex combination.

    ``a - b`` has slope ``M1`` and ``c - d`` slope ``M2`` in the state, so the
    coefficient of ``a_ij`` is ``1 - delta (M1/k_i + M2/h_j)`` at worst.
    """
    m1, m2 = shifts
    rate = m1 / grid.k.min() + m2 / grid.h.min()
    return np.inf if rate == 0 else 1.0 / rate


@dataclass(frozen=True, eq=False)
class SplitScheme:
    """Split flux, grid and time step for :func:`step_nonlinear`.

    ``boundary="transmissive"`` evaluates boundary faces with the cell's own
    state on both sides; ``"closed"`` drops the boundary fluxes.  ``cfl``
    selects the step check: ``"theorem"`` enforces :func:`cfl_nonlinear` with
    ``Lip(F) = split.shift``, ``"monotone"`` the sharper
    :func:`monotone_bound`.
    """

    grid: CartesianGrid2D
    split: Split
    delta: float
    source: Optional[Callable] = None
    boundary: str = "transmissive"
    cfl: str = "theorem"

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("time step must be positive")
        if self.boundary not in ("transmissive", "closed"):
            raise ValueError("boundary must be 'transmissive' or 'closed'")
        if self.cfl not in CFL_MODES:
            raise ValueError(f"cfl must be one of {CFL_MODES}")
        self.check(self.delta)

    def bound(self):
        if self.cfl == "theorem":
            if self.split.shift == 0:
                return np.inf
            return cfl_nonlinear(self.grid, self.split.shift)
        if self.cfl == "monotone":
            return monotone_bound(self.grid, self.split.shifts)
        return np.inf

    def check(self, delta):
        dmax = self.bound()
        if delta > dmax * (1 + 1e-12):
            raise CFLError(f"time step {delta:.6g} exceeds the {self.cfl} bound {dmax:.6g}")


def _face_integral(gamma, t0, t1, xs, ys, s):
    """``int_{t0}^{t1} avg_face gamma(t, x, y, s) dt`` over a Gauss face rule.

    ``xs``/``ys`` are arrays of 3 node rows (one constant) broadcasting to
    the shape of ``s``.
    """
    out = np.zeros(np.shape(s))
    for wt, st in zip(quadrature.WEIGHTS, quadrature.NODES):
        t = t0 + st * (t1 - t0)
        for wq, x, y in zip(quadrature.WEIGHTS, xs, ys):
            out += wt * wq * gamma(t, x, y, s)
    return (t1 - t0) * out


def face_fluxes(values, scheme, t0, t1):
    """Net numerical fluxes ``(Fx, Fy)`` on x-faces (I+1, J) and y-faces (I, J+1)."""
    grid, sp = scheme.grid, scheme.split
    ni, nj = values.shape
    A = np.empty((ni + 2, nj + 2))
    A[1:-1, 1:-1] = values
    A[0, 1:-1], A[-1, 1:-1] = values[0], values[-1]
    A[1:-1, 0], A[1:-1, -1] = values[:, 0], values[:, -1]

    ys, _ = quadrature.gauss_points(grid.y_edges[:-1], grid.y_edges[1:])
    xe = np.broadcast_to(grid.x_edges[:, None], (ni + 1, nj))
    yq = [np.broadcast_to(y[None, :], (ni + 1, nj)) for y in ys]
    xq = [xe] * len(ys)
    Fx = (_face_integral(sp.a, t0, t1, xq, yq, A[:-1, 1:-1])
          + _face_integral(sp.b, t0, t1, xq, yq, A[1:, 1:-1]))

    xs, _ = quadrature.gauss_points(grid.x_edges[:-1], grid.x_edges[1:])
    ye = np.broadcast_to(grid.y_edges[None, :], (ni, nj + 1))
    xq = [np.broadcast_to(x[:, None], (ni, nj + 1)) for x in xs]
    yq = [ye] * len(xs)
    Fy = (_face_integral(sp.c, t0, t1, xq, yq, A[1:-1, :-1])
          + _face_integral(sp.d, t0, t1, xq, yq, A[1:-1, 1:]))

    if scheme.boundary == "closed":
        Fx[0], Fx[-1] = 0.0, 0.0
        Fy[:, 0], Fy[:, -1] = 0.0, 0.0
    return Fx, Fy


def step_nonlinear(state, scheme, t0, t1):
    """One step of the split scheme from ``t0`` to ``t1``."""
    if state.grid is not scheme.grid and state.grid != scheme.grid:
        raise ValueError("state and scheme live on different grids")
    delta = t1 - t0
    if delta <= 0:
        raise ValueError("t1 must exceed t0")
    scheme.check(delta)
    grid = scheme.grid
    Fx, Fy = face_fluxes(state.values, scheme, t0, t1)
    new = (state.values
           - (Fx[1:] - Fx[:-1]) / grid.k[:, None]
           - (Fy[:, 1:] - Fy[:, :-1]) / grid.h[None, :])
    if scheme.source is not None:
        new = new + delta * cell_time_average(grid, scheme.source, t0, t1, state.values)
    return DiscreteField2D(new, grid, t1)


def run_nonlinear(initial, scheme, T, keep_fields=False):
    """Advance to ``initial.t + T`` with the step shrunk to land on ``T`` exactly."""
    n = steps_for(T, scheme.delta)
    trace = RunTrace()
    trace.record(initial, metrics.bv_xy(initial), keep_fields)
    if n == 0:
        return initial, trace
    delta = T / n
    if delta != scheme.delta:
        scheme = replace(scheme, delta=delta)
    state = initial
    for k in range(n):
        state = step_nonlinear(state, scheme, initial.t + k * delta, initial.t + (k + 1) * delta)
        trace.record(state, metrics.bv_xy(state), keep_fields)
    return state, trace
