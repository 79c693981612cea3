"""Explicit monotone finite volume scheme on nonuniform 2D Cartesian grids.

Update for cell ``K_ij`` with ``mu_i = delta/k_i`` and ``lambda_j = delta/h_j``::

    a_ij <- a_ij - mu_i (F_{i+1/2,j} - F_{i-1/2,j}) - lambda_j (G_{i,j+1/2} - G_{i,j-1/2})
            + delta * avg_{t, K_ij} S(t, x, a_ij)

with upwinded face fluxes ``F = u+ g(a_L, a_R) - u- g(a_R, a_L)`` built from
time/face averages of the velocity.
"""
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import metrics, quadrature
from .mesh import CartesianGrid2D
from .physics import NumericalFlux, VelocityField

BOUNDARY_MODES = ("closed", "transmissive", "inflow")


class CFLError(ValueError):
    """Time step too large for the stability condition."""


@dataclass(frozen=True, eq=False)
class DiscreteField2D:
    values: np.ndarray
    grid: CartesianGrid2D
    t: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def mass(self):
        return float(np.sum(self.grid.areas * self.values))


def max_timestep(grid, lip_g, u_sup):
    """Largest ``delta`` with ``4 delta max(1/k_i + 1/h_j) Lip(g) |u| <= 1``."""
    if lip_g * u_sup == 0:
        return np.inf
    m = 1.0 / grid.k.min() + 1.0 / grid.h.min()
    return 1.0 / (4.0 * m * lip_g * u_sup)


@dataclass(frozen=True, eq=False)
class SchemeConfig:
    """Everything the update needs besides the state.

    ``boundary``: ``"closed"`` (zero flux through the outer faces),
    ``"transmissive"`` (exterior state equals the adjacent cell) or
    ``"inflow"`` (exterior state is the average of ``ghost`` over the cell
    mirrored across the boundary; ``ghost`` is ``ghost(t, x, y)`` or has an
    ``average_box`` method).
    """

    grid: CartesianGrid2D
    flux: NumericalFlux
    velocity: VelocityField
    delta: float
    source: Optional[Callable] = None
    boundary: str = "closed"
    ghost: Optional[Callable] = None
    check_cfl: bool = True
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("time step must be positive")
        if self.boundary not in BOUNDARY_MODES:
            raise ValueError(f"boundary must be one of {BOUNDARY_MODES}")
        if self.boundary == "inflow" and self.ghost is None:
            raise ValueError("inflow boundary needs ghost data")
        if self.check_cfl:
            check_cfl(self.grid, self.flux.lipschitz, self.velocity.sup_bound, self.delta)

    @property
    def mu(self):
        return self.delta / self.grid.k

    @property
    def lam(self):
        return self.delta / self.grid.h


def check_cfl(grid, lip_g, u_sup, delta):
    dmax = max_timestep(grid, lip_g, u_sup)
    if delta > dmax * (1 + 1e-12):
        raise CFLError(f"time step {delta:.6g} exceeds the CFL bound {dmax:.6g}")


def face_velocities(grid, velocity, t0, t1, closed=True):
    """Time/face averages ``U`` on x-faces (I+1, J) and ``V`` on y-faces (I, J+1)."""
    ys, _ = quadrature.gauss_points(grid.y_edges[:-1], grid.y_edges[1:])
    xs, _ = quadrature.gauss_points(grid.x_edges[:-1], grid.x_edges[1:])
    W = quadrature.WEIGHTS
    U = np.zeros((grid.x_edges.size, ys.shape[1]))
    V = np.zeros((xs.shape[1], grid.y_edges.size))
    for wt, st in zip(W, quadrature.NODES):
        t = t0 + st * (t1 - t0)
        for q in range(len(W)):
            U += wt * W[q] * velocity(t, grid.x_edges[:, None], ys[q][None, :])[0]
            V += wt * W[q] * velocity(t, xs[q][:, None], grid.y_edges[None, :])[1]
    if closed:
        U[0], U[-1] = 0.0, 0.0
        V[:, 0], V[:, -1] = 0.0, 0.0
    return U, V


def cell_time_average(grid, func, t0, t1, state=None):
    """``avg_{[t0,t1] x K_ij} func(t, x, y[, state_ij])`` with 3x3x3 Gauss."""
    xs, _ = quadrature.gauss_points(grid.x_edges[:-1], grid.x_edges[1:])
    ys, _ = quadrature.gauss_points(grid.y_edges[:-1], grid.y_edges[1:])
    W = quadrature.WEIGHTS
    out = np.zeros(grid.shape)
    for wt, st in zip(W, quadrature.NODES):
        t = t0 + st * (t1 - t0)
        for p in range(len(W)):
            for q in range(len(W)):
                X, Y = xs[p][:, None], ys[q][None, :]
                val = func(t, X, Y) if state is None else func(t, X, Y, state)
                out += wt * W[p] * W[q] * val
    return out


def cell_average(grid, func, t=None):
    """Cell averages of ``func(x, y)`` (or ``func(t, x, y)`` when ``t`` is given).

    Functions offering ``average_box(t, x0, x1, y0, y1)`` are averaged
    exactly; everything else uses the 3x3 Gauss rule.
    """
    if hasattr(func, "average_box"):
        x0, x1 = grid.x_edges[:-1, None], grid.x_edges[1:, None]
        y0, y1 = grid.y_edges[None, :-1], grid.y_edges[None, 1:]
        return np.broadcast_to(func.average_box(0.0 if t is None else t, x0, x1, y0, y1),
                               grid.shape).astype(float)
    xs, _ = quadrature.gauss_points(grid.x_edges[:-1], grid.x_edges[1:])
    ys, _ = quadrature.gauss_points(grid.y_edges[:-1], grid.y_edges[1:])
    W = quadrature.WEIGHTS
    out = np.zeros(grid.shape)
    for p in range(len(W)):
        for q in range(len(W)):
            X, Y = xs[p][:, None], ys[q][None, :]
            out += W[p] * W[q] * (func(X, Y) if t is None else func(t, X, Y))
    return out


def project_initial(alpha0, grid):
    """Cell averages of the initial data."""
    return DiscreteField2D(cell_average(grid, alpha0), grid, 0.0)


def _ghost_averages(grid, ghost, t):
    """Averages of ``ghost`` at time ``t`` over the cells mirrored outside the grid."""
    xe, ye = grid.x_edges, grid.y_edges
    left = CartesianGrid2D([2 * xe[0] - xe[1], xe[0]], ye)
    right = CartesianGrid2D([xe[-1], 2 * xe[-1] - xe[-2]], ye)
    bottom = CartesianGrid2D(xe, [2 * ye[0] - ye[1], ye[0]])
    top = CartesianGrid2D(xe, [ye[-1], 2 * ye[-1] - ye[-2]])
    return tuple(cell_average(g, ghost, t) for g in (left, right, bottom, top))


def padded_state(alpha, config, t):
    """State with one ring of exterior values (corners unused)."""
    ni, nj = alpha.shape
    A = np.zeros((ni + 2, nj + 2))
    A[1:-1, 1:-1] = alpha
    if config.boundary == "inflow":
        left, right, bottom, top = _ghost_averages(config.grid, config.ghost, t)
        A[0, 1:-1], A[-1, 1:-1] = left[0], right[0]
        A[1:-1, 0], A[1:-1, -1] = bottom[:, 0], top[:, 0]
    else:
        A[0, 1:-1], A[-1, 1:-1] = alpha[0], alpha[-1]
        A[1:-1, 0], A[1:-1, -1] = alpha[:, 0], alpha[:, -1]
    return A


def _face_data(state, config, t0, t1):
    grid = config.grid
    key = (float(t0), float(t1))
    cache = config._cache
    if cache.get("key") != key:
        U, V = face_velocities(grid, config.velocity, t0, t1, closed=config.boundary == "closed")
        cache.clear()
        cache.update(key=key, U=U, V=V)
    return cache["U"], cache["V"], padded_state(state.values, config, t0)


def _check_step(state, config, t0, t1):
    if state.grid is not config.grid and state.grid != config.grid:
        raise ValueError("state and scheme live on different grids")
    delta = t1 - t0
    if delta <= 0:
        raise ValueError("t1 must exceed t0")
    if config.check_cfl:
        check_cfl(config.grid, config.flux.lipschitz, config.velocity.sup_bound, delta)


def _source_term(state, config, t0, t1):
    if config.source is None:
        return 0.0
    return (t1 - t0) * cell_time_average(config.grid, config.source, t0, t1, state.values)


def step(state, config, t0, t1):
    """One step of the flux-form update from ``t0`` to ``t1``."""
    _check_step(state, config, t0, t1)
    g = config.flux
    U, V, A = _face_data(state, config, t0, t1)
    delta = t1 - t0
    AL, AR = A[:-1, 1:-1], A[1:, 1:-1]
    F = np.maximum(U, 0) * g(AL, AR) - np.maximum(-U, 0) * g(AR, AL)
    AB, AT = A[1:-1, :-1], A[1:-1, 1:]
    G = np.maximum(V, 0) * g(AB, AT) - np.maximum(-V, 0) * g(AT, AB)
    grid = config.grid
    new = (state.values
           - (delta / grid.k)[:, None] * (F[1:] - F[:-1])
           - (delta / grid.h)[None, :] * (G[:, 1:] - G[:, :-1])
           + _source_term(state, config, t0, t1))
    return DiscreteField2D(new, grid, t1)


def difference_quotient(g, center, a, b):
    """``(g(a, b) - g(c, c)) / (a - b)``, zero where ``a == b``."""
    fc = g(center, center)
    diff = a - b
    same = diff == 0
    return np.where(same, 0.0, (g(a, b) - fc) / np.where(same, 1.0, diff))


def convex_coefficients(state, config, t0, t1):
    """Nonnegative weights ``mu M^x``/``lambda M^y`` of the four neighbours.

    Returns ``(west, east, south, north)`` arrays; the update is
    ``a + sum_nb w_nb (a_nb - a) - f(a) * int div u + source``.
    """
    g = config.flux
    U, V, A = _face_data(state, config, t0, t1)
    c = A[1:-1, 1:-1]
    W_, E_ = A[:-2, 1:-1], A[2:, 1:-1]
    S_, N_ = A[1:-1, :-2], A[1:-1, 2:]
    Uw, Ue = U[:-1], U[1:]
    Vs, Vn = V[:, :-1], V[:, 1:]
    pos, neg = (lambda v: np.maximum(v, 0)), (lambda v: np.maximum(-v, 0))
    Mw = pos(Uw) * difference_quotient(g, c, W_, c) + neg(Uw) * difference_quotient(g, c, c, W_)
    Me = pos(Ue) * difference_quotient(g, c, c, E_) + neg(Ue) * difference_quotient(g, c, E_, c)
    Ms = pos(Vs) * difference_quotient(g, c, S_, c) + neg(Vs) * difference_quotient(g, c, c, S_)
    Mn = pos(Vn) * difference_quotient(g, c, c, N_) + neg(Vn) * difference_quotient(g, c, N_, c)
    grid = config.grid
    delta = t1 - t0
    mu = (delta / grid.k)[:, None]
    lam = (delta / grid.h)[None, :]
    return mu * Mw, mu * Me, lam * Ms, lam * Mn


def step_convex(state, config, t0, t1):
    """Same update as :func:`step`, written as a convex combination.

    The divergence term uses the discrete divergence of the face-averaged
    velocities, which is the exact cell/time integral of ``div u`` when the
    face averages are exact.
    """
    _check_step(state, config, t0, t1)
    U, V, A = _face_data(state, config, t0, t1)
    w, e, s, n = convex_coefficients(state, config, t0, t1)
    c = A[1:-1, 1:-1]
    grid = config.grid
    delta = t1 - t0
    div_int = ((delta / grid.k)[:, None] * (U[1:] - U[:-1])
               + (delta / grid.h)[None, :] * (V[:, 1:] - V[:, :-1]))
    new = (c * (1 - w - e - s - n)
           + w * A[:-2, 1:-1] + e * A[2:, 1:-1] + s * A[1:-1, :-2] + n * A[1:-1, 2:]
           - config.flux.flux(c) * div_int
           + _source_term(state, config, t0, t1))
    return DiscreteField2D(new, grid, t1)


@dataclass
class RunTrace:
    """Per-step diagnostics of a run (index 0 is the initial state)."""

    times: list = field(default_factory=list)
    bv: list = field(default_factory=list)
    sup: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    fields: list = field(default_factory=list)

    def record(self, state, bv, keep):
        self.times.append(state.t)
        self.bv.append(bv)
        self.sup.append(float(np.abs(state.values).max()))
        self.mass.append(state.mass)
        if keep:
            self.fields.append(state.values)


def steps_for(T, delta):
    """Number of steps so that ``T / n <= delta`` and lands on ``T`` exactly."""
    if T <= 0:
        return 0
    return int(np.ceil(T / delta * (1 - 1e-12)))


def run(initial, config, T, keep_fields=False, stepper=step):
    """Advance ``initial`` to time ``initial.t + T``.

    The step is shrunk to ``T / ceil(T / delta)`` so the last step ends at
    ``T`` exactly.  Returns the final field and a :class:`RunTrace`.
    """
    n = steps_for(T, config.delta)
    trace = RunTrace()
    trace.record(initial, metrics.bv_xy(initial), keep_fields)
    if n == 0:
        return initial, trace
    delta = T / n
    if delta != config.delta:
        config = replace(config, delta=delta, _cache={})
    state = initial
    t0 = initial.t
    for k in range(n):
        ta, tb = t0 + k * delta, t0 + (k + 1) * delta
        state = stepper(state, config, ta, tb)
        trace.record(state, metrics.bv_xy(state), keep_fields)
    return state, trace
