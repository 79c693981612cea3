"""Three-dimensional analogue of the Cartesian scheme on nonuniform boxes.

Faces carry time/face averages of ``u``, ``v`` and ``w``; each direction
contributes an upwinded flux difference exactly as in two dimensions.
"""
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import metrics, quadrature
from .fv2d import CFLError, RunTrace, steps_for
from .mesh import CartesianGrid3D
from .physics import NumericalFlux, VelocityField


@dataclass(frozen=True, eq=False)
class DiscreteField3D:
    values: np.ndarray
    grid: CartesianGrid3D
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
        return float(np.sum(self.grid.volumes * self.values))


def cfl_3d(grid, lip_g, u_sup):
    """Largest ``delta`` with ``4 delta max(1/k_i + 1/h_j + 1/l_m) Lip(g) |u| <= 1``."""
    if lip_g * u_sup == 0:
        return np.inf
    m = 1.0 / grid.k.min() + 1.0 / grid.h.min() + 1.0 / grid.l.min()
    return 1.0 / (4.0 * m * lip_g * u_sup)


def extrude_velocity(field2d):
    """3D field ``(u(t, x, y), v(t, x, y), 0)`` from a planar one."""

    def comps(t, x, y, z):
        u, v = field2d(t, x, y)
        shape = np.broadcast(np.asarray(x), np.asarray(y), np.asarray(z)).shape
        return np.broadcast_to(u, shape), np.broadcast_to(v, shape), np.zeros(shape)

    def div(t, x, y, z):
        shape = np.broadcast(np.asarray(x), np.asarray(y), np.asarray(z)).shape
        return np.broadcast_to(field2d.divergence(t, x, y), shape)

    return VelocityField(comps, div, field2d.sup_bound, f"extruded {field2d.name}", 3)


def _box_rule(grid):
    return tuple(quadrature.gauss_points(e[:-1], e[1:])[0]
                 for e in (grid.x_edges, grid.y_edges, grid.z_edges))


def cell_average(grid, func, t=None):
    """Cell averages of ``func(x, y, z)`` (or ``func(t, x, y, z)``) with 3x3x3 Gauss."""
    xs, ys, zs = _box_rule(grid)
    W = quadrature.WEIGHTS
    out = np.zeros(grid.shape)
    for p in range(len(W)):
        for q in range(len(W)):
            for r in range(len(W)):
                X, Y, Z = xs[p][:, None, None], ys[q][None, :, None], zs[r][None, None, :]
                val = func(X, Y, Z) if t is None else func(t, X, Y, Z)
                out += W[p] * W[q] * W[r] * val
    return out


def project_initial(alpha0, grid):
    return DiscreteField3D(cell_average(grid, alpha0), grid, 0.0)


@dataclass(frozen=True, eq=False)
class SchemeConfig3D:
    """``boundary`` is ``"closed"`` or ``"transmissive"``; ``source(t, x, y, z, state)``."""

    grid: CartesianGrid3D
    flux: NumericalFlux
    velocity: VelocityField
    delta: float
    source: Optional[Callable] = None
    boundary: str = "closed"
    check_cfl: bool = True
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("time step must be positive")
        if self.boundary not in ("closed", "transmissive"):
            raise ValueError("boundary must be 'closed' or 'transmissive'")
        if self.check_cfl:
            _check(self, self.delta)


def _check(config, delta):
    dmax = cfl_3d(config.grid, config.flux.lipschitz, config.velocity.sup_bound)
    if delta > dmax * (1 + 1e-12):
        raise CFLError(f"time step {delta:.6g} exceeds the CFL bound {dmax:.6g}")


def face_velocities(grid, velocity, t0, t1, closed=True):
    """Face/time averages ``(U, V, W)`` of shapes (I+1,J,L), (I,J+1,L), (I,J,L+1)."""
    xs, ys, zs = _box_rule(grid)
    xe, ye, ze = grid.x_edges, grid.y_edges, grid.z_edges
    ni, nj, nl = grid.shape
    U = np.zeros((ni + 1, nj, nl))
    V = np.zeros((ni, nj + 1, nl))
    Wf = np.zeros((ni, nj, nl + 1))
    W = quadrature.WEIGHTS
    for wt, st in zip(W, quadrature.NODES):
        t = t0 + st * (t1 - t0)
        for p in range(len(W)):
            for q in range(len(W)):
                w = wt * W[p] * W[q]
                U += w * velocity(t, xe[:, None, None], ys[p][None, :, None], zs[q][None, None, :])[0]
                V += w * velocity(t, xs[p][:, None, None], ye[None, :, None], zs[q][None, None, :])[1]
                Wf += w * velocity(t, xs[p][:, None, None], ys[q][None, :, None], ze[None, None, :])[2]
    if closed:
        U[0], U[-1] = 0.0, 0.0
        V[:, 0], V[:, -1] = 0.0, 0.0
        Wf[:, :, 0], Wf[:, :, -1] = 0.0, 0.0
    return U, V, Wf


def _upwind(g, vel, left, right):
    return np.maximum(vel, 0) * g(left, right) - np.maximum(-vel, 0) * g(right, left)


def step3d(state, config, t0, t1):
    """One step from ``t0`` to ``t1``."""
    if state.grid is not config.grid and state.grid != config.grid:
        raise ValueError("state and scheme live on different grids")
    delta = t1 - t0
    if delta <= 0:
        raise ValueError("t1 must exceed t0")
    if config.check_cfl:
        _check(config, delta)
    grid, g = config.grid, config.flux
    key = (float(t0), float(t1))
    if config._cache.get("key") != key:
        config._cache.clear()
        config._cache.update(key=key, faces=face_velocities(
            grid, config.velocity, t0, t1, closed=config.boundary == "closed"))
    U, V, W = config._cache["faces"]
    A = np.pad(state.values, 1, mode="edge")
    inner = A[1:-1, 1:-1, 1:-1]
    Fx = _upwind(g, U, A[:-1, 1:-1, 1:-1], A[1:, 1:-1, 1:-1])
    Fy = _upwind(g, V, A[1:-1, :-1, 1:-1], A[1:-1, 1:, 1:-1])
    Fz = _upwind(g, W, A[1:-1, 1:-1, :-1], A[1:-1, 1:-1, 1:])
    new = (inner
           - (delta / grid.k)[:, None, None] * (Fx[1:] - Fx[:-1])
           - (delta / grid.h)[None, :, None] * (Fy[:, 1:] - Fy[:, :-1])
           - (delta / grid.l)[None, None, :] * (Fz[:, :, 1:] - Fz[:, :, :-1]))
    if config.source is not None:
        xs, ys, zs = _box_rule(grid)
        Q = quadrature.WEIGHTS
        avg = np.zeros(grid.shape)
        for wt, st in zip(Q, quadrature.NODES):
            t = t0 + st * delta
            for p in range(len(Q)):
                for q in range(len(Q)):
                    for r in range(len(Q)):
                        avg += wt * Q[p] * Q[q] * Q[r] * config.source(
                            t, xs[p][:, None, None], ys[q][None, :, None], zs[r][None, None, :],
                            state.values)
        new = new + delta * avg
    return DiscreteField3D(new, grid, t1)


def run3d(initial, config, T, keep_fields=False):
    """Advance to ``initial.t + T`` with the step shrunk to land on ``T`` exactly."""
    n = steps_for(T, config.delta)
    trace = RunTrace()
    trace.record(initial, metrics.bv_xyz(initial), keep_fields)
    if n == 0:
        return initial, trace
    delta = T / n
    if delta != config.delta:
        config = replace(config, delta=delta, _cache={})
    state = initial
    for k in range(n):
        state = step3d(state, config, initial.t + k * delta, initial.t + (k + 1) * delta)
        trace.record(state, metrics.bv_xyz(state), keep_fields)
    return state, trace
