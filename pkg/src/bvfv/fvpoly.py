"""First-order monotone upwind scheme on polygonal meshes.

For a cell ``K`` with edges ``e`` (outward normal velocity ``V_e``, averaged
over the edge and the time step)::

    a_K <- a_K - delta/|K| sum_e |e| (V_e+ g(a_K, a_L) - V_e- g(a_L, a_K)) + delta avg S

On a Cartesian mesh this is exactly the 2D Cartesian update.
"""
import weakref
from dataclasses import dataclass, field

import numpy as np

from . import metrics, quadrature
from .fv2d import CFLError, steps_for
from .mesh import PolygonalMesh


@dataclass(frozen=True, eq=False)
class PolyField:
    values: np.ndarray
    mesh: PolygonalMesh
    t: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.mesh.n_cells,):
            raise ValueError(f"expected {self.mesh.n_cells} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def mass(self):
        return float(np.dot(self.mesh.areas, self.values))


def cell_average(mesh, func, t=None):
    """Cell averages of ``func(x, y)`` (or ``func(t, x, y)``); exact for area-fraction data."""
    if hasattr(func, "average_loops"):
        p, q, owner = mesh.boundary_segments
        return func.average_loops(0.0 if t is None else t, p, q, owner, mesh.areas)
    if t is None:
        return mesh.cell_average(func)
    return mesh.cell_average(lambda x, y: func(t, x, y))


def project_initial(alpha0, mesh):
    return PolyField(cell_average(mesh, alpha0), mesh, 0.0)


def edge_velocities(mesh, velocity, t0, t1, closed=True):
    """Edge/time averages of ``u . n_e`` (left to right)."""
    p = mesh.vertices[mesh.edge_vertices[:, 0]]
    d = mesh.vertices[mesh.edge_vertices[:, 1]] - p
    nx, ny = mesh.normals[:, 0], mesh.normals[:, 1]
    V = np.zeros(mesh.n_edges)
    for wt, st in zip(quadrature.WEIGHTS, quadrature.NODES):
        t = t0 + st * (t1 - t0)
        for ws, ss in zip(quadrature.WEIGHTS, quadrature.NODES):
            u, v = velocity(t, p[:, 0] + ss * d[:, 0], p[:, 1] + ss * d[:, 1])
            V += wt * ws * (u * nx + v * ny)
    if closed:
        V[~mesh.interior] = 0.0
    return V


def max_timestep_poly(mesh, lip_g, u_sup):
    """Conservative bound ``4 delta max_K(perimeter/|K|) Lip(g) |u| <= 1``."""
    if lip_g * u_sup == 0:
        return np.inf
    return 1.0 / (4.0 * np.max(mesh.perimeters / mesh.areas) * lip_g * u_sup)


def local_courant(mesh, V, g, delta):
    """``delta/|K| sum_e |e| (V_out+ lip_a + V_out- lip_b)`` per cell.

    The update is a convex combination of neighbouring states exactly when
    this is at most 1.
    """
    out = np.zeros(mesh.n_cells)
    left, right = mesh.edge_cells[:, 0], mesh.edge_cells[:, 1]
    L = mesh.lengths
    np.add.at(out, left, L * (np.maximum(V, 0) * g.lip_a + np.maximum(-V, 0) * g.lip_b))
    inner = mesh.interior
    Vi = -V[inner]
    np.add.at(out, right[inner], L[inner] * (np.maximum(Vi, 0) * g.lip_a
                                              + np.maximum(-Vi, 0) * g.lip_b))
    return delta * out / mesh.areas


_MIRRORS = weakref.WeakKeyDictionary()


def _mirrored_cells(mesh):
    """Boundary cells reflected across their boundary edge, as segments.

    Returns ``(edges, p, q, owner, areas)`` where ``owner`` indexes
    ``edges``; cached per mesh.
    """
    if mesh not in _MIRRORS:
        bnd = np.flatnonzero(~mesh.interior)
        ps, qs, owner, pts, wts, qowner = [], [], [], [], [], []
        for k, e in enumerate(bnd):
            p0 = mesh.vertices[mesh.edge_vertices[e, 0]]
            n = mesh.normals[e]
            verts = mesh.vertices[mesh.cells[mesh.edge_cells[e, 0]]]
            refl = (verts - 2.0 * ((verts - p0) @ n)[:, None] * n[None, :])[::-1]
            ps.append(refl)
            qs.append(np.roll(refl, -1, axis=0))
            owner.append(np.full(len(refl), k))
            qp, qw = quadrature.polygon_rule(refl)
            pts.append(qp)
            wts.append(qw)
            qowner.append(np.full(len(qw), k))
        areas = mesh.areas[mesh.edge_cells[bnd, 0]]
        cat = (lambda xs: np.concatenate(xs)) if len(bnd) else (lambda xs: np.zeros(0))
        _MIRRORS[mesh] = (bnd, cat(ps), cat(qs), cat(owner).astype(int), areas,
                          (cat(pts), cat(wts), cat(qowner).astype(int)))
    return _MIRRORS[mesh]


def ghost_values(mesh, ghost, t):
    """Averages of ``ghost`` at ``t`` over the mirrored boundary cells."""
    bnd, p, q, owner, areas, (pts, wts, qowner) = _mirrored_cells(mesh)
    if hasattr(ghost, "average_loops"):
        return bnd, ghost.average_loops(t, p, q, owner, areas)
    vals = np.bincount(qowner, wts * ghost(t, pts[:, 0], pts[:, 1]), minlength=len(bnd))
    return bnd, vals


def source_average(mesh, source, state_values, t0, t1):
    """``avg_{[t0,t1] x K} S(t, x, y, a_K)``."""
    pts, wts, owner = mesh.quad_rule
    z = state_values[owner]
    out = np.zeros(mesh.n_cells)
    for wt, st in zip(quadrature.WEIGHTS, quadrature.NODES):
        t = t0 + st * (t1 - t0)
        out += wt * np.bincount(owner, wts * source(t, pts[:, 0], pts[:, 1], z),
                                minlength=mesh.n_cells)
    return out


def step_poly(state, mesh, velocity, g, delta, t_n, source=None, boundary="closed",
              ghost=None, check_cfl=True):
    """One upwind step of length ``delta`` starting at ``t_n``.

    ``boundary`` is ``"closed"`` (no flux through outer edges),
    ``"transmissive"`` (exterior state = interior state) or ``"inflow"``
    (exterior state = ``ghost`` averaged over the mirrored cell at ``t_n``).
    Raises :class:`CFLError` if the update would not be a convex combination.
    """
    if state.mesh is not mesh:
        raise ValueError("state lives on a different mesh")
    if delta <= 0:
        raise ValueError("time step must be positive")
    t1 = t_n + delta
    V = edge_velocities(mesh, velocity, t_n, t1, closed=boundary == "closed")
    if check_cfl:
        c = local_courant(mesh, V, g, delta)
        if c.max() > 1 + 1e-9:
            raise CFLError(f"local Courant number {c.max():.4g} exceeds 1")
    a = state.values
    left, right = mesh.edge_cells[:, 0], mesh.edge_cells[:, 1]
    outer = a.copy()[left]  # exterior/right state per edge
    inner = mesh.interior
    outer[inner] = a[right[inner]]
    if boundary == "inflow":
        bnd, vals = ghost_values(mesh, ghost, t_n)
        outer[bnd] = vals
    elif boundary not in ("closed", "transmissive"):
        raise ValueError(f"unknown boundary mode {boundary!r}")
    aL = a[left]
    flux = mesh.lengths * (np.maximum(V, 0) * g(aL, outer) - np.maximum(-V, 0) * g(outer, aL))
    div = np.bincount(left, flux, minlength=mesh.n_cells)
    div -= np.bincount(right[inner], flux[inner], minlength=mesh.n_cells)
    new = a - delta * div / mesh.areas
    if source is not None:
        new = new + delta * source_average(mesh, source, a, t_n, t1)
    return PolyField(new, mesh, t1)


@dataclass
class PolyTrace:
    times: list = field(default_factory=list)
    bv: list = field(default_factory=list)
    sup: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    fields: list = field(default_factory=list)

    def record(self, state, keep):
        self.times.append(state.t)
        self.bv.append(metrics.bv_poly(state))
        self.sup.append(float(np.abs(state.values).max()))
        self.mass.append(state.mass)
        if keep:
            self.fields.append(state.values)


def run_poly(initial, mesh, velocity, g, delta, T, source=None, boundary="closed",
             ghost=None, keep_fields=False, check_cfl=True):
    """Advance to ``initial.t + T`` with the step shrunk to land on ``T`` exactly."""
    n = steps_for(T, delta)
    trace = PolyTrace()
    trace.record(initial, keep_fields)
    if n == 0:
        return initial, trace
    delta = T / n
    state = initial
    for k in range(n):
        state = step_poly(state, mesh, velocity, g, delta, initial.t + k * delta, source,
                          boundary, ghost, check_cfl)
        trace.record(state, keep_fields)
    return state, trace
