"""Nonuniform Cartesian grids (2D/3D) and polygonal meshes.

A :class:`CartesianGrid2D` is described entirely by its edge coordinates;
cell ``(i, j)`` is ``(x_edges[i], x_edges[i+1]) x (y_edges[j], y_edges[j+1])``.
Polygonal meshes carry explicit vertices, cells and edges and are used for the
non-Cartesian families (hexagonal, triangular, staggered, perturbed).
"""
from dataclasses import dataclass, field, fields
from functools import cached_property

import numpy as np

from . import quadrature

BOUNDARY = -1

FAMILIES = ("cartesian", "perturbed_cartesian", "hexagonal", "triangular", "staggered")

#: relative size of the random vertex displacement for perturbed meshes
PERTURBATION = 0.25


class MeshError(ValueError):
    """Invalid partition or degenerate mesh."""


def _edges_array(edges, name):
    e = np.asarray(edges, dtype=float)
    if e.ndim != 1 or e.size < 2:
        raise MeshError(f"{name} needs at least two coordinates")
    if not np.all(np.isfinite(e)):
        raise MeshError(f"{name} contains non-finite values")
    if np.any(np.diff(e) <= 0):
        raise MeshError(f"{name} must be strictly increasing")
    e = e.copy()
    e.setflags(write=False)
    return e


class _EdgeEquality:
    """Grids compare equal when their edge arrays match exactly."""

    __hash__ = None

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return all(np.array_equal(getattr(self, f.name), getattr(other, f.name))
                   for f in fields(self))


@dataclass(frozen=True, eq=False)
class CartesianGrid2D(_EdgeEquality):
    x_edges: np.ndarray
    y_edges: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_edges", _edges_array(self.x_edges, "x_edges"))
        object.__setattr__(self, "y_edges", _edges_array(self.y_edges, "y_edges"))

    @property
    def shape(self):
        return (self.x_edges.size - 1, self.y_edges.size - 1)

    @cached_property
    def k(self):
        """Cell widths in x."""
        return np.diff(self.x_edges)

    @cached_property
    def h(self):
        """Cell widths in y."""
        return np.diff(self.y_edges)

    @property
    def h_max(self):
        return float(max(self.k.max(), self.h.max()))

    @property
    def domain(self):
        return (self.x_edges[0], self.x_edges[-1], self.y_edges[0], self.y_edges[-1])

    @cached_property
    def areas(self):
        return np.outer(self.k, self.h)

    @cached_property
    def x_centers(self):
        return 0.5 * (self.x_edges[:-1] + self.x_edges[1:])

    @cached_property
    def y_centers(self):
        return 0.5 * (self.y_edges[:-1] + self.y_edges[1:])


@dataclass(frozen=True, eq=False)
class CartesianGrid3D(_EdgeEquality):
    x_edges: np.ndarray
    y_edges: np.ndarray
    z_edges: np.ndarray

    def __post_init__(self):
        for name in ("x_edges", "y_edges", "z_edges"):
            object.__setattr__(self, name, _edges_array(getattr(self, name), name))

    @property
    def shape(self):
        return (self.x_edges.size - 1, self.y_edges.size - 1, self.z_edges.size - 1)

    @cached_property
    def k(self):
        return np.diff(self.x_edges)

    @cached_property
    def h(self):
        return np.diff(self.y_edges)

    @cached_property
    def l(self):  # noqa: E743
        return np.diff(self.z_edges)

    @property
    def h_max(self):
        return float(max(self.k.max(), self.h.max(), self.l.max()))

    @cached_property
    def volumes(self):
        return self.k[:, None, None] * self.h[None, :, None] * self.l[None, None, :]

    def xy_grid(self):
        """The 2D grid obtained by dropping the z direction."""
        return CartesianGrid2D(self.x_edges, self.y_edges)


def build_cartesian(x_edges, y_edges):
    """Grid with cells ``(x_{i-1/2}, x_{i+1/2}) x (y_{j-1/2}, y_{j+1/2})``."""
    return CartesianGrid2D(x_edges, y_edges)


def build_cartesian3d(x_edges, y_edges, z_edges):
    return CartesianGrid3D(x_edges, y_edges, z_edges)


def uniform_grid(domain, n, m=None):
    a, b, c, d = domain
    m = n if m is None else m
    return CartesianGrid2D(np.linspace(a, b, n + 1), np.linspace(c, d, m + 1))


def admissibility_constant(grid):
    """Smallest ``c`` bounding the neighbouring aspect ratios of ``grid``.

    2D: ``1/c <= h_j/k_i <= c`` for all ``i, j``.  3D: the three-ratio sum
    ``h_j/k_i + k_i/l_m + l_m/h_j`` is bounded by ``c`` from above and by
    ``1/c`` from below.
    """
    if isinstance(grid, CartesianGrid3D):
        k, h, l = grid.k, grid.h, grid.l
        s = (h[None, :, None] / k[:, None, None]
             + k[:, None, None] / l[None, None, :]
             + l[None, None, :] / h[None, :, None])
        return float(max(s.max(), 1.0 / s.min()))
    k, h = grid.k, grid.h
    return float(max(h.max() / k.min(), k.max() / h.min()))


@dataclass(frozen=True, eq=False)
class PolygonalMesh:
    """Polygonal partition of a rectangle.

    ``cells`` holds counterclockwise vertex loops (hanging vertices included).
    ``edge_cells[e] = (left, right)`` with ``right == BOUNDARY`` on the
    boundary; ``normals[e]`` points from left to right (outward on the
    boundary).
    """

    vertices: np.ndarray
    cells: tuple
    areas: np.ndarray
    edge_cells: np.ndarray
    edge_vertices: np.ndarray
    lengths: np.ndarray
    normals: np.ndarray
    family: str
    domain: tuple
    params: dict = field(default_factory=dict)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_edges(self):
        return len(self.lengths)

    @cached_property
    def interior(self):
        return self.edge_cells[:, 1] != BOUNDARY

    @cached_property
    def midpoints(self):
        v = self.vertices[self.edge_vertices]
        return v.mean(axis=1)

    @cached_property
    def centroids(self):
        pts, wts, owner = self.quad_rule
        cx = np.bincount(owner, wts * pts[:, 0], minlength=self.n_cells)
        cy = np.bincount(owner, wts * pts[:, 1], minlength=self.n_cells)
        return np.column_stack([cx, cy])

    @cached_property
    def perimeters(self):
        p = np.bincount(self.edge_cells[:, 0], self.lengths, minlength=self.n_cells)
        inner = self.interior
        p += np.bincount(self.edge_cells[inner, 1], self.lengths[inner], minlength=self.n_cells)
        return p

    @cached_property
    def h(self):
        """Mesh size: the longest edge."""
        return float(self.lengths.max())

    @cached_property
    def quad_rule(self):
        """Stacked cell-average rule: points, weights (sum 1 per cell), owner."""
        pts, wts, owner = [], [], []
        for c, loop in enumerate(self.cells):
            p, w = quadrature.polygon_rule(self.vertices[loop])
            pts.append(p)
            wts.append(w)
            owner.append(np.full(len(w), c))
        return np.concatenate(pts), np.concatenate(wts), np.concatenate(owner)

    @cached_property
    def boundary_segments(self):
        """Every cell boundary as counterclockwise segments ``(p, q, owner)``."""
        p = self.vertices[self.edge_vertices[:, 0]]
        q = self.vertices[self.edge_vertices[:, 1]]
        inner = self.interior
        return (np.concatenate([p, q[inner]]), np.concatenate([q, p[inner]]),
                np.concatenate([self.edge_cells[:, 0], self.edge_cells[inner, 1]]))

    def cell_average(self, func):
        """Cell averages of ``func(x, y)`` (vectorised)."""
        pts, wts, owner = self.quad_rule
        vals = func(pts[:, 0], pts[:, 1])
        return np.bincount(owner, wts * vals, minlength=self.n_cells)

    def closure_defect(self):
        """Per-cell ``sum_e |e| n_e`` (outward); zero for closed polygons."""
        s = np.zeros((self.n_cells, 2))
        ln = self.lengths[:, None] * self.normals
        np.add.at(s, self.edge_cells[:, 0], ln)
        inner = self.interior
        np.add.at(s, self.edge_cells[inner, 1], -ln[inner])
        return s


def _polygon_area(xy):
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygonal_from_loops(vertices, loops, family, domain, params=None, tol=1e-12, areas=None):
    """Assemble a :class:`PolygonalMesh` from CCW vertex-index loops.

    Edges are identified by their (unordered) vertex pair, so hanging
    vertices must appear in the loops of all cells that touch them.
    ``areas`` overrides the shoelace areas (used for exact rectangle areas).
    """
    vertices = np.asarray(vertices, dtype=float)
    loops = tuple(np.asarray(l, dtype=np.int64) for l in loops)
    if areas is None:
        areas = np.array([_polygon_area(vertices[l]) for l in loops])
    else:
        areas = np.array(areas, dtype=float)
    scale = (domain[1] - domain[0]) * (domain[3] - domain[2])
    if np.any(areas <= tol * scale):
        bad = int(np.argmin(areas))
        raise MeshError(f"degenerate cell {bad} with area {areas[bad]:.3e}")

    seen = {}
    edge_cells, edge_verts = [], []
    for c, loop in enumerate(loops):
        for p, q in zip(loop, np.roll(loop, -1)):
            key = (min(p, q), max(p, q))
            e = seen.get(key)
            if e is None:
                seen[key] = len(edge_cells)
                edge_cells.append([c, BOUNDARY])
                edge_verts.append([p, q])
            else:
                if edge_cells[e][1] != BOUNDARY:
                    raise MeshError(f"edge {key} shared by more than two cells")
                edge_cells[e][1] = c
    edge_cells = np.array(edge_cells, dtype=np.int64)
    edge_verts = np.array(edge_verts, dtype=np.int64)
    d = vertices[edge_verts[:, 1]] - vertices[edge_verts[:, 0]]
    lengths = np.hypot(d[:, 0], d[:, 1])
    # (p -> q) runs counterclockwise around the left cell
    normals = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]
    mesh = PolygonalMesh(
        vertices=vertices, cells=loops, areas=areas, edge_cells=edge_cells,
        edge_vertices=edge_verts, lengths=lengths, normals=normals,
        family=family, domain=tuple(float(v) for v in domain), params=dict(params or {}),
    )
    for arr in (vertices, areas, edge_cells, edge_verts, lengths, normals):
        arr.setflags(write=False)
    return mesh


def _lattice_loops(ni, nj):
    """Quad loops on an (ni+1) x (nj+1) vertex lattice, i-major cell order."""
    idx = np.arange((ni + 1) * (nj + 1)).reshape(ni + 1, nj + 1)
    loops = []
    for i in range(ni):
        for j in range(nj):
            loops.append([idx[i, j], idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]])
    return idx, loops


def as_polygonal(grid):
    """Polygonal view of a 2D Cartesian grid.

    Cell ``i * J + j`` is the rectangle ``K_ij`` so that ``field.ravel()``
    lines up with the polygonal cell numbering.
    """
    ni, nj = grid.shape
    X, Y = np.meshgrid(grid.x_edges, grid.y_edges, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    _, loops = _lattice_loops(ni, nj)
    return polygonal_from_loops(verts, loops, "cartesian", grid.domain,
                                areas=grid.areas.ravel())


def _divisions(length, target_h):
    return max(1, int(round(length / target_h)))


def build_family(family, domain, target_h, seed=0, theta=PERTURBATION):
    """Polygonal mesh of one of :data:`FAMILIES` covering ``domain``.

    ``domain`` is ``(a, b, c, d)`` for the rectangle ``(a, b) x (c, d)``.
    Constructions are deterministic for fixed arguments.
    """
    a, b, c, d = (float(v) for v in domain)
    if target_h <= 0 or target_h >= min(b - a, d - c):
        raise MeshError("target_h must be positive and below the shorter side")
    if family == "cartesian":
        return as_polygonal(uniform_grid((a, b, c, d), _divisions(b - a, target_h),
                                         _divisions(d - c, target_h)))
    if family == "perturbed_cartesian":
        return _perturbed(a, b, c, d, target_h, seed, theta)
    if family == "triangular":
        return _triangular(a, b, c, d, target_h)
    if family == "staggered":
        return _staggered(a, b, c, d, target_h)
    if family == "hexagonal":
        return _hexagonal(a, b, c, d, target_h)
    raise MeshError(f"unknown mesh family {family!r}")


def _perturbed(a, b, c, d, target_h, seed, theta):
    ni, nj = _divisions(b - a, target_h), _divisions(d - c, target_h)
    X, Y = np.meshgrid(np.linspace(a, b, ni + 1), np.linspace(c, d, nj + 1), indexing="ij")
    hx, hy = (b - a) / ni, (d - c) / nj
    rng = np.random.Generator(np.random.PCG64(seed))
    radius = theta * min(hx, hy) * np.sqrt(rng.uniform(size=X.shape))
    angle = rng.uniform(0.0, 2.0 * np.pi, size=X.shape)
    inner = np.zeros(X.shape, dtype=bool)
    inner[1:-1, 1:-1] = True
    X = X + np.where(inner, radius * np.cos(angle), 0.0)
    Y = Y + np.where(inner, radius * np.sin(angle), 0.0)
    verts = np.column_stack([X.ravel(), Y.ravel()])
    _, loops = _lattice_loops(ni, nj)
    return polygonal_from_loops(verts, loops, "perturbed_cartesian", (a, b, c, d),
                                {"seed": seed, "theta": theta, "rng": "PCG64"})


def _triangular(a, b, c, d, target_h):
    ni, nj = _divisions(b - a, target_h), _divisions(d - c, target_h)
    X, Y = np.meshgrid(np.linspace(a, b, ni + 1), np.linspace(c, d, nj + 1), indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    idx, _ = _lattice_loops(ni, nj)
    loops = []
    for i in range(ni):
        for j in range(nj):
            p0, p1, p2, p3 = idx[i, j], idx[i + 1, j], idx[i + 1, j + 1], idx[i, j + 1]
            loops.append([p0, p1, p2])
            loops.append([p0, p2, p3])
    return polygonal_from_loops(verts, loops, "triangular", (a, b, c, d))


def _staggered(a, b, c, d, target_h):
    """Brick pattern: odd rows shifted by half a cell.

    The end cells of shifted rows are one and a half cells wide so that no
    cell is narrower than ``target_h`` (a half cell would halve the stable
    time step for flow along the rows).
    """
    ni, nj = _divisions(b - a, target_h), _divisions(d - c, target_h)
    if ni < 2:
        raise MeshError("staggered mesh needs at least two cells per row")
    hx, hy = (b - a) / ni, (d - c) / nj
    # vertices live on a lattice of half-cell steps in x
    nx = 2 * ni + 1
    X, Y = np.meshgrid(a + 0.5 * hx * np.arange(nx), c + hy * np.arange(nj + 1), indexing="ij")
    X[-1, :] = b
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def vid(ix, jy):
        return ix * (nj + 1) + jy

    def breaks(row):
        # x-lattice indices of the vertical cell walls in this row
        if row % 2 == 0:
            return list(range(0, nx, 2))
        return [0] + list(range(3, nx - 3, 2)) + [nx - 1]

    loops = []
    for j in range(nj):
        walls = breaks(j)
        below = set(breaks(j - 1)) if j > 0 else set()
        above = set(breaks(j + 1)) if j < nj - 1 else set()
        for left, right in zip(walls[:-1], walls[1:]):
            loop = [vid(left, j)]
            loop += [vid(ix, j) for ix in range(left + 1, right) if ix in below]
            loop.append(vid(right, j))
            loop.append(vid(right, j + 1))
            loop += [vid(ix, j + 1) for ix in range(right - 1, left, -1) if ix in above]
            loop.append(vid(left, j + 1))
            loops.append(loop)
    return polygonal_from_loops(verts, loops, "staggered", (a, b, c, d))


def _hexagonal(a, b, c, d, target_h):
    """Pointy-top honeycomb clipped to the rectangle.

    Columns are sized so that the side walls run through cell centres or
    along vertical hexagon edges; the vertical spacing is stretched so the
    top and bottom walls run through row centres.  Boundary cells become
    pentagons and quadrilaterals.
    """
    import shapely.geometry as sg
    from shapely.geometry.polygon import orient

    ni = _divisions(b - a, target_h)
    w = (b - a) / ni
    s = w / np.sqrt(3.0)
    nrow = max(1, int(round((d - c) / (1.5 * s))))
    dy = (d - c) / nrow
    sy = dy / 1.5
    box = sg.box(a, c, b, d)
    ang = np.deg2rad(30.0 + 60.0 * np.arange(6))
    unit = np.column_stack([np.cos(ang) * s, np.sin(ang) * sy])

    keyed = {}
    verts = []

    def vid(p):
        # every vertex sits on a lattice of half columns and thirds of a row
        key = (int(round((p[0] - a) / (0.5 * w))), int(round((p[1] - c) / (dy / 3.0))))
        v = keyed.get(key)
        if v is None:
            v = keyed[key] = len(verts)
            verts.append(p)
        return v

    loops = []
    for r in range(nrow + 1):
        off = 0.0 if r % 2 == 0 else 0.5 * w
        for q in range(-1, ni + 2):
            cx, cy = a + off + q * w, c + r * dy
            hexagon = sg.Polygon(unit + [cx, cy])
            piece = hexagon.intersection(box)
            if piece.is_empty or piece.area < 1e-9 * w * dy:
                continue
            piece = orient(piece, 1.0)
            coords = np.asarray(piece.exterior.coords)[:-1]
            loop = [vid(p) for p in coords]
            # drop repeated vertices produced by clipping through a corner
            dedup = [v for k, v in enumerate(loop) if v != loop[k - 1]]
            loops.append(dedup)
    return polygonal_from_loops(np.array(verts), loops, "hexagonal", (a, b, c, d),
                                {"stretch": sy / s})


def dump_mesh(mesh, path):
    """Write ``mesh`` as plain text: vertices, cells and edges sections.

    Columns::

        VERTICES n   ->  id x y
        CELLS n      ->  id area nv v0 v1 ...
        EDGES n      ->  id left right v0 v1 length nx ny   (right = -1 on the boundary)
    """
    if isinstance(mesh, CartesianGrid2D):
        mesh = as_polygonal(mesh)
    with open(path, "w") as fh:
        fh.write(f"# family {mesh.family} domain {' '.join(repr(float(v)) for v in mesh.domain)}\n")
        fh.write(f"VERTICES {len(mesh.vertices)}\n")
        for i, (x, y) in enumerate(mesh.vertices):
            fh.write(f"{i} {float(x)!r} {float(y)!r}\n")
        fh.write(f"CELLS {mesh.n_cells}\n")
        for i, loop in enumerate(mesh.cells):
            fh.write(f"{i} {float(mesh.areas[i])!r} {len(loop)} {' '.join(str(v) for v in loop)}\n")
        fh.write(f"EDGES {mesh.n_edges}\n")
        for e in range(mesh.n_edges):
            l, r = mesh.edge_cells[e]
            p, q = mesh.edge_vertices[e]
            nx, ny = mesh.normals[e]
            fh.write(f"{e} {l} {r} {p} {q} {float(mesh.lengths[e])!r} {float(nx)!r} {float(ny)!r}\n")


def load_mesh(path):
    """Read a file written by :func:`dump_mesh`."""
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    header = lines[0]
    family = header[2]
    domain = tuple(float(v) for v in header[4:8])
    pos = 1
    nv = int(lines[pos][1])
    verts = np.array([[float(t) for t in ln[1:3]] for ln in lines[pos + 1:pos + 1 + nv]])
    pos += 1 + nv
    nc = int(lines[pos][1])
    loops = [[int(t) for t in ln[3:]] for ln in lines[pos + 1:pos + 1 + nc]]
    return polygonal_from_loops(verts, loops, family, domain)
