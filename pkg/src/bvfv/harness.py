"""Refinement studies: run a case over a list of ``(h, delta)`` rows and tabulate.

Rows default to the discretisation columns of the published convergence
tables.  ``h`` is the nominal mesh size (cell width on Cartesian grids, the
``target_h`` of the polygonal generators); the realised longest edge is kept
as ``h_mesh``.
"""
import csv
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import fv2d, fvnl, fvpoly, mesh, metrics, physics, quadrature

SMOOTH_ROWS = ((5.0e-1, 2.5e-1), (2.5e-1, 1.25e-1), (1.25e-1, 6.25e-2),
               (6.25e-2, 3.125e-2), (3.125e-2, 1.5625e-2))
SINUSOIDAL_ROWS = ((5.0e-1, 3.97e-2), (2.5e-1, 1.98e-2), (1.25e-1, 9.94e-3),
                   (6.25e-2, 4.97e-3), (3.125e-2, 2.48e-3))
STEP_ROWS = ((3.0, 9.37e-2), (1.5, 4.68e-2), (7.5e-1, 2.34e-2), (3.75e-1, 1.17e-2),
             (1.875e-1, 5.85e-3))
STEP_SINUSOIDAL_ROWS = ((3.0, 1.49e-2), (1.5, 7.46e-3), (7.5e-1, 3.73e-3),
                        (3.75e-1, 1.86e-3), (1.875e-1, 9.32e-4))
BRICK_ROWS = tuple((h, h) for h in (1.0e-1, 5.0e-2, 2.5e-2, 1.25e-2, 6.25e-3))

PRESETS = {
    "ex1-linear": SMOOTH_ROWS,
    "ex1-sinusoidal": SINUSOIDAL_ROWS,
    "ex2-linear": STEP_ROWS,
    "ex2-sinusoidal": STEP_SINUSOIDAL_ROWS,
    "ex3-nonlinear": SINUSOIDAL_ROWS,
    "brick-step": BRICK_ROWS,
}

#: column order of the emitted tables
COLUMNS = ("h", "delta", "h_mesh", "cells", "steps", "linf", "l1", "l2", "l1_rate",
           "bv", "bv_rate", "bv_st", "mass", "seconds")
_INT_COLUMNS = ("cells", "steps")
_RATES = ("l1_rate", "bv_rate")
_SHADOWED = ("h", "delta", "h_mesh", "linf", "l1", "l2", "l1_rate", "bv", "bv_rate", "bv_st",
             "mass")


class ConfigError(ValueError):
    """Unsupported or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    case: str
    mesh: str = "cartesian"
    rows: tuple = ()
    T: Optional[float] = None
    seed: int = 0
    out: Optional[str] = None

    def __post_init__(self):
        try:
            case = physics.get_case(self.case)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        if self.mesh not in mesh.FAMILIES:
            raise ConfigError(f"unknown mesh family {self.mesh!r}; choose from {mesh.FAMILIES}")
        if self.mesh not in case.meshes:
            raise ConfigError(f"case {self.case!r} runs on {case.meshes}, not {self.mesh!r}")
        rows = tuple((float(h), float(d)) for h, d in (self.rows or PRESETS[self.case]))
        if not rows:
            raise ConfigError("no refinement rows")
        hs = [h for h, _ in rows]
        if any(h <= 0 or d <= 0 for h, d in rows):
            raise ConfigError("h and delta must be positive")
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise ConfigError("h must strictly decrease across rows")
        object.__setattr__(self, "rows", rows)
        if self.T is not None and self.T <= 0:
            raise ConfigError("T must be positive")

    @property
    def horizon(self):
        return physics.get_case(self.case).T if self.T is None else float(self.T)


@dataclass
class ConvergenceRow:
    h: float
    delta: float
    h_mesh: float
    cells: int
    steps: int
    bv: float
    bv_st: float
    mass: float
    linf: Optional[float] = None
    l1: Optional[float] = None
    l2: Optional[float] = None
    l1_rate: Optional[float] = None
    bv_rate: Optional[float] = None
    seconds: float = 0.0
    extra: dict = field(default_factory=dict, repr=False)


def _cells_per_side(length, h):
    n = int(round(length / h))
    if n < 1 or not math.isclose(n * h, length, rel_tol=1e-9):
        raise ConfigError(f"h = {h} does not divide the side length {length}")
    return n


def _run_cartesian(case, h, delta, T):
    a, b, c, d = case.domain
    grid = mesh.build_cartesian(np.linspace(a, b, _cells_per_side(b - a, h) + 1),
                                np.linspace(c, d, _cells_per_side(d - c, h) + 1))
    initial = fv2d.project_initial(case.initial, grid)
    if case.nonlinear is not None:
        split = physics.make_split(case.nonlinear, case.nonlinear.lipschitz_z,
                                   box=(0.0, T) + tuple(case.domain))
        scheme = fvnl.SplitScheme(grid, split, delta, source=case.source,
                                  boundary=case.boundary, cfl="monotone")
        final, trace = fvnl.run_nonlinear(initial, scheme, T, keep_fields=True)
    else:
        config = fv2d.SchemeConfig(grid=grid, flux=physics.godunov(case.flux),
                                   velocity=case.velocity, delta=delta, source=case.source,
                                   boundary=case.boundary, ghost=case.exact)
        final, trace = fv2d.run(initial, config, T, keep_fields=True)
    snaps = [fv2d.DiscreteField2D(v, grid) for v in trace.fields]
    return final, snaps, grid.h_max, grid.areas, metrics.bv_xy


def _run_polygonal(case, family, h, delta, T, seed):
    m = mesh.build_family(family, case.domain, h, seed=seed)
    initial = fvpoly.project_initial(case.initial, m)
    final, trace = fvpoly.run_poly(initial, m, case.velocity, physics.godunov(case.flux), delta,
                                   T, source=case.source, boundary=case.boundary,
                                   ghost=case.exact, keep_fields=True)
    snaps = [fvpoly.PolyField(v, m) for v in trace.fields]
    return final, snaps, m.h, m.areas, metrics.bv_poly


def run_row(config, h, delta):
    """Solve one refinement level; returns an unrated :class:`ConvergenceRow`."""
    case = physics.get_case(config.case)
    T = config.horizon
    start = time.perf_counter()
    try:
        if config.mesh == "cartesian":
            final, snaps, h_mesh, measures, space_bv = _run_cartesian(case, h, delta, T)
        else:
            final, snaps, h_mesh, measures, space_bv = _run_polygonal(
                case, config.mesh, h, delta, T, config.seed)
    except fv2d.CFLError as exc:
        raise fv2d.CFLError(f"row h={h:g}, delta={delta:g}: {exc}") from None
    steps = len(snaps) - 1
    row = ConvergenceRow(
        h=h, delta=delta, h_mesh=float(h_mesh), cells=int(np.size(final.values)), steps=steps,
        bv=metrics.bv(final),
        bv_st=metrics.bv_space_time(snaps, measures, T / max(steps, 1), space_bv),
        mass=final.mass)
    if case.exact is not None:
        row.linf, row.l1, row.l2 = metrics.error_norms(final, case.exact, T, normalize=True)
    row.seconds = time.perf_counter() - start
    row.extra["final"] = final
    return row


def add_rates(rows):
    """Fill ``l1_rate``/``bv_rate`` from consecutive rows (first row has none)."""
    for prev, cur in zip(rows, rows[1:]):
        cur.bv_rate = metrics.rate(cur.bv, prev.bv, cur.h, prev.h)
        if cur.l1 is not None and prev.l1 is not None:
            cur.l1_rate = metrics.rate(cur.l1, prev.l1, cur.h, prev.h)
    return rows


def run_experiment(config):
    """One :class:`ConvergenceRow` per refinement level, rates between neighbours."""
    return add_rates([run_row(config, h, d) for h, d in config.rows])


def metadata(config):
    case = physics.get_case(config.case)
    meta = {
        "case": config.case,
        "mesh": config.mesh,
        "T": repr(config.horizon),
        "seed": str(config.seed),
        "boundary": case.boundary,
        "quadrature": f"{quadrature.ORDER}-point Gauss per direction",
        "errors": "domain-averaged, against cell averages of the exact solution",
        "bv": ("edge-weighted jump sum" if config.mesh != "cartesian"
               else "sum_j h_j sum_i |dx a| + sum_i k_i sum_j |dy a|"),
        "h": "nominal cell size; h_mesh is the longest edge",
    }
    if config.mesh == "perturbed_cartesian":
        meta["theta"] = repr(mesh.PERTURBATION)
    if case.nonlinear is not None:
        meta["shift"] = repr(case.nonlinear.lipschitz_z)
        meta["cfl"] = "monotone (delta * M * max(1/k + 1/h) <= 1)"
    return meta


def _blank(v):
    return v is None or (isinstance(v, float) and math.isnan(v))


def _fmt(name, v):
    if _blank(v):
        return "-"
    if name in _INT_COLUMNS:
        return str(int(v))
    if name == "seconds":
        return f"{v:.3f}"
    return f"{v:.2e}"


def emit_csv(rows, path, meta=None):
    """Write the table: ``# key: value`` lines, a header, one line per row.

    Each metric appears rounded to 3 significant digits and again in a
    ``*_full`` column with ``repr`` precision.  Missing values are ``-``; a
    single-row table has no rate columns at all.
    """
    if not rows:
        raise ValueError("no rows to write")
    keep = (lambda c: c not in _RATES) if len(rows) == 1 else (lambda c: True)
    cols = [c for c in COLUMNS if keep(c)]
    shadow = [c for c in _SHADOWED if keep(c)]
    with open(path, "w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh)
        w.writerow(cols + [f"{c}_full" for c in shadow])
        for r in rows:
            d = asdict(r)
            w.writerow([_fmt(c, d[c]) for c in cols]
                       + ["-" if _blank(d[c]) else repr(float(d[c])) for c in shadow])


def read_csv(path):
    """Parse an emitted table back into ``(metadata, rows)``.

    Rows are dicts of the full-precision values (``None`` for ``-`` and
    for columns the file does not have).
    """
    meta, lines = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].partition(":")
                meta[k.strip()] = v.strip()
            else:
                lines.append(line)
    out = []
    for rec in csv.DictReader(lines):
        row = {}
        for c in COLUMNS:
            raw = rec.get(f"{c}_full", rec.get(c, "-"))
            if raw == "-":
                row[c] = None
            elif c in _INT_COLUMNS:
                row[c] = int(raw)
            else:
                row[c] = float(raw)
        out.append(row)
    return meta, out


def write_snapshot(final, path):
    """Columnar ``x y value`` text (cell centres/centroids) for gnuplot."""
    if hasattr(final, "mesh"):
        pts = final.mesh.centroids
        data = np.column_stack([pts, final.values])
    else:
        g = final.grid
        X, Y = np.meshgrid(g.x_centers, g.y_centers, indexing="ij")
        data = np.column_stack([X.ravel(), Y.ravel(), final.values.ravel()])
    np.savetxt(path, data, fmt="%.10g", header="x y value")

