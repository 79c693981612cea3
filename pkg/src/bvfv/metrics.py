"""BV seminorms, error norms and convergence rates for piecewise-constant fields."""
import math

import numpy as np


def _values_and_grid(field):
    return np.asarray(field.values, dtype=float), field.grid


def bv_x(field):
    """``|a|_{L1_y BV_x} = sum_j h_j sum_i |a_ij - a_{i-1,j}|``."""
    a, grid = _values_and_grid(field)
    return float(np.sum(grid.h[None, :] * np.abs(np.diff(a, axis=0))))


def bv_y(field):
    """``|a|_{L1_x BV_y} = sum_i k_i sum_j |a_ij - a_{i,j-1}|``."""
    a, grid = _values_and_grid(field)
    return float(np.sum(grid.k[:, None] * np.abs(np.diff(a, axis=1))))


def bv_xy(field):
    """Space BV seminorm of a 2D field: :func:`bv_x` + :func:`bv_y`."""
    return bv_x(field) + bv_y(field)


def bv_xyz(field):
    """BV seminorm of a 3D field: jumps across every face weighted by face area."""
    a, grid = _values_and_grid(field)
    k, h, l = grid.k, grid.h, grid.l
    sx = np.sum((h[None, :, None] * l[None, None, :]) * np.abs(np.diff(a, axis=0)))
    sy = np.sum((k[:, None, None] * l[None, None, :]) * np.abs(np.diff(a, axis=1)))
    sz = np.sum((k[:, None, None] * h[None, :, None]) * np.abs(np.diff(a, axis=2)))
    return float(sx + sy + sz)


def bv_poly(field):
    """Edge-weighted jump sum ``sum_{interior e} |e| |a_K - a_L|`` on a polygonal mesh."""
    mesh = field.mesh
    a = np.asarray(field.values, dtype=float)
    inner = mesh.interior
    left, right = mesh.edge_cells[inner, 0], mesh.edge_cells[inner, 1]
    return float(np.sum(mesh.lengths[inner] * np.abs(a[left] - a[right])))


def bv(field):
    """BV seminorm for any of the field types."""
    if hasattr(field, "mesh"):
        return bv_poly(field)
    if np.ndim(field.values) == 3:
        return bv_xyz(field)
    return bv_xy(field)


def cell_measures(field):
    if hasattr(field, "mesh"):
        return field.mesh.areas
    grid = field.grid
    return grid.volumes if np.ndim(field.values) == 3 else grid.areas


def bv_time(snapshots, measures):
    """``sum_K |K| sum_n |a^{n+1}_K - a^n_K|`` over a sequence of snapshots."""
    snaps = [np.asarray(getattr(s, "values", s), dtype=float) for s in snapshots]
    if len(snaps) < 2:
        raise ValueError("need at least two snapshots")
    stack = np.stack(snaps)
    return float(np.sum(np.asarray(measures) * np.abs(np.diff(stack, axis=0)).sum(axis=0)))


def bv_space_time(snapshots, measures, delta, space_bv):
    """``|a|_{L1_t BV_x} + |a|_{L1_x BV_t}`` for the piecewise-constant time reconstruct.

    ``space_bv`` maps a snapshot to its space seminorm; the last snapshot is
    the final time and does not contribute to the time integral.
    """
    integral = sum(delta * space_bv(s) for s in snapshots[:-1])
    return integral + bv_time(snapshots, measures)


def total_variation_1d(values):
    """Sup over partitions of a piecewise-constant 1D sequence (the jump sum)."""
    v = np.asarray(values, dtype=float)
    return float(np.abs(np.diff(v)).sum())


def error_norms(field, exact, t=None, normalize=False):
    """``(Linf, L1, L2)`` of ``field - cell averages of exact(t, .)``.

    ``L1 = sum |K| |e_K|`` and ``L2 = sqrt(sum |K| e_K^2)``; with
    ``normalize`` both are divided by the domain measure (``L2`` by its square
    root), i.e. reported as domain averages.
    """
    t = field.t if t is None else t
    if hasattr(field, "mesh"):
        from .fvpoly import cell_average
        ref = cell_average(field.mesh, exact, t)
    elif np.ndim(field.values) == 3:
        from .fv3d import cell_average
        ref = cell_average(field.grid, exact, t)
    else:
        from .fv2d import cell_average
        ref = cell_average(field.grid, exact, t)
    e = np.abs(np.asarray(field.values) - ref)
    w = cell_measures(field)
    linf = float(e.max())
    l1 = float(np.sum(w * e))
    l2 = float(np.sqrt(np.sum(w * e ** 2)))
    if normalize:
        total = float(np.sum(w))
        l1 /= total
        l2 /= math.sqrt(total)
    return linf, l1, l2


def rate(v_fine, v_coarse, h_fine, h_coarse):
    """``log(v_fine / v_coarse) / log(h_fine / h_coarse)``; NaN when undefined."""
    if v_fine is None or v_coarse is None:
        return math.nan
    if not (v_fine > 0 and v_coarse > 0) or h_fine <= 0 or h_coarse <= 0 or h_fine == h_coarse:
        return math.nan
    return math.log(v_fine / v_coarse) / math.log(h_fine / h_coarse)
