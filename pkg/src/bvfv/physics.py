"""Flux functions, Godunov flux, velocity fields and the built-in test cases.

All sources are hand-derived.  A manufactured source is written as a function
of the state ``z`` as well as ``(t, x, y)`` so that the scheme can evaluate it
at the current cell value; at ``z = exact(t, x, y)`` it closes the PDE.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import quadrature

TWO_PI = 2.0 * np.pi


class MonotonicityError(ValueError):
    """A flux splitting is not monotone for the requested shift."""


@dataclass(frozen=True)
class FluxFunction:
    """Scalar flux ``f`` with its derivative and Lipschitz constant.

    ``extrema(lo, hi)`` returns ``(min, max)`` of ``f`` over ``[lo, hi]``;
    when it is missing the extrema are searched on a fine sample.
    """

    f: Callable
    df: Callable
    lipschitz: float
    tag: str = "custom"
    extrema: Optional[Callable] = None

    def __call__(self, s):
        return self.f(s)

    def min_max(self, lo, hi):
        if self.extrema is not None:
            return self.extrema(lo, hi)
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        s = np.linspace(0.0, 1.0, 257).reshape((-1,) + (1,) * lo.ndim)
        vals = self.f(lo + s * (hi - lo))
        return vals.min(axis=0), vals.max(axis=0)


def _linear_extrema(lo, hi):
    return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)


def _sin_extrema(lo, hi):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    flo, fhi = np.sin(TWO_PI * lo), np.sin(TWO_PI * hi)
    # maxima of sin(2 pi s) at s = 1/4 + k, minima at s = 3/4 + k
    has_max = np.ceil(lo - 0.25) <= hi - 0.25
    has_min = np.ceil(lo - 0.75) <= hi - 0.75
    vmax = np.where(has_max, 1.0, np.maximum(flo, fhi))
    vmin = np.where(has_min, -1.0, np.minimum(flo, fhi))
    return vmin, vmax


LINEAR = FluxFunction(lambda s: np.asarray(s, dtype=float) * 1.0,
                      lambda s: np.ones_like(np.asarray(s, dtype=float)),
                      1.0, "linear", _linear_extrema)
SINUSOIDAL = FluxFunction(lambda s: np.sin(TWO_PI * np.asarray(s, dtype=float)),
                          lambda s: TWO_PI * np.cos(TWO_PI * np.asarray(s, dtype=float)),
                          TWO_PI, "sinusoidal", _sin_extrema)

FLUXES = {"linear": LINEAR, "sinusoidal": SINUSOIDAL}


@dataclass(frozen=True)
class NumericalFlux:
    """Two-point flux ``g(a, b)``.

    ``lip_a`` / ``lip_b`` bound the slope in each argument separately and
    ``lipschitz`` is the constant entering the CFL conditions.
    """

    g: Callable
    flux: FluxFunction
    lipschitz: float
    lip_a: float
    lip_b: float

    def __call__(self, a, b):
        return self.g(a, b)


def godunov_value(f, a, b):
    """Godunov flux: max of ``f`` on ``[b, a]`` if ``b < a``, min on ``[a, b]`` otherwise."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    vmin, vmax = f.min_max(lo, hi)
    return np.where(b < a, vmax, np.where(a < b, vmin, f(a)))


def godunov(f, a=None, b=None):
    """Godunov numerical flux for ``f``.

    With states given, evaluates ``g(a, b)``; otherwise returns the
    :class:`NumericalFlux`.
    """
    if a is not None:
        return godunov_value(f, a, b)
    if f.tag == "linear":
        # f increasing: g(a, b) = f(a)
        return NumericalFlux(lambda a, b: f(a), f, f.lipschitz, f.lipschitz, 0.0)
    return NumericalFlux(lambda a, b: godunov_value(f, a, b), f, f.lipschitz,
                         f.lipschitz, f.lipschitz)


@dataclass(frozen=True)
class VelocityField:
    """Analytic velocity ``(u, v)`` (or ``(u, v, w)``) with its divergence."""

    components: Callable
    divergence: Callable
    sup_bound: float
    name: str = "custom"
    dim: int = 2

    def __call__(self, t, *x):
        return self.components(t, *x)


def constant_velocity(*c):
    c = tuple(float(v) for v in c)

    def comps(t, *x):
        shape = np.broadcast(*[np.asarray(v) for v in x]).shape
        return tuple(np.full(shape, v) for v in c)

    def div(t, *x):
        shape = np.broadcast(*[np.asarray(v) for v in x]).shape
        return np.zeros(shape)

    return VelocityField(comps, div, float(max(abs(v) for v in c)), f"constant{c}", len(c))


def zero_velocity(dim=2):
    return constant_velocity(*([0.0] * dim))


def cellular_velocity(scale, time_factor=False):
    """``u = s sin(pi x) cos(pi y/2)``, ``v = s sin(pi y) cos(pi x/2)`` (times ``t`` if requested)."""
    pi = np.pi

    def amp(t):
        return scale * t if time_factor else scale

    def comps(t, x, y):
        s = amp(t)
        return (s * np.sin(pi * x) * np.cos(pi * y / 2), s * np.sin(pi * y) * np.cos(pi * x / 2))

    def div(t, x, y):
        s = amp(t)
        return s * pi * (np.cos(pi * x) * np.cos(pi * y / 2) + np.cos(pi * y) * np.cos(pi * x / 2))

    sup = scale  # |u|, |v| <= scale (times t <= 1 for the time-dependent field)
    name = f"cellular(scale={scale}{', *t' if time_factor else ''})"
    return VelocityField(comps, div, sup, name)


EX1_VELOCITY = cellular_velocity(1.0 / 16.0, time_factor=True)
EX2_VELOCITY = cellular_velocity(1.0 / 20.0)


def face_average_velocity(field, segment, t0, t1):
    """Time and edge average of the normal velocity on a segment.

    ``segment = (p, q)``; the normal is ``(q - p)`` rotated clockwise, i.e.
    outward for a counterclockwise traversal.  Arrays of segments are
    accepted with shape ``(..., 2)`` endpoints.
    """
    p = np.asarray(segment[0], dtype=float)
    q = np.asarray(segment[1], dtype=float)
    d = q - p
    length = np.hypot(d[..., 0], d[..., 1])
    nx, ny = d[..., 1] / length, -d[..., 0] / length
    total = 0.0
    for wt, st in zip(quadrature.WEIGHTS, quadrature.NODES):
        t = t0 + st * (t1 - t0)
        for ws, ss in zip(quadrature.WEIGHTS, quadrature.NODES):
            x = p[..., 0] + ss * d[..., 0]
            y = p[..., 1] + ss * d[..., 1]
            u, v = field(t, x, y)
            total = total + wt * ws * (u * nx + v * ny)
    return total


@dataclass(frozen=True)
class NonlinearFluxF:
    """Fully nonlinear flux ``F(t, x, y, z) = (F1, F2)``."""

    F1: Callable
    F2: Callable
    dF1: Callable
    dF2: Callable
    lipschitz_z: float
    div_x: Callable
    name: str = "custom"


def example3_flux(domain=(-1.0, 1.0, -1.0, 1.0), T=1.0):
    """``F = (sin((x - t) z), cos((y - t) z))``.

    ``Lip(F)`` is the interval bound of ``max(|x - t|, |y - t|)`` over the
    space-time box, since ``|dF1/dz| = |x - t| |cos((x - t) z)|``.
    """
    a, b, c, d = domain
    lip = max(abs(a - T), abs(b), abs(a), abs(b - T), abs(c - T), abs(d), abs(c), abs(d - T))

    def F1(t, x, y, z):
        return np.sin((x - t) * z)

    def F2(t, x, y, z):
        return np.cos((y - t) * z)

    def dF1(t, x, y, z):
        return (x - t) * np.cos((x - t) * z)

    def dF2(t, x, y, z):
        return -(y - t) * np.sin((y - t) * z)

    def div_x(t, x, y, z):
        return z * np.cos((x - t) * z) - z * np.sin((y - t) * z)

    return NonlinearFluxF(F1, F2, dF1, dF2, float(lip), div_x, "example3")


@dataclass(frozen=True)
class Split:
    a: Callable
    b: Callable
    c: Callable
    d: Callable
    shifts: tuple  # (M1, M2)

    @property
    def shift(self):
        return max(self.shifts)


def make_split(F, M, box=(0.0, 1.0, -1.0, 1.0, -1.0, 1.0), zrange=(-3.0, 3.0), samples=50):
    """Monotone splitting ``F1 = a + b``, ``F2 = c + d`` with shift ``M``.

    ``a = (F1 + M z)/2``, ``b = (F1 - M z)/2`` and likewise ``c, d`` for
    ``F2``.  ``a, c`` are nondecreasing and ``b, d`` nonincreasing in ``z``
    as long as ``M >= |dF/dz|``.  A scalar ``M`` must be at least
    ``F.lipschitz_z``; a pair ``(M1, M2)`` shifts each component separately
    (``M2 = 0`` for ``F2 = 0`` keeps the y-direction free of added diffusion).
    The slopes are sampled on a ``samples``-per-axis grid of
    ``box = (t0, t1, a, b, c, d)`` times ``zrange``; a
    :class:`MonotonicityError` is raised when a shift is too small.
    """
    if np.ndim(M) == 0:
        M1 = M2 = float(M)
        if M1 < F.lipschitz_z:
            raise MonotonicityError(f"shift {M1} below Lip(F) = {F.lipschitz_z}")
    else:
        M1, M2 = (float(m) for m in M)
    if M1 < 0 or M2 < 0:
        raise MonotonicityError("shifts must be nonnegative")
    t0, t1, xa, xb, yc, yd = box
    s = np.linspace(0.0, 1.0, samples)
    X, Y, Z = np.meshgrid(xa + s * (xb - xa), yc + s * (yd - yc),
                          zrange[0] + s * (zrange[1] - zrange[0]), sparse=True)
    tol = 1 + 1e-12
    for t in (t0, 0.5 * (t0 + t1), t1):
        if (np.any(np.abs(F.dF1(t, X, Y, Z)) > M1 * tol)
                or np.any(np.abs(F.dF2(t, X, Y, Z)) > M2 * tol)):
            raise MonotonicityError("sampled dF/dz exceeds the shift")

    return Split(
        a=lambda t, x, y, z: 0.5 * (F.F1(t, x, y, z) + M1 * z),
        b=lambda t, x, y, z: 0.5 * (F.F1(t, x, y, z) - M1 * z),
        c=lambda t, x, y, z: 0.5 * (F.F2(t, x, y, z) + M2 * z),
        d=lambda t, x, y, z: 0.5 * (F.F2(t, x, y, z) - M2 * z),
        shifts=(M1, M2),
    )


@dataclass(frozen=True)
class AxisSteps:
    """Piecewise-constant data ``sum_k c_k 1[x_axis_k > s_k + v_k t]``.

    Cell averages over boxes and polygons are computed exactly from area
    fractions.
    """

    terms: tuple  # (coefficient, axis, threshold, speed)

    def __call__(self, t, x, y=None):
        if y is None:  # called as alpha0(x, y)
            t, x, y = 0.0, t, x
        out = 0.0
        for coef, axis, thr, speed in self.terms:
            coord = x if axis == 0 else y
            out = out + coef * (np.asarray(coord) > thr + speed * t)
        return out * 1.0

    def at(self, t):
        return AxisSteps(tuple((c, ax, thr + sp * t, 0.0) for c, ax, thr, sp in self.terms))

    def average_box(self, t, x0, x1, y0, y1):
        out = 0.0
        for coef, axis, thr, speed in self.terms:
            s = thr + speed * t
            lo, hi = (x0, x1) if axis == 0 else (y0, y1)
            frac = np.clip((hi - s) / (hi - lo), 0.0, 1.0)
            out = out + coef * frac
        return out

    def average_loops(self, t, p, q, owner, areas):
        """Exact averages over polygons given as oriented boundary segments.

        Segment ``k`` runs from ``p[k]`` to ``q[k]`` counterclockwise around
        polygon ``owner[k]``.  By Green's theorem
        ``|P n {x > s}| = oint max(x - s, 0) dy`` and
        ``|P n {y > s}| = -oint max(y - s, 0) dx``; the ramp is integrated
        exactly along each straight segment.
        """
        areas = np.asarray(areas, dtype=float)
        out = np.zeros(areas.shape)
        for coef, axis, thr, speed in self.terms:
            s = thr + speed * t
            if axis == 0:
                part = _ramp_mean(p[:, 0] - s, q[:, 0] - s) * (q[:, 1] - p[:, 1])
            else:
                part = -_ramp_mean(p[:, 1] - s, q[:, 1] - s) * (q[:, 0] - p[:, 0])
            out += coef * np.bincount(owner, part, minlength=areas.size) / areas
        return out

    def average_polygon(self, t, verts):
        verts = np.asarray(verts, dtype=float)
        nxt = np.roll(verts, -1, axis=0)
        area = 0.5 * np.sum(verts[:, 0] * nxt[:, 1] - nxt[:, 0] * verts[:, 1])
        owner = np.zeros(len(verts), dtype=int)
        return float(self.average_loops(t, verts, nxt, owner, [area])[0])


def _ramp_mean(a, b):
    """Mean of ``max(r, 0)`` for ``r`` linear from ``a`` to ``b``."""
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    hi, lo = np.maximum(a, b), np.minimum(a, b)
    span = np.where((lo < 0) & (hi > 0), hi - lo, 1.0)
    crossing = 0.5 * np.maximum(hi, 0.0) ** 2 / span
    return np.where(lo >= 0, 0.5 * (a + b), np.where(hi <= 0, 0.0, crossing))


@dataclass(frozen=True)
class ManufacturedCase:
    """One built-in problem: data, fluxes, velocity and (optional) exact solution.

    ``source(t, x, y, z)`` is evaluated at the cell state ``z``.  ``exact``
    is ``None`` when no closed form exists.  ``nonlinear`` holds the flux of
    the fully nonlinear problem, in which case ``flux``/``velocity`` are unused.
    """

    name: str
    domain: tuple
    T: float
    initial: Callable
    flux: Optional[FluxFunction] = None
    velocity: Optional[VelocityField] = None
    exact: Optional[Callable] = None
    source: Optional[Callable] = None
    nonlinear: Optional[NonlinearFluxF] = None
    boundary: str = "closed"
    meshes: tuple = ("cartesian",)
    notes: dict = field(default_factory=dict)

    @property
    def area(self):
        a, b, c, d = self.domain
        return (b - a) * (d - c)


def manufactured_source(case, t, x, y):
    """Source value at the exact state, i.e. ``d_t alpha + div(flux(alpha))``."""
    return case.source(t, x, y, case.exact(t, x, y))


def _smooth_exact(t, x, y):
    return np.exp(t * (x + y))


def _ones(x, y):
    return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)


def example1_source(flux):
    """Source for ``alpha = exp(t(x+y))`` under ``u = t(...)/16``.

    ``d_t alpha = (x+y) alpha`` and ``div(u f(alpha)) = f(alpha) div u +
    f'(alpha) u . grad alpha`` with ``grad alpha = t alpha (1, 1)``; every
    ``alpha`` is replaced by the state ``z``.
    """
    vel = EX1_VELOCITY

    def source(t, x, y, z):
        u, v = vel(t, x, y)
        return (x + y) * z + flux(z) * vel.divergence(t, x, y) + flux.df(z) * t * z * (u + v)

    return source


def example3_source(t, x, y, z):
    """``(x+y) z + cos((x-t) z)(z + (x-t) t z) - sin((y-t) z)(z + (y-t) t z)``."""
    return ((x + y) * z
            + np.cos((x - t) * z) * (z + (x - t) * t * z)
            - np.sin((y - t) * z) * (z + (y - t) * t * z))


EX2_INITIAL = AxisSteps(((0.5, 0, -0.25, 0.0), (0.5, 1, -0.25, 0.0)))
BRICK_INITIAL = AxisSteps(((1.0, 0, 0.5, 0.0),))


def _build_cases():
    d1 = (-1.0, 1.0, -1.0, 1.0)
    d2 = (-3.0, 3.0, -3.0, 3.0)
    all_meshes = ("cartesian", "perturbed_cartesian", "hexagonal", "triangular", "staggered")
    cases = {
        "ex1-linear": ManufacturedCase(
            "ex1-linear", d1, 1.0, _ones, LINEAR, EX1_VELOCITY, _smooth_exact,
            example1_source(LINEAR), meshes=all_meshes),
        "ex1-sinusoidal": ManufacturedCase(
            "ex1-sinusoidal", d1, 1.0, _ones, SINUSOIDAL, EX1_VELOCITY, _smooth_exact,
            example1_source(SINUSOIDAL), meshes=all_meshes),
        "ex2-linear": ManufacturedCase(
            "ex2-linear", d2, 2.0, EX2_INITIAL, LINEAR, constant_velocity(1.0, 1.0),
            AxisSteps(((0.5, 0, -0.25, 1.0), (0.5, 1, -0.25, 1.0))),
            boundary="inflow", meshes=all_meshes),
        "ex2-sinusoidal": ManufacturedCase(
            "ex2-sinusoidal", d2, 2.0, EX2_INITIAL, SINUSOIDAL, EX2_VELOCITY,
            meshes=all_meshes),
        "ex3-nonlinear": ManufacturedCase(
            "ex3-nonlinear", d1, 1.0, _ones, exact=_smooth_exact, source=example3_source,
            nonlinear=example3_flux(d1, 1.0), boundary="transmissive"),
        "brick-step": ManufacturedCase(
            "brick-step", d1, 0.25, BRICK_INITIAL, LINEAR, constant_velocity(1.0, 0.0),
            AxisSteps(((1.0, 0, 0.5, 1.0),)), boundary="inflow", meshes=("staggered",)),
    }
    return cases


CASES = _build_cases()


def get_case(name):
    try:
        return CASES[name]
    except KeyError:
        raise KeyError(f"unknown case {name!r}; choose from {sorted(CASES)}") from None
