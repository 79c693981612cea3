import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bvfv import physics
from bvfv.physics import LINEAR, SINUSOIDAL, godunov


def dense_godunov(f, a, b, n=20001):
    s = np.linspace(min(a, b), max(a, b), n)
    v = f(s)
    return v.max() if b < a else v.min()


def test_godunov_examples():
    assert godunov(LINEAR, 1.0, 0.0) == 1.0
    assert godunov(SINUSOIDAL, 0.3, 0.3) == pytest.approx(np.sin(0.6 * np.pi), abs=1e-15)
    assert godunov(SINUSOIDAL, 0.1, 0.6) == pytest.approx(np.sin(1.2 * np.pi), abs=1e-15)
    assert godunov(SINUSOIDAL, 0.1, 0.6) == pytest.approx(dense_godunov(SINUSOIDAL, 0.1, 0.6),
                                                          abs=1e-8)


def test_godunov_matches_dense_oracle(rng):
    a, b = rng.uniform(-2, 2, (2, 300))
    got = godunov(SINUSOIDAL, a, b)
    ref = [dense_godunov(SINUSOIDAL, x, y) for x, y in zip(a, b)]
    np.testing.assert_allclose(got, ref, atol=1e-6)


@pytest.mark.parametrize("f", [LINEAR, SINUSOIDAL], ids=["linear", "sinusoidal"])
def test_godunov_consistency(rng, f):
    a = rng.uniform(-2, 2, 1000)
    np.testing.assert_allclose(godunov(f)(a, a), f(a), atol=1e-14, rtol=0)


@pytest.mark.parametrize("f", [LINEAR, SINUSOIDAL], ids=["linear", "sinusoidal"])
def test_godunov_monotone(rng, f):
    g = godunov(f)
    a, b = rng.uniform(-2, 2, (2, 1000))
    da, db = rng.uniform(0, 1, (2, 1000))
    assert np.all(g(a + da, b) >= g(a, b) - 1e-15)
    assert np.all(g(a, b + db) <= g(a, b) + 1e-15)


@pytest.mark.parametrize("f", [LINEAR, SINUSOIDAL], ids=["linear", "sinusoidal"])
def test_godunov_lipschitz(rng, f):
    g = godunov(f)
    a, b, c, d = rng.uniform(-2, 2, (4, 2000))
    num = np.abs(g(a, b) - g(c, d))
    assert np.all(num <= f.lipschitz * np.maximum(np.abs(a - c), np.abs(b - d)) * (1 + 1e-12))
    assert g.lip_a <= f.lipschitz and g.lip_b <= f.lipschitz


@settings(max_examples=200, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_sin_extrema_bracket_samples(lo, hi):
    lo, hi = min(lo, hi), max(lo, hi)
    vmin, vmax = SINUSOIDAL.min_max(lo, hi)
    s = np.linspace(lo, hi, 513)
    assert vmin <= SINUSOIDAL(s).min() + 1e-12
    assert vmax >= SINUSOIDAL(s).max() - 1e-12
    assert vmin >= -1 and vmax <= 1


def test_face_average_velocity_constant():
    v = physics.constant_velocity(1.0, 1.0)
    # segment (0,0)->(0,1) has normal (1, 0)
    assert physics.face_average_velocity(v, ((0, 0), (0, 1)), 0, 1) == pytest.approx(1.0)


def test_face_average_velocity_example2_boundary():
    v = physics.EX2_VELOCITY
    val = physics.face_average_velocity(v, ((3.0, -1.0), (3.0, 2.0)), 0.0, 0.5)
    assert abs(val) < 1e-15


def test_face_average_velocity_against_midpoint_oracle():
    v = physics.EX1_VELOCITY
    got = physics.face_average_velocity(v, ((0.5, 0.0), (0.5, 0.5)), 0.0, 0.25)
    n = 200
    t = (np.arange(n) + 0.5) / n * 0.25
    y = (np.arange(n) + 0.5) / n * 0.5
    T, Y = np.meshgrid(t, y, indexing="ij")
    ref = v(T, 0.5, Y)[0].mean()
    assert got == pytest.approx(ref, abs=1e-8)


def test_divergence_matches_finite_differences(rng):
    for vel in (physics.EX1_VELOCITY, physics.EX2_VELOCITY):
        t, x, y = rng.uniform(0.1, 1), *rng.uniform(-1, 1, 2)
        e = 1e-5
        fd = ((vel(t, x + e, y)[0] - vel(t, x - e, y)[0])
              + (vel(t, x, y + e)[1] - vel(t, x, y - e)[1])) / (2 * e)
        assert vel.divergence(t, x, y) == pytest.approx(fd, abs=1e-8)


def pde_residual(case, t, x, y, step):
    """Centred differences of ``d_t a + div(u f(a))`` minus the source."""
    ex = case.exact

    def flux_x(t, x, y):
        return case.velocity(t, x, y)[0] * case.flux(ex(t, x, y))

    def flux_y(t, x, y):
        return case.velocity(t, x, y)[1] * case.flux(ex(t, x, y))

    dt = (ex(t + step, x, y) - ex(t - step, x, y)) / (2 * step)
    dx = (flux_x(t, x + step, y) - flux_x(t, x - step, y)) / (2 * step)
    dy = (flux_y(t, x, y + step) - flux_y(t, x, y - step)) / (2 * step)
    return dt + dx + dy - physics.manufactured_source(case, t, x, y)


def nonlinear_residual(case, t, x, y, step):
    ex, F = case.exact, case.nonlinear
    dt = (ex(t + step, x, y) - ex(t - step, x, y)) / (2 * step)
    dx = (F.F1(t, x + step, y, ex(t, x + step, y)) - F.F1(t, x - step, y, ex(t, x - step, y)))
    dy = (F.F2(t, x, y + step, ex(t, x, y + step)) - F.F2(t, x, y - step, ex(t, x, y - step)))
    return dt + (dx + dy) / (2 * step) - physics.manufactured_source(case, t, x, y)


def test_example1_source_at_time_zero(rng):
    case = physics.get_case("ex1-linear")
    x, y = rng.uniform(-1, 1, (2, 20))
    np.testing.assert_allclose(physics.manufactured_source(case, 0.0, x, y), x + y, atol=1e-15)


@pytest.mark.parametrize("name", ["ex1-linear", "ex1-sinusoidal", "ex3-nonlinear"])
def test_manufactured_residual_small(rng, name):
    case = physics.get_case(name)
    resid = pde_residual if case.nonlinear is None else nonlinear_residual
    for _ in range(20):
        t = rng.uniform(0.1, 0.9)
        x, y = rng.uniform(-0.9, 0.9, 2)
        assert abs(resid(case, t, x, y, 1e-4)) < 1e-6


@pytest.mark.parametrize("name", ["ex1-linear", "ex1-sinusoidal", "ex3-nonlinear"])
def test_manufactured_residual_is_second_order(rng, name):
    case = physics.get_case(name)
    resid = pde_residual if case.nonlinear is None else nonlinear_residual
    t = rng.uniform(0.1, 0.9, 100)
    x, y = rng.uniform(-0.9, 0.9, (2, 100))
    coarse = np.abs(resid(case, t, x, y, 2e-3))
    fine = np.abs(resid(case, t, x, y, 1e-3))
    # halving the step divides the truncation error by about 4
    assert np.all(fine <= coarse / 4 * 1.2 + 1e-10)
    assert coarse.max() < 1e-4


def test_split_identity_and_example():
    F = physics.example3_flux()
    sp = physics.make_split(F, F.lipschitz_z)
    rng = np.random.default_rng(1)
    t, x, y, z = rng.uniform(0, 1), *rng.uniform(-1, 1, (3, 500))
    np.testing.assert_allclose(sp.a(t, x, y, z) + sp.b(t, x, y, z), F.F1(t, x, y, z), atol=1e-14)
    np.testing.assert_allclose(sp.c(t, x, y, z) + sp.d(t, x, y, z), F.F2(t, x, y, z), atol=1e-14)
    M = F.lipschitz_z
    assert sp.a(0.3, 0.3, 0.0, 1.7) == pytest.approx(M * 1.7 / 2, abs=1e-15)


def test_split_monotone_on_sample_grid():
    F = physics.example3_flux()
    sp = physics.make_split(F, F.lipschitz_z)
    s = np.linspace(-1, 1, 50)[:, None]  # x for a, b and y for c, d
    z = np.linspace(-3, 3, 50)[None, :]
    for t in (0.0, 0.5, 1.0):
        rising = [sp.a(t, s, 0.2, z), sp.c(t, 0.2, s, z)]
        falling = [sp.b(t, s, 0.2, z), sp.d(t, 0.2, s, z)]
        assert all(np.all(np.diff(v, axis=1) >= -1e-14) for v in rising)
        assert all(np.all(np.diff(v, axis=1) <= 1e-14) for v in falling)


def test_split_rejects_small_shift():
    F = physics.example3_flux()
    with pytest.raises(physics.MonotonicityError):
        physics.make_split(F, 0.5 * F.lipschitz_z)
    with pytest.raises(physics.MonotonicityError):
        physics.make_split(F, (0.1, 2.0))


def test_example3_lipschitz_bound_holds(rng):
    F = physics.example3_flux()
    assert F.lipschitz_z == 2.0
    t = rng.uniform(0, 1, 5000)
    x, y = rng.uniform(-1, 1, (2, 5000))
    z = rng.uniform(-5, 5, 5000)
    slope = np.maximum(np.abs(F.dF1(t, x, y, z)), np.abs(F.dF2(t, x, y, z)))
    assert slope.max() <= F.lipschitz_z


def test_axis_steps_box_and_polygon_averages():
    step = physics.AxisSteps(((1.0, 0, 0.5, 0.0),))
    assert step.average_box(0.0, 0.0, 1.0, 0.0, 1.0) == 0.5
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    # {x > 0.5} cuts off a triangle of area 1/8 from a triangle of area 1/2
    assert step.average_polygon(0.0, tri) == pytest.approx(0.25, abs=1e-15)


def test_axis_steps_exact_against_shapely(rng):
    from shapely.geometry import Polygon, box
    data = physics.AxisSteps(((0.7, 0, 0.1, 1.0), (0.3, 1, -0.2, -0.5)))
    for _ in range(30):
        pts = rng.uniform(-1, 1, (6, 2))
        hull = Polygon(pts).convex_hull
        verts = np.array(hull.exterior.coords)[:-1]
        t = rng.uniform(0, 0.5)
        s0, s1 = 0.1 + t, -0.2 - 0.5 * t
        ref = (0.7 * hull.intersection(box(s0, -9, 9, 9)).area
               + 0.3 * hull.intersection(box(-9, s1, 9, 9)).area) / hull.area
        assert data.average_polygon(t, verts) == pytest.approx(ref, abs=1e-13)


def test_ramp_mean_handles_nearly_equal_endpoints():
    a = np.array([0.05 - 2.8e-17, 0.3, -0.2, -1.0])
    b = np.array([0.05 - 5.6e-17, 0.3, 0.2, 3.0])
    np.testing.assert_allclose(physics._ramp_mean(a, b), [0.05, 0.3, 0.05, 9 / 8], rtol=1e-14)


def test_unknown_case():
    with pytest.raises(KeyError):
        physics.get_case("ex9")
