import math

import numpy as np
import pytest
from conftest import random_edges

from bvfv import fv2d, mesh, metrics, physics
from bvfv.fv2d import CFLError, DiscreteField2D, SchemeConfig

UNIT = (-1.0, 1.0, -1.0, 1.0)


def random_grid(rng, n=8, m=6):
    return mesh.build_cartesian(random_edges(rng, -1, 1, n), random_edges(rng, -1, 1, m))


def random_state(rng, grid, lo=0.0, hi=1.0):
    return DiscreteField2D(rng.uniform(lo, hi, grid.shape), grid)


def config(grid, flux=physics.LINEAR, velocity=None, frac=1.0, **kw):
    velocity = velocity or physics.EX1_VELOCITY
    g = physics.godunov(flux)
    delta = frac * fv2d.max_timestep(grid, g.lipschitz, velocity.sup_bound)
    return SchemeConfig(grid=grid, flux=g, velocity=velocity, delta=delta, **kw)


def test_project_initial_examples():
    g = mesh.uniform_grid(UNIT, 4)
    ones = fv2d.project_initial(lambda x, y: np.ones_like(x + y), g).values
    np.testing.assert_allclose(ones, 1.0, atol=1e-15, rtol=0)
    unit = mesh.build_cartesian([0, 1], [0, 1])
    step = physics.AxisSteps(((1.0, 0, 0.5, 0.0),))
    assert fv2d.project_initial(step, unit).values[0, 0] == 0.5


def test_project_initial_smooth_against_closed_form(rng):
    g = random_grid(rng, 10, 10)
    got = fv2d.project_initial(lambda x, y: np.exp(x + y), g).values
    ex = np.diff(np.exp(g.x_edges))[:, None] * np.diff(np.exp(g.y_edges))[None, :] / g.areas
    np.testing.assert_allclose(got, ex, rtol=1e-8)


def test_project_initial_midpoint_oracle():
    g = mesh.uniform_grid(UNIT, 8)
    got = fv2d.project_initial(lambda x, y: np.exp(x + y), g).values
    n = 20
    ref = np.zeros(g.shape)
    for i in range(8):
        for j in range(8):
            xs = g.x_edges[i] + (np.arange(n) + 0.5) / n * g.k[i]
            ys = g.y_edges[j] + (np.arange(n) + 0.5) / n * g.h[j]
            ref[i, j] = np.exp(xs[:, None] + ys[None, :]).mean()
    # the composite midpoint rule itself is only O((h/20)^2) accurate
    np.testing.assert_allclose(got, ref, rtol=2e-5)


def test_max_timestep_examples(rng):
    g = mesh.uniform_grid((0, 1, 0, 1), 10)
    assert fv2d.max_timestep(g, 1.0, 1.0) == pytest.approx(0.1 / 8)
    assert fv2d.max_timestep(g, 1.0, 2.0) == pytest.approx(0.1 / 16)
    r = random_grid(rng)
    worst = max(1 / k + 1 / h for k in r.k for h in r.h)
    assert fv2d.max_timestep(r, 2.0, 0.5) == pytest.approx(1 / (4 * worst * 2.0 * 0.5))
    assert fv2d.max_timestep(r, 0.0, 1.0) == math.inf


def test_cfl_refusal():
    g = mesh.uniform_grid(UNIT, 8)
    with pytest.raises(CFLError):
        config(g, frac=1.5)
    ok = config(g, frac=1.0)
    s = fv2d.project_initial(lambda x, y: x * 0 + 1, g)
    with pytest.raises(CFLError):
        fv2d.step(s, ok, 0.0, 2 * ok.delta)


def test_zero_velocity_is_identity(rng):
    g = random_grid(rng)
    cfg = SchemeConfig(grid=g, flux=physics.godunov(physics.SINUSOIDAL),
                       velocity=physics.zero_velocity(), delta=0.3)
    s = random_state(rng, g)
    assert np.array_equal(fv2d.step(s, cfg, 0, 0.3).values, s.values)
    assert np.array_equal(fv2d.step_convex(s, cfg, 0, 0.3).values, s.values)


def test_two_by_two_upwind_by_hand():
    g = mesh.uniform_grid((0, 1, 0, 1), 2)
    a = np.array([[0.2, 0.9], [0.5, 0.1]])
    delta = 0.05
    cfg = SchemeConfig(grid=g, flux=physics.godunov(physics.LINEAR),
                       velocity=physics.constant_velocity(1.0, 0.0), delta=delta)
    out = fv2d.step(DiscreteField2D(a, g), cfg, 0.0, delta).values
    expect = [[0.0, 0.0], [0.0, 0.0]]
    for j in range(2):
        # closed walls: only the middle x-face carries flux, value a[0, j]
        flow = a[0][j]
        expect[0][j] = a[0][j] - delta / 0.5 * flow
        expect[1][j] = a[1][j] + delta / 0.5 * flow
    np.testing.assert_allclose(out, expect, atol=1e-15)


@pytest.mark.parametrize("flux", [physics.LINEAR, physics.SINUSOIDAL], ids=["lin", "sin"])
@pytest.mark.parametrize("boundary", ["closed", "transmissive"])
def test_step_equals_step_convex(rng, flux, boundary):
    for _ in range(25):
        g = random_grid(rng, rng.integers(2, 9), rng.integers(2, 9))
        vel = physics.cellular_velocity(rng.uniform(0.1, 2.0), time_factor=bool(rng.integers(2)))
        cfg = config(g, flux, vel, frac=rng.uniform(0.2, 1.0), boundary=boundary,
                     source=physics.example1_source(flux) if rng.integers(2) else None)
        s = random_state(rng, g, -1, 1)
        t0 = rng.uniform(0, 1)
        a = fv2d.step(s, cfg, t0, t0 + cfg.delta).values
        b = fv2d.step_convex(s, cfg, t0, t0 + cfg.delta).values
        np.testing.assert_allclose(a, b, atol=1e-12, rtol=0)


def test_convex_coefficients_nonnegative_and_bounded(rng):
    g = random_grid(rng)
    cfg = config(g, physics.SINUSOIDAL, frac=1.0)
    s = random_state(rng, g, -1, 1)
    w = fv2d.convex_coefficients(s, cfg, 0.5, 0.5 + cfg.delta)
    assert all(np.all(c >= 0) for c in w)
    assert np.all(sum(w) <= 1 + 1e-12)
    # constant states: D(a, a) = 0 keeps everything finite
    c = DiscreteField2D(np.full(g.shape, 0.3), g)
    assert all(np.all(np.isfinite(x)) for x in fv2d.convex_coefficients(c, cfg, 0, cfg.delta))


def test_zero_steps_returns_initial(rng):
    g = random_grid(rng)
    s = random_state(rng, g)
    out, trace = fv2d.run(s, config(g), 0.0)
    assert out is s and len(trace.times) == 1


def test_run_lands_on_final_time(rng):
    g = random_grid(rng)
    cfg = config(g, frac=0.9)
    out, trace = fv2d.run(random_state(rng, g), cfg, 0.3)
    assert out.t == pytest.approx(0.3, abs=1e-15)
    assert max(np.diff(trace.times)) <= cfg.delta


@pytest.mark.parametrize("flux", [physics.LINEAR, physics.SINUSOIDAL], ids=["lin", "sin"])
def test_mass_conserved_closed(rng, flux):
    g = random_grid(rng, 10, 9)
    cfg = config(g, flux, physics.EX2_VELOCITY, frac=1.0)
    s = random_state(rng, g)
    out, trace = fv2d.run(s, cfg, 100 * cfg.delta)
    assert len(trace.mass) == 101
    assert abs(out.mass - s.mass) <= 1e-12 * abs(s.mass)


@pytest.mark.parametrize("flux", [physics.LINEAR, physics.SINUSOIDAL], ids=["lin", "sin"])
def test_max_principle_constant_velocity(rng, flux):
    g = random_grid(rng, 12, 10)
    cfg = config(g, flux, physics.constant_velocity(0.7, -0.4), frac=1.0,
                 boundary="transmissive")
    s = random_state(rng, g, -0.5, 1.5)
    _, trace = fv2d.run(s, cfg, 60 * cfg.delta, keep_fields=True)
    stack = np.stack(trace.fields)
    assert stack.min() >= s.values.min() - 1e-14
    assert stack.max() <= s.values.max() + 1e-14


def test_growth_bound_with_divergence(rng):
    # |div u| <= t * pi / 8 for the first example's field, so int_0^1 sup |div u| = pi / 16
    g = random_grid(rng, 10, 10)
    cfg = config(g, physics.LINEAR, physics.EX1_VELOCITY, frac=1.0)
    s = random_state(rng, g)
    _, trace = fv2d.run(s, cfg, 1.0)
    bound = math.exp(1.0 * math.pi / 16) * (np.abs(s.values).max() + 0.0)
    assert max(trace.sup) <= bound


def test_constant_is_fixed_point(rng):
    g = random_grid(rng)
    cfg = config(g, physics.SINUSOIDAL, physics.constant_velocity(0.3, 0.8), frac=1.0,
                 boundary="transmissive")
    s = DiscreteField2D(np.full(g.shape, 0.37), g)
    out, _ = fv2d.run(s, cfg, 20 * cfg.delta)
    np.testing.assert_allclose(out.values, 0.37, atol=1e-15)


def test_inflow_translates_step_data():
    case = physics.get_case("ex2-linear")
    g = mesh.uniform_grid(case.domain, 16)
    cfg = SchemeConfig(grid=g, flux=physics.godunov(physics.LINEAR), velocity=case.velocity,
                       delta=0.0234, boundary="inflow", ghost=case.exact)
    out, _ = fv2d.run(fv2d.project_initial(case.initial, g), cfg, 0.375)
    # Courant number 1/4 per direction: a smeared but bounded translate
    assert 0 <= out.values.min() and out.values.max() <= 1 + 1e-14
    assert metrics.error_norms(out, case.exact, normalize=True)[1] < 0.1


def test_rejects_bad_config():
    g = mesh.uniform_grid(UNIT, 4)
    kw = dict(grid=g, flux=physics.godunov(physics.LINEAR), velocity=physics.zero_velocity())
    with pytest.raises(ValueError):
        SchemeConfig(delta=-1.0, **kw)
    with pytest.raises(ValueError):
        SchemeConfig(delta=0.1, boundary="periodic", **kw)
    with pytest.raises(ValueError):
        SchemeConfig(delta=0.1, boundary="inflow", **kw)
    with pytest.raises(ValueError):
        DiscreteField2D(np.zeros((3, 4)), g)
