from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nematic_lab.circle_field import AngleGrid, AngularDensity, ModelParams, fourier_mode, mass, normalize, order_parameter
from nematic_lab.diagnostics import positivity_envelope
from nematic_lab.equilibria import solve_compatibility, solve_degenerate
from nematic_lab.errors import UnstableStep
from nematic_lab.fp_solver import (
    Scheme,
    SolverConfig,
    evolve,
    g_transform,
    harmonic,
    mixture,
    stable_dt,
    step_constant_noise,
    step_degenerate,
    table,
    uniform,
    von_mises,
)

G256 = AngleGrid.circle(256)
TINY_KAPPA = 1e-12  # stands in for kappa = 0, which ModelParams rejects


def test_uniform_is_fixed_point():
    u = uniform(G256)
    out = step_constant_noise(u, 0.01, ModelParams(0.1, 1.0))
    assert np.max(np.abs(out.values - u.values)) < 1e-15


def test_heat_decay_of_mode_two():
    sigma, dt = 0.3, 0.05
    f = harmonic(G256, 1.0, 2)
    p = ModelParams(sigma, TINY_KAPPA)
    c0 = fourier_mode(f, 2)
    out = step_constant_noise(f, dt, p)
    assert abs(fourier_mode(out, 2) / c0 - math.exp(-4 * sigma * dt)) < 1e-10


def test_fourth_mode_only_is_pure_heat_flow():
    f = harmonic(G256, 1.0, 4)
    p = ModelParams(0.1, 1.0)
    for _ in range(1000):
        f = step_constant_noise(f, 0.01, p)
        assert order_parameter(f, 2).r < 1e-12
    c4 = abs(fourier_mode(f, 4))
    assert c4 == pytest.approx(0.5 * math.exp(-16 * 0.1 * 10.0), rel=1e-9)


def test_blowup_guard():
    f = harmonic(G256, 0.5, 2)
    with pytest.raises(UnstableStep):
        step_constant_noise(f, 5.0, ModelParams(1e-4, 50.0))


def test_degenerate_uniform_and_disordered_are_stationary():
    p = ModelParams(1.0, 1.0, "multiplicative")
    u = uniform(AngleGrid.circle(128))
    assert step_degenerate(u, 1e-3, p) is u
    f = harmonic(AngleGrid.circle(128), 0.5, 4)
    assert np.array_equal(step_degenerate(f, 1e-3, p).values, f.values)


@pytest.mark.parametrize("kappa", [0.5, 1.0, 3.0])
def test_degenerate_equilibrium_is_discrete_steady_state(kappa):
    p = ModelParams(1.0, kappa, "multiplicative")
    g = AngleGrid.circle(512)
    m = von_mises(g, solve_degenerate(p), 0.0, "degenerate")
    dt = stable_dt(Scheme.EXPLICIT_FLUX, p, g)
    f = m
    for _ in range(math.ceil(0.05 / dt)):
        f = step_degenerate(f, dt, p)
    assert np.max(np.abs(f.values - m.values)) / np.max(m.values) <= 1e-5


def test_degenerate_mass_conservation_on_half_grid():
    p = ModelParams(0.5, 1.0, "multiplicative")
    gh = AngleGrid.half_circle(128)
    f = normalize(AngularDensity(gh, 1 + 0.8 * np.cos(2 * gh.nodes - 0.3)))
    dt = stable_dt(Scheme.EXPLICIT_FLUX, p, gh)
    for _ in range(500):
        f = step_degenerate(f, dt, p)
    assert abs(mass(f) - 1.0) < 1e-12
    assert f.values.min() >= 0


def test_g_transform():
    g = AngleGrid.circle(64)
    u = uniform(g)
    gu = g_transform(u)
    assert gu.grid.period == pytest.approx(math.pi)
    assert np.allclose(gu.values, 1 / math.pi, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_g_transform_preserves_mass(seed):
    rng = np.random.default_rng(seed)
    f = normalize(AngularDensity(AngleGrid.circle(64), rng.random(64) + 0.01))
    assert abs(mass(g_transform(f)) - mass(f)) <= 1e-14


def test_evolve_uniform_is_steady_at_first_report():
    tr = evolve(uniform(G256), SolverConfig(dt=0.01, t_end=10, record_every=5), ModelParams(0.1, 1.0))
    assert tr.steady and len(tr.times) == 2


def test_evolve_subcritical_decays_to_uniform():
    f0 = mixture((0.9, uniform(G256)), (0.1, von_mises(G256, 1.0)))
    tr = evolve(f0, SolverConfig(dt=0.01, t_end=20, record_every=50, steady_tol=0.0), ModelParams(0.5, 1.0))
    r2 = tr.column("r2")
    assert np.all(np.diff(r2) < 0)
    assert np.max(np.abs(tr.final.values - 1 / (2 * math.pi))) < 1e-6


def test_evolve_supercritical_limit():
    p = ModelParams(0.1, 1.0)
    f0 = mixture((0.9, uniform(G256)), (0.1, von_mises(G256, 3.0)))
    tr = evolve(f0, SolverConfig(dt=0.01, t_end=200, record_every=100), p)
    assert tr.steady
    assert abs(tr.series[-1].r2 - solve_compatibility(p).r2_predicted) < 1e-4


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), ratio=st.floats(0.05, 1.0))
def test_mass_positivity_and_envelope(seed, ratio):
    rng = np.random.default_rng(seed)
    theta = G256.nodes
    v = 1 + sum(0.25 * rng.standard_normal() * np.cos(k * theta + rng.random() * 6) for k in range(1, 5))
    f0 = normalize(AngularDensity(G256, np.maximum(v, 0.1)))
    p = ModelParams(ratio, 1.0)
    tr = evolve(f0, SolverConfig(dt=0.5 * stable_dt("imex_spectral", p, G256), t_end=3.0, record_every=10), p)
    env = positivity_envelope(tr, p)
    lo, hi = f0.values.min(), f0.values.max()
    for snap, a, b in zip(tr.snapshots, env.a, env.b):
        assert abs(mass(snap) - 1.0) <= 1e-10
        assert snap.values.min() > 0
        assert snap.values.min() >= a * lo - 1e-6
        assert snap.values.max() <= b * hi + 1e-6


def test_unstable_step_carries_time():
    f0 = harmonic(G256, 0.5, 2)
    with pytest.raises(UnstableStep) as exc:
        evolve(f0, SolverConfig(dt=5.0, t_end=50.0), ModelParams(1e-4, 50.0))
    assert exc.value.time == pytest.approx(5.0)
    assert "t=5" in str(exc.value)


def test_table_initial_data():
    t = np.linspace(0, 2 * math.pi, 9)[:-1]
    f = table(G256, t, 1 + np.cos(t) ** 2)
    assert mass(f) == pytest.approx(1.0, abs=1e-14)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(dt=0.0, t_end=1.0)
    with pytest.raises(ValueError):
        SolverConfig(dt=0.1, t_end=1.0, record_every=0)
    assert SolverConfig(dt=0.1, t_end=1.0, scheme="explicit_flux").scheme is Scheme.EXPLICIT_FLUX
