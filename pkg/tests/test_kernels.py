from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nematic_lab import _accel, kernels

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


@needs_numba
@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), r2=st.floats(0.01, 1.0), phi2=st.floats(0.0, math.pi))
def test_sg_flux_paths_agree(seed, r2, phi2):
    rng = np.random.default_rng(seed)
    f = rng.random(256)
    h = 2 * math.pi / 256
    a = kernels.sg_flux(f, h, 0.7, 1.3, r2, phi2, use_numba=True)
    b = kernels.sg_flux(f, h, 0.7, 1.3, r2, phi2, use_numba=False)
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a)))


@pytest.mark.parametrize("use_numba", [False, pytest.param(True, marks=needs_numba)])
def test_sg_flux_vanishes_on_gibbs_profile(use_numba):
    n, sigma, kappa, r2, phi2 = 512, 0.8, 1.7, 0.6, 0.9
    h = 2 * math.pi / n
    theta = np.arange(n) * h
    eta = kappa / (sigma * r2)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.exp(-eta * np.tan(theta - phi2) ** 2)
    f[np.abs(np.cos(theta - phi2)) < 1e-154] = 0.0
    j = kernels.sg_flux(f, h, sigma, kappa, r2, phi2, use_numba=use_numba)
    assert np.max(np.abs(j)) < 1e-12


@pytest.mark.parametrize("use_numba", [False, pytest.param(True, marks=needs_numba)])
def test_sg_flux_zero_when_disordered(use_numba):
    f = np.random.default_rng(0).random(64)
    assert not np.any(kernels.sg_flux(f, 0.1, 1.0, 1.0, 1e-13, 0.0, use_numba=use_numba))


def test_sg_flux_consistent_with_continuum_flux():
    # smooth data far from the zeros of D: SG flux -> kappa L f - sigma D f'
    n, sigma, kappa, r2, phi2 = 4096, 1.0, 1.0, 0.5, 0.0
    h = 2 * math.pi / n
    theta = np.arange(n) * h
    f = 1 + 0.3 * np.cos(2 * theta)
    j = kernels.sg_flux(f, h, sigma, kappa, r2, phi2, use_numba=False)
    mid = theta + 0.5 * h
    fm = 1 + 0.3 * np.cos(2 * mid)
    dfm = -0.6 * np.sin(2 * mid)
    exact = kappa * r2 * np.sin(2 * (phi2 - mid)) * fm - sigma * r2**2 * np.cos(mid) ** 4 * dfm
    inner = np.abs(np.cos(mid)) > 0.5
    assert np.max(np.abs(j - exact)[inner]) < 1e-5


@needs_numba
@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), mult=st.booleans())
def test_em_paths_agree(seed, mult):
    rng = np.random.default_rng(seed)
    th = rng.random(500) * 2 * math.pi
    z = rng.standard_normal(500)
    a = kernels.em_angles(th, z, 0.01, 0.4, 1.0, 0.5, 0.3, mult, use_numba=True)
    b = kernels.em_angles(th, z, 0.01, 0.4, 1.0, 0.5, 0.3, mult, use_numba=False)
    assert np.max(np.abs(np.angle(np.exp(1j * (a - b))))) < 1e-13
    assert np.all((a >= 0) & (a < 2 * math.pi))


def test_wrap_angles_edge():
    x = kernels.wrap_angles(np.array([-1e-18, 2 * math.pi, 7.0, -7.0]))
    assert np.all((x >= 0) & (x < 2 * math.pi))


@pytest.mark.parametrize("use_numba", [False, pytest.param(True, marks=needs_numba)])
def test_pairwise_drift_with_unit_weight_is_mean_field(use_numba):
    rng = np.random.default_rng(1)
    th = rng.random(300) * 2 * math.pi
    pos = rng.random((300, 2))
    d = kernels.pairwise_drift(th, pos, [0.0, 1.0], [1.0, 1.0], 2.0, use_numba=use_numba)
    c = np.mean(np.exp(2j * th))
    expected = 2.0 * abs(c) * np.sin(np.angle(c) - 2 * th)
    assert np.max(np.abs(d - expected)) < 1e-12


@needs_numba
def test_pairwise_paths_agree():
    rng = np.random.default_rng(2)
    th = rng.random(400) * 2 * math.pi
    pos = rng.random((400, 2)) * 3
    r, psi = [0.0, 0.5, 1.5], [1.0, 0.6, 0.1]
    a = kernels.pairwise_drift(th, pos, r, psi, 1.0, use_numba=True)
    b = kernels.pairwise_drift(th, pos, r, psi, 1.0, use_numba=False)
    assert np.max(np.abs(a - b)) < 1e-12
