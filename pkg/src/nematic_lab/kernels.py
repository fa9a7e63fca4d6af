"""Hot loops, each in a compiled loop form and a vectorized numpy form.

The public wrappers dispatch on :data:`nematic_lab._accel.USE_NUMBA`; the two
forms agree to roundoff and the test-suite checks this directly.
"""

from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import njit

TWO_PI = 2.0 * math.pi
U_CAP = 1e300
PECLET_EPS = 1e-8


# -- Scharfetter-Gummel fluxes for the multiplicative-noise equation ------------


@njit
def _bern(x):
    # B(x) = x / (e^x - 1), the Bernoulli function
    if abs(x) < 1e-10:
        return 1.0 - 0.5 * x
    return x / math.expm1(x)


@njit
def _potential(theta, phi2, eta_inst):
    c = math.cos(theta - phi2)
    s = math.sin(theta - phi2)
    if abs(c) < 1e-154:
        return U_CAP
    u = eta_inst * (s / c) ** 2
    return u if u < U_CAP else U_CAP


@njit
def _sg_flux_loop(f, h, sigma, kappa, r2, phi2):
    n = f.shape[0]
    out = np.zeros(n)
    if r2 < 1e-12:
        return out
    eta_inst = kappa / (sigma * r2)
    u_first = _potential(0.0, phi2, eta_inst)
    u_left = u_first
    for j in range(n):
        if j + 1 < n:
            u_right = _potential((j + 1) * h, phi2, eta_inst)
        else:
            u_right = u_first
        mid = (j + 0.5) * h
        v = kappa * r2 * math.sin(2.0 * (phi2 - mid))
        cm = math.cos(mid - phi2)
        dmid = r2 * r2 * cm * cm * cm * cm
        p = u_left - u_right
        if abs(p) > PECLET_EPS and v * p > 0.0:
            c = v / p
        else:
            c = sigma * dmid / h
        g_r = f[j + 1] if j + 1 < n else f[0]
        out[j] = c * (_bern(-p) * f[j] - _bern(p) * g_r)
        u_left = u_right
    return out


def _bern_np(x):
    small = np.abs(x) < 1e-10
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = x / np.expm1(x)
    return np.where(small, 1.0 - 0.5 * x, out)


def _sg_flux_numpy(f, h, sigma, kappa, r2, phi2):
    n = f.shape[0]
    if r2 < 1e-12:
        return np.zeros(n)
    eta_inst = kappa / (sigma * r2)
    theta = np.arange(n) * h
    c = np.cos(theta - phi2)
    s = np.sin(theta - phi2)
    capped = np.abs(c) < 1e-154
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        u = np.where(capped, U_CAP, np.minimum(eta_inst * (s / c) ** 2, U_CAP))
    mid = theta + 0.5 * h
    v = kappa * r2 * np.sin(2.0 * (phi2 - mid))
    dmid = r2 * r2 * np.cos(mid - phi2) ** 4
    p = u - np.roll(u, -1)
    fitted = (np.abs(p) > PECLET_EPS) & (v * p > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(fitted, v / np.where(fitted, p, 1.0), sigma * dmid / h)
    return coef * (_bern_np(-p) * f - _bern_np(p) * np.roll(f, -1))


def sg_flux(f, h, sigma, kappa, r2, phi2, use_numba: bool | None = None):
    """Interface fluxes ``J_{j+1/2}`` of ``kappa L f - sigma D f'``.

    The exponential fitting makes ``J`` vanish identically on nodal samples of
    ``exp(-eta tan^2(theta - phi2))`` with ``eta = kappa / (sigma r2)``, so the
    discrete steady state is the exact generalized von-Mises profile.
    """
    if _pick(use_numba):
        return _sg_flux_loop(np.ascontiguousarray(f, dtype=np.float64), h, sigma, kappa, r2, phi2)
    return _sg_flux_numpy(np.asarray(f, dtype=np.float64), h, sigma, kappa, r2, phi2)


# -- Euler-Maruyama angle update ------------------------------------------------


@njit
def _em_angles_loop(theta, noise, dt, sigma, drift_gain, r2, phi2, multiplicative):
    n = theta.shape[0]
    out = np.empty(n)
    sq = math.sqrt(2.0 * sigma * dt)
    for j in range(n):
        t = theta[j]
        amp = 1.0
        if multiplicative:
            c = math.cos(t - phi2)
            amp = math.sqrt(r2 * c * c)
        x = t + dt * drift_gain * r2 * math.sin(2.0 * (phi2 - t)) + sq * amp * noise[j]
        x = x % TWO_PI
        if x >= TWO_PI:
            x = 0.0
        out[j] = x
    return out


def _em_angles_numpy(theta, noise, dt, sigma, drift_gain, r2, phi2, multiplicative):
    amp = np.sqrt(r2 * np.cos(theta - phi2) ** 2) if multiplicative else 1.0
    x = theta + dt * drift_gain * r2 * np.sin(2.0 * (phi2 - theta)) + math.sqrt(2.0 * sigma * dt) * amp * noise
    return wrap_angles(x)


def wrap_angles(x):
    x = np.mod(x, TWO_PI)
    x[x >= TWO_PI] = 0.0  # np.mod(-tiny, 2 pi) rounds up to 2 pi
    return x


def em_angles(theta, noise, dt, sigma, drift_gain, r2, phi2, multiplicative, use_numba=None):
    """One homogeneous Euler-Maruyama step.

    Drift ``drift_gain * r2 sin 2(phi2 - theta)`` is the exact rewrite of the
    pairwise sum; with ``multiplicative`` the noise amplitude is
    ``sqrt(2 sigma D_j dt)`` with ``D_j = r2 cos^2(theta_j - phi2)``.
    """
    if _pick(use_numba):
        return _em_angles_loop(theta, noise, dt, sigma, drift_gain, r2, phi2, multiplicative)
    return _em_angles_numpy(theta, noise, dt, sigma, drift_gain, r2, phi2, multiplicative)


# -- pairwise drift with a distance-dependent weight -----------------------------


@njit
def _interp(x, xs, ys):
    m = xs.shape[0]
    if x <= xs[0]:
        return ys[0]
    if x >= xs[m - 1]:
        return ys[m - 1]
    lo, hi = 0, m - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= x:
            lo = mid
        else:
            hi = mid
    w = (x - xs[lo]) / (xs[hi] - xs[lo])
    return ys[lo] + w * (ys[hi] - ys[lo])


@njit
def _pairwise_loop(theta, pos, r_tab, psi_tab, kappa):
    n = theta.shape[0]
    out = np.zeros(n)
    for j in range(n):
        acc = 0.0
        for k in range(n):
            dx = pos[k, 0] - pos[j, 0]
            dy = pos[k, 1] - pos[j, 1]
            d = math.sqrt(dx * dx + dy * dy)
            acc += _interp(d, r_tab, psi_tab) * math.sin(2.0 * (theta[k] - theta[j]))
        out[j] = kappa * acc / n
    return out


def _pairwise_numpy(theta, pos, r_tab, psi_tab, kappa, chunk=1024):
    n = theta.shape[0]
    out = np.empty(n)
    e = np.exp(2j * theta)
    for start in range(0, n, chunk):
        sl = slice(start, min(start + chunk, n))
        d = np.hypot(pos[None, :, 0] - pos[sl, None, 0], pos[None, :, 1] - pos[sl, None, 1])
        w = np.interp(d, r_tab, psi_tab)
        # sin 2(theta_k - theta_j) = Im(e_k conj(e_j))
        out[sl] = kappa * np.imag((w @ e) * np.conj(e[sl])) / n
    return out


def pairwise_drift(theta, pos, r_tab, psi_tab, kappa, use_numba=None):
    """``(kappa/N) sum_k psi(|x_k - x_j|) sin 2(theta_k - theta_j)`` for every ``j``."""
    r_tab = np.asarray(r_tab, dtype=np.float64)
    psi_tab = np.asarray(psi_tab, dtype=np.float64)
    if _pick(use_numba):
        return _pairwise_loop(theta, np.ascontiguousarray(pos), r_tab, psi_tab, kappa)
    return _pairwise_numpy(theta, pos, r_tab, psi_tab, kappa)


def _pick(use_numba):
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    return bool(use_numba) and _accel.HAVE_NUMBA
