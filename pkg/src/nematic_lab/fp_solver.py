"""Time integration of the homogeneous mean-field equation on the circle.

Two steppers:

* constant noise, ``f_t = -kappa (L f)' + sigma f''``: second-order
  exponential time differencing (ETD2RK) in Fourier space.  Diffusion is
  integrated exactly per mode; the drift is evaluated pseudospectrally with
  2/3 dealiasing.
* multiplicative noise, ``f_t = -kappa (L f)' + sigma (D f')'`` with
  ``D = r2^2 cos^4(theta - phi2)``: explicit conservative finite volumes with
  exponentially fitted (Scharfetter-Gummel) fluxes.  The same stepper runs
  the folded density ``g`` on a pi-periodic grid.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .circle_field import (
    TWO_PI,
    AngleGrid,
    AngularDensity,
    ModelParams,
    NoiseKind,
    fourier_mode,
    normalize,
    order_parameter,
)
from .diagnostics import DiagnosticRecord, record
from .equilibria import FamilyKind, VonMisesParams, von_mises_density
from .errors import UnstableStep

log = logging.getLogger(__name__)

CLAMP_TOL = 1e-13
STEADY_TOL = 1e-9
BLOWUP_FACTOR = 10.0


class Scheme(str, enum.Enum):
    IMEX_SPECTRAL = "imex_spectral"
    EXPLICIT_FLUX = "explicit_flux"


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    scheme: Scheme = Scheme.IMEX_SPECTRAL
    record_every: int = 1
    clamp_tol: float = CLAMP_TOL
    steady_tol: float = STEADY_TOL

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be a positive integer")
        object.__setattr__(self, "record_every", int(self.record_every))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    snapshots: tuple[AngularDensity, ...]
    series: tuple[DiagnosticRecord, ...]
    steady: bool = False
    steps: int = 0
    dt: float = 0.0

    def __len__(self) -> int:
        return len(self.snapshots)

    @property
    def final(self) -> AngularDensity:
        return self.snapshots[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(rec, name) for rec in self.series])


# -- stability bounds ------------------------------------------------------------


def _cutoff(grid: AngleGrid) -> float:
    return (grid.n_points // 3) * TWO_PI / grid.period


def stable_dt(scheme: Scheme | str, params: ModelParams, grid: AngleGrid, r2_max: float = 1.0) -> float:
    """Largest recommended step for ``scheme``.

    ``r2_max`` bounds the nematic order over the run (1 is always safe).
    """
    scheme = Scheme(scheme)
    kappa, sigma = params.kappa, params.sigma
    if scheme is Scheme.IMEX_SPECTRAL:
        # advection at the dealiasing cutoff damped by the exact diffusion factor
        kc = _cutoff(grid)
        return 0.5 * min(1.0 / kappa, (8.0 * sigma / (kappa**4 * kc**2)) ** (1.0 / 3.0))
    h = grid.spacing
    return 0.4 / (kappa * r2_max / h + 2.0 * sigma * r2_max**2 / h**2)


# -- constant noise ----------------------------------------------------------------


@lru_cache(maxsize=64)
def _etd_coefficients(n: int, period: float, dt: float, sigma: float):
    k = np.arange(n // 2 + 1) * (TWO_PI / period)
    z = -sigma * k * k * dt
    ez = np.exp(z)
    phi1 = np.empty_like(z)
    phi2 = np.empty_like(z)
    small = np.abs(z) < 0.1
    zs = z[small]
    # Taylor series avoid cancellation near z = 0
    phi1[small] = 1 + zs / 2 + zs**2 / 6 + zs**3 / 24 + zs**4 / 120 + zs**5 / 720
    phi2[small] = 0.5 + zs / 6 + zs**2 / 24 + zs**3 / 120 + zs**4 / 720 + zs**5 / 5040
    zl = z[~small]
    phi1[~small] = np.expm1(zl) / zl
    phi2[~small] = (np.expm1(zl) - zl) / zl**2
    ik = 1j * k
    ik[np.arange(k.size) > n // 3] = 0.0  # 2/3 rule, Nyquist included
    for arr in (ez, phi1, phi2, ik):
        arr.setflags(write=False)
    return ez, phi1 * dt, phi2 * dt, ik


def _drift_hat(u_hat: np.ndarray, n: int, h: float, kappa: float, ik: np.ndarray) -> np.ndarray:
    f = np.fft.irfft(u_hat, n=n)
    # harmonic-2 moment c2 = h sum f e^{2 i theta} = h conj(F_2)
    c2 = h * np.conj(u_hat[2])
    theta = np.arange(n) * h
    lf = np.imag(c2 * np.exp(-2j * theta)) * f
    return -kappa * ik * np.fft.rfft(lf)


def step_constant_noise(f: AngularDensity, dt: float, params: ModelParams, clamp_tol: float = CLAMP_TOL) -> AngularDensity:
    """One ETD2RK step of ``f_t = -kappa (L[f] f)' + sigma f''``."""
    grid = f.grid
    if grid.period != TWO_PI:
        raise ValueError("the constant-noise stepper needs a 2 pi periodic grid")
    n, h = grid.n_points, grid.spacing
    ez, p1, p2, ik = _etd_coefficients(n, grid.period, float(dt), params.sigma)
    u = np.fft.rfft(f.values)
    nu = _drift_hat(u, n, h, params.kappa, ik)
    a = ez * u + p1 * nu
    na = _drift_hat(a, n, h, params.kappa, ik)
    u_new = a + p2 * (na - nu)
    return _finish(f, np.fft.irfft(u_new, n=n), clamp_tol)


# -- multiplicative noise ---------------------------------------------------------


def step_degenerate(f: AngularDensity, dt: float, params: ModelParams, clamp_tol: float = CLAMP_TOL) -> AngularDensity:
    """One explicit finite-volume step of ``f_t = -kappa (L f)' + sigma (D f')'``.

    Works on 2 pi grids (for ``f``) and pi grids (for the folded ``g``).
    """
    grid = f.grid
    h = grid.spacing
    c2 = fourier_mode(f, 2)
    r2 = abs(c2)
    if r2 < 1e-12:
        return f
    phi2 = order_parameter(f, 2).phi
    flux = kernels.sg_flux(f.values, h, params.sigma, params.kappa, r2, phi2)
    new = f.values - (dt / h) * (flux - np.roll(flux, 1))
    return _finish(f, new, clamp_tol)


def g_transform(f: AngularDensity) -> AngularDensity:
    """Fold a 2 pi density onto ``[0, pi)``: ``g(theta) = f(theta) + f(theta + pi)``."""
    grid = f.grid
    if grid.period != TWO_PI:
        raise ValueError("g_transform expects a 2 pi periodic density")
    half = grid.n_points // 2
    return AngularDensity(AngleGrid.half_circle(half), f.values[:half] + f.values[half:])


def _finish(f: AngularDensity, new: np.ndarray, clamp_tol: float) -> AngularDensity:
    if not np.all(np.isfinite(new)):
        raise UnstableStep("non-finite values after step")
    prev_max = float(np.max(np.abs(f.values)))
    if np.max(np.abs(new)) > BLOWUP_FACTOR * prev_max:
        raise UnstableStep(f"max |f| grew from {prev_max:.3g} to {np.max(np.abs(new)):.3g} in one step")
    lo = float(new.min())
    if lo < 0:
        if lo <= -clamp_tol:
            raise UnstableStep(f"negative density {lo:.3g} beyond clamp tolerance")
        new = np.maximum(new, 0.0)
        return normalize(AngularDensity(f.grid, new))
    return AngularDensity(f.grid, new)


# -- driver ------------------------------------------------------------------------


def evolve(f0: AngularDensity, cfg: SolverConfig, params: ModelParams) -> Trajectory:
    """Integrate to ``cfg.t_end`` recording every ``cfg.record_every`` steps.

    The step count is ``ceil(t_end / dt)`` with the step shrunk to land on
    ``t_end`` exactly.  The run stops early, with ``steady=True``, once the
    sup-norm change between consecutive records per unit time is below
    ``cfg.steady_tol``.
    """
    if float(f0.values.min()) < 0:
        raise ValueError("initial density must be nonnegative")
    stepper = step_constant_noise if cfg.scheme is Scheme.IMEX_SPECTRAL else step_degenerate
    n_steps = max(1, math.ceil(cfg.t_end / cfg.dt - 1e-9))
    dt = cfg.t_end / n_steps

    f = f0
    times = [0.0]
    snaps = [f0]
    series = [record(0.0, f0, params)]
    steady = False
    k = 0
    for k in range(1, n_steps + 1):
        t = k * dt
        try:
            f = stepper(f, dt, params, cfg.clamp_tol)
        except UnstableStep as exc:
            exc.time = t
            raise
        if k % cfg.record_every == 0 or k == n_steps:
            change = float(np.max(np.abs(f.values - snaps[-1].values))) / (t - times[-1])
            times.append(t)
            snaps.append(f)
            series.append(record(t, f, params))
            if change < cfg.steady_tol:
                steady = True
                log.debug("steady at t=%.6g (change rate %.3g)", t, change)
                break
    return Trajectory(np.array(times), tuple(snaps), tuple(series), steady, k, dt)


def default_config(params: ModelParams, grid: AngleGrid, t_end: float, **kw) -> SolverConfig:
    scheme = Scheme.IMEX_SPECTRAL if params.noise_kind is NoiseKind.CONSTANT else Scheme.EXPLICIT_FLUX
    scheme = Scheme(kw.pop("scheme", scheme))
    dt = kw.pop("dt", None) or stable_dt(scheme, params, grid)
    return SolverConfig(dt=dt, t_end=t_end, scheme=scheme, **kw)


# -- initial data ------------------------------------------------------------------


def uniform(grid: AngleGrid) -> AngularDensity:
    return AngularDensity.uniform(grid)


def harmonic(grid: AngleGrid, eps: float, n: int, a: float = 0.0) -> AngularDensity:
    """``(1 + eps cos n(theta - a)) / period``, requiring ``|eps| <= 1``."""
    if abs(eps) > 1:
        raise ValueError("|eps| must be at most 1 for a nonnegative density")
    return normalize(AngularDensity(grid, 1.0 + eps * np.cos(n * (grid.nodes - a))))


def von_mises(grid: AngleGrid, eta: float, phi: float = 0.0, kind: str = "standard") -> AngularDensity:
    return von_mises_density(VonMisesParams(FamilyKind(kind), eta, phi), grid)


def mixture(*parts: tuple[float, AngularDensity]) -> AngularDensity:
    """Convex combination ``sum w_i f_i`` of densities on a common grid."""
    grid = parts[0][1].grid
    total = np.zeros(grid.n_points)
    for w, d in parts:
        if d.grid != grid:
            raise ValueError("mixture components must share a grid")
        if w < 0:
            raise ValueError("mixture weights must be nonnegative")
        total += w * d.values
    return normalize(AngularDensity(grid, total))


def table(grid: AngleGrid, theta, values) -> AngularDensity:
    """Periodic piecewise-linear interpolation of user samples, normalised."""
    theta = np.asarray(theta, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if np.any(values < 0):
        raise ValueError("tabulated density must be nonnegative")
    v = np.interp(grid.nodes, theta, values, period=grid.period)
    return normalize(AngularDensity(grid, v))


INITIAL_DATA = {"uniform": uniform, "harmonic": harmonic, "von_mises": von_mises, "table": table}
