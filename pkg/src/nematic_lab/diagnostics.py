"""Lyapunov functionals, entropies, envelopes and rate fits.

Everything takes immutable densities or trajectories and returns plain
floats or small frozen records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circle_field import (
    AngularDensity,
    FloatArray,
    ModelParams,
    NoiseKind,
    l2_norm,
    order_parameter,
    spectral_derivative,
)
from .errors import InsufficientData, R2TooSmall, SupportMismatch

LOG_FLOOR = 1e-300
FIT_FLOOR = 1e-12
FIT_STOP = 1e-10


@dataclass(frozen=True)
class DiagnosticRecord:
    t: float
    r2: float
    phi2: float
    free_energy: float
    dissipation: float
    rel_entropy_uniform: float
    l2_dist_uniform: float

    FIELDS = ("t", "r2", "phi2", "free_energy", "dissipation", "rel_entropy_uniform", "l2_dist_uniform")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, k) for k in self.FIELDS)


@dataclass(frozen=True)
class PositivityEnvelope:
    times: FloatArray
    a: FloatArray
    b: FloatArray


def _entropy_integrand(v: FloatArray) -> FloatArray:
    # 0 log 0 = 0
    return np.where(v > 0, v * np.log(np.maximum(v, LOG_FLOOR)), 0.0)


def free_energy(f: AngularDensity, params: ModelParams) -> float:
    """``sigma int f log f - (kappa/4) r2^2``.

    The interaction term uses the identity that the double integral of
    ``f(theta) f(theta*) cos 2(theta* - theta)`` equals ``r2^2``.
    """
    h = f.grid.spacing
    r2 = order_parameter(f, 2).r
    return float(params.sigma * h * np.sum(_entropy_integrand(f.values)) - 0.25 * params.kappa * r2 * r2)


def _flux_terms(f: AngularDensity, params: ModelParams):
    op = order_parameter(f, 2)
    theta = f.grid.nodes
    lf = op.r * np.sin(2.0 * (op.phi - theta)) * f.values
    df = spectral_derivative(f)
    return op, theta, lf, df


def dissipation(f: AngularDensity, params: ModelParams) -> float:
    """Entropy production of the free energy.

    Constant noise: ``int (sigma f' - kappa L f)^2 / f``.  Multiplicative
    noise: ``int (sigma D f' - kappa L f)^2 / (sigma D f)``.  Nodes where the
    denominator vanishes are skipped.
    """
    op, theta, lf, df = _flux_terms(f, params)
    h = f.grid.spacing
    if params.noise_kind is NoiseKind.MULTIPLICATIVE:
        d = op.r**2 * np.cos(theta - op.phi) ** 4
        num = (params.sigma * d * df - params.kappa * lf) ** 2
        den = params.sigma * d * f.values
    else:
        num = (params.sigma * df - params.kappa * lf) ** 2
        den = f.values
    ok = den > 0
    return float(h * np.sum(num[ok] / den[ok]))


def relative_entropy(f: AngularDensity, h: AngularDensity, tol: float = 0.0) -> float:
    """Kullback-Leibler divergence ``int f log(f/h)``."""
    if f.grid != h.grid:
        raise ValueError("densities live on different grids")
    fv, hv = f.values, h.values
    bad = (fv > tol) & (hv <= tol)
    if np.any(bad):
        raise SupportMismatch(f"f is positive where h vanishes at {int(bad.sum())} nodes")
    live = fv > 0
    terms = fv[live] * (np.log(np.maximum(fv[live], LOG_FLOOR)) - np.log(np.maximum(hv[live], LOG_FLOOR)))
    return float(f.grid.spacing * np.sum(terms))


def uniform_entropy(f: AngularDensity) -> float:
    """``H[f | uniform] = int f log f + log(period)``."""
    return float(f.grid.spacing * np.sum(_entropy_integrand(f.values)) + math.log(f.grid.period))


def l2_distance_uniform(f: AngularDensity) -> float:
    return l2_norm(f.values - 1.0 / f.grid.period, f.grid)


def record(t: float, f: AngularDensity, params: ModelParams) -> DiagnosticRecord:
    op = order_parameter(f, 2)
    return DiagnosticRecord(
        t=float(t),
        r2=op.r,
        phi2=op.phi,
        free_energy=free_energy(f, params),
        dissipation=dissipation(f, params),
        rel_entropy_uniform=uniform_entropy(f),
        l2_dist_uniform=l2_distance_uniform(f),
    )


def positivity_envelope(traj, params: ModelParams) -> PositivityEnvelope:
    """Lower/upper factors ``exp(-+2 kappa int_0^t r2)`` along a trajectory.

    ``sup_theta r2 cos 2(theta - phi2) = r2``, so the inner supremum is the
    recorded order.  The time integral is a trapezoid over record times.
    """
    times = np.asarray(traj.times, dtype=np.float64)
    r2 = np.array([order_parameter(s, 2).r for s in traj.snapshots])
    integral = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(times) * (r2[1:] + r2[:-1]))))
    expo = 2.0 * params.kappa * integral
    return PositivityEnvelope(times, np.exp(-expo), np.exp(expo))


def fit_decay_rate(times, values) -> tuple[float, float]:
    """Least-squares ``lambda`` with ``values ~ C exp(-lambda t)`` and the fit's ``r^2``.

    The window opens when the series first drops below half its initial value
    and closes once it reaches ``1e-10``; only points above ``1e-12`` are
    used.  A series that never halves is fitted whole.
    """
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if t.shape != v.shape:
        raise ValueError("times and values differ in length")
    if v.size == 0:
        raise InsufficientData("empty series")
    below = np.nonzero(v < 0.5 * v[0])[0]
    start = int(below[0]) if below.size else 0
    tail = np.nonzero(v[start:] <= FIT_STOP)[0]
    stop = start + int(tail[0]) + 1 if tail.size else v.size
    tw, vw = t[start:stop], v[start:stop]
    keep = vw > FIT_FLOOR
    tw, vw = tw[keep], vw[keep]
    if tw.size < 5:
        raise InsufficientData(f"only {tw.size} usable points in the fit window")
    y = np.log(vw)
    if np.ptp(y) == 0.0:
        return 0.0, 1.0
    slope, icept = np.polyfit(tw, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - (slope * tw + icept)) ** 2))
    r_sq = 1.0 - ss_res / ss_tot
    return float(-slope), float(r_sq)


# -- order-parameter evolution laws -------------------------------------------------


def r2_rate(f: AngularDensity, params: ModelParams) -> float:
    """``2 kappa r2 [int f sin^2 2(theta - phi2) - 2 sigma/kappa]``."""
    op = order_parameter(f, 2)
    s2 = f.grid.spacing * np.dot(f.values, np.sin(2.0 * (f.grid.nodes - op.phi)) ** 2)
    return float(2.0 * params.kappa * op.r * (s2 - 2.0 * params.sigma / params.kappa))


def phi2_rate(f: AngularDensity, params: ModelParams) -> float:
    """``(kappa/r2) int f L cos 2(theta - phi2)``, equivalently ``-(kappa/2) int f sin 4(theta - phi2)``."""
    op = order_parameter(f, 2)
    return float(-0.5 * params.kappa * f.grid.spacing * np.dot(f.values, np.sin(4.0 * (f.grid.nodes - op.phi))))


def _centered(times: FloatArray, y: FloatArray) -> FloatArray:
    return (y[2:] - y[:-2]) / (times[2:] - times[:-2])


def r2_ode_residual(traj, params: ModelParams) -> float:
    """Max over interior record times of ``|centred dr2/dt - r2_rate|``."""
    times = np.asarray(traj.times, dtype=np.float64)
    if times.size < 3:
        raise InsufficientData("need at least three records")
    r2 = np.array([order_parameter(s, 2).r for s in traj.snapshots])
    rhs = np.array([r2_rate(s, params) for s in traj.snapshots[1:-1]])
    return float(np.max(np.abs(_centered(times, r2) - rhs)))


def phi2_drift_residual(traj, params: ModelParams, r2_min: float = 0.1) -> float:
    """Max over interior record times of ``|centred dphi2/dt - phi2_rate|``."""
    times = np.asarray(traj.times, dtype=np.float64)
    if times.size < 3:
        raise InsufficientData("need at least three records")
    ops = [order_parameter(s, 2) for s in traj.snapshots]
    r2 = np.array([o.r for o in ops])
    if np.any(r2 <= r2_min):
        raise R2TooSmall(f"r2 drops to {r2.min():.3g} <= {r2_min}")
    # phi2 lives on a circle of length pi
    phi = np.unwrap(2.0 * np.array([o.phi for o in ops])) / 2.0
    rhs = np.array([phi2_rate(s, params) for s in traj.snapshots[1:-1]])
    return float(np.max(np.abs(_centered(times, phi) - rhs)))
