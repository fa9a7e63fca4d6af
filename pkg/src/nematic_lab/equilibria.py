"""Steady states of both noise models and their compatibility conditions.

Constant noise: the von-Mises family ``exp(eta cos 2(Phi - theta)) / Z(eta)``
with ``eta`` fixed by ``<cos 2 theta>_M = (2 sigma / kappa) eta``.  A positive
root exists exactly when ``sigma / kappa < 1/4``.

Multiplicative noise: the pi-periodic family ``exp(-eta / cos^2(Phi - theta))``
whose concentration solves ``beta_tilde(eta) = kappa / sigma`` for every ratio.

All normalisation constants and weighted averages come from periodic
trapezoid quadrature, so no special functions are involved.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .circle_field import (
    TWO_PI,
    AngleGrid,
    AngularDensity,
    AngularField,
    FloatArray,
    ModelParams,
    normalize,
    order_parameter,
)
from .errors import IncompatibleTriple

CRITICAL_RATIO = 0.25
COS_GUARD = 1e-154
ROOT_TOL = 1e-12
COMPAT_TOL = 1e-8


class FamilyKind(str, enum.Enum):
    STANDARD = "standard"
    DEGENERATE = "degenerate"


class Regime(str, enum.Enum):
    SUBCRITICAL = "subcritical_uniform_only"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical_bifurcation"


@dataclass(frozen=True)
class VonMisesParams:
    kind: FamilyKind
    eta: float
    phi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", FamilyKind(self.kind))
        if not self.eta >= 0:
            raise ValueError(f"eta must be nonnegative, got {self.eta}")


@dataclass(frozen=True)
class TwoPeakParams:
    eta: float
    phi: float
    c1: float
    c2: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.c1 < 0 or self.c2 < 0 or not self.c1 + self.c2 > 0:
            raise ValueError("lobe weights must be nonnegative with a positive sum")


@dataclass(frozen=True)
class PhaseClassification:
    ratio: float
    regime: Regime
    eta_star: float | None = None

    @property
    def r2_predicted(self) -> float:
        """Nematic order ``2 sigma eta / kappa`` of the nontrivial branch, 0 if absent."""
        if self.eta_star is None:
            return 0.0
        return 2.0 * self.ratio * self.eta_star


# -- profiles ---------------------------------------------------------------


def _standard_profile(theta: FloatArray, eta: float, phi: float) -> FloatArray:
    # shifted by exp(-eta) so large eta cannot overflow
    return np.exp(eta * (np.cos(2.0 * (phi - theta)) - 1.0))


def _degenerate_profile(theta: FloatArray, eta: float, phi: float) -> FloatArray:
    """``exp(-eta tan^2(theta - phi))``, i.e. ``exp(-eta / cos^2)`` up to ``exp(eta)``.

    Exactly zero where ``|cos| < COS_GUARD``.
    """
    c = np.cos(theta - phi)
    s = np.sin(theta - phi)
    out = np.zeros_like(theta, dtype=np.float64)
    ok = np.abs(c) >= COS_GUARD
    if eta == 0.0:
        out[ok] = 1.0
        return out
    t2 = (s[ok] / c[ok]) ** 2
    out[ok] = np.exp(-eta * t2)
    return out


def von_mises_density(p: VonMisesParams, grid: AngleGrid) -> AngularDensity:
    theta = grid.nodes
    if p.kind is FamilyKind.STANDARD:
        raw = _standard_profile(theta, p.eta, p.phi)
    else:
        raw = _degenerate_profile(theta, p.eta, p.phi)
    return normalize(AngularDensity(grid, raw))


def two_peak_density(p: TwoPeakParams, grid: AngleGrid) -> AngularDensity:
    """Two-lobe steady state of the multiplicative model on the full circle.

    Lobe weights ``c1`` (on ``|theta - Phi| < pi/2``) and ``c2`` (the opposite
    lobe) are relative; the result is rescaled to unit mass.
    """
    theta = grid.nodes
    profile = _degenerate_profile(theta, p.eta, p.phi)
    offset = np.angle(np.exp(1j * (theta - p.phi)))  # in (-pi, pi]
    near = np.abs(offset) < 0.5 * math.pi
    weights = np.where(near, p.c1, p.c2)
    return normalize(AngularDensity(grid, weights * profile))


# -- constant-noise compatibility --------------------------------------------


def _standard_points(eta: float) -> int:
    n = 256
    while n < 8.0 * eta + 64.0:
        n *= 2
    return n


def weighted_average(gamma: AngularField, eta: float) -> float:
    """``<gamma>_M``: average of ``gamma`` against ``M_eta`` (peak at 0) on gamma's grid."""
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    w = _standard_profile(gamma.grid.nodes, eta, 0.0)
    return float(np.dot(gamma.values, w) / np.sum(w))


def mean_cos2(eta: float) -> float:
    """``<cos 2 theta>_M`` for the standard family, computed without cancellation."""
    if eta == 0.0:
        return 0.0
    n = _standard_points(eta)
    theta = np.arange(n) * (TWO_PI / n)
    c = np.cos(2.0 * theta)
    if eta < 1.0:
        # expm1 keeps full relative precision as eta -> 0
        num = np.dot(np.expm1(eta * c), c)
        den = np.sum(np.exp(eta * c))
    else:
        w = np.exp(eta * (c - 1.0))
        num = np.dot(w, c)
        den = np.sum(w)
    return float(num / den)


def beta(eta: float) -> float:
    """``<cos 2 theta>_M / eta``, continuous at 0 with value 1/2."""
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if eta == 0.0:
        return 0.5
    return mean_cos2(eta) / eta


def _bisect(fn, lo: float, hi: float, target: float, increasing: bool) -> float:
    """Bisection on a bracket where ``fn - target`` changes sign."""
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        above = fn(mid) > target
        if above == increasing:
            hi = mid
        else:
            lo = mid
    f_lo, f_hi = fn(lo), fn(hi)
    return lo if abs(f_lo - target) <= abs(f_hi - target) else hi


def solve_compatibility(params: ModelParams) -> PhaseClassification:
    ratio = params.sigma / params.kappa
    if ratio > CRITICAL_RATIO:
        return PhaseClassification(ratio, Regime.SUBCRITICAL, None)
    if ratio == CRITICAL_RATIO:
        return PhaseClassification(ratio, Regime.CRITICAL, None)
    target = 2.0 * ratio
    lo, hi = 1e-12, 1.0
    while beta(hi) >= target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:  # pragma: no cover - beta decays like 1/eta
            raise RuntimeError("failed to bracket the compatibility root")
    if beta(lo) < target:  # ratio within roundoff of 1/4: the root sits below 1e-12
        return PhaseClassification(ratio, Regime.SUPERCRITICAL, lo)
    eta = _bisect(beta, lo, hi, target, increasing=False)
    return PhaseClassification(ratio, Regime.SUPERCRITICAL, eta)


def varkappa(sigma: float, kappa: float, eta: float) -> float:
    """``1 - 2 sigma/kappa - (2 sigma eta / kappa)^2``, the variance of ``cos 2 theta``
    under ``M_eta`` at a compatible triple."""
    ratio = sigma / kappa
    if not eta > 0 or abs(beta(eta) - 2.0 * ratio) > COMPAT_TOL:
        raise IncompatibleTriple(f"(sigma={sigma}, kappa={kappa}, eta={eta}) violates compatibility")
    return 1.0 - 2.0 * ratio - (2.0 * ratio * eta) ** 2


# -- multiplicative-noise compatibility --------------------------------------


def _degenerate_points(eta_t: float) -> int:
    n = 1024
    if eta_t > 0:
        target = min(8.0 * math.pi / math.sqrt(eta_t), float(1 << 18))
        while n < target:
            n *= 2
    return n


def degenerate_mean_cos2(eta_t: float) -> float:
    """``<cos 2 theta>`` under ``exp(-eta_t / cos^2 theta)`` on one pi-period."""
    n = _degenerate_points(eta_t)
    theta = np.arange(n) * (math.pi / n)
    w = _degenerate_profile(theta, eta_t, 0.0)
    return float(np.dot(w, np.cos(2.0 * theta)) / np.sum(w))


def beta_tilde(eta_t: float) -> float:
    if eta_t < 0:
        raise ValueError("eta_t must be nonnegative")
    if eta_t == 0.0:
        return 0.0
    return eta_t * degenerate_mean_cos2(eta_t)


def solve_degenerate(params: ModelParams) -> float:
    """Unique ``eta_t > 0`` with ``beta_tilde(eta_t) = kappa / sigma``."""
    target = params.kappa / params.sigma
    lo, hi = 0.0, 1.0
    while beta_tilde(hi) <= target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:  # pragma: no cover
            raise RuntimeError("failed to bracket the degenerate compatibility root")
    return _bisect(beta_tilde, lo, hi, target, increasing=True)


def degenerate_r2(params: ModelParams, eta_t: float | None = None) -> float:
    """Order ``r2 = kappa / (sigma eta_t)`` of the generalized von-Mises state."""
    if eta_t is None:
        eta_t = solve_degenerate(params)
    return params.kappa / (params.sigma * eta_t)


# -- equilibrium checks ---------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def stationary_relation_residual(
    m: AngularDensity, params: ModelParams, exclude_cells: int = 2, form: str = "cell"
) -> tuple[float, np.ndarray]:
    """Residual of ``d/dtheta log M = (kappa/sigma) L[M] / D[M]`` for a
    multiplicative-noise steady state.

    ``form="cell"`` compares the forward difference quotient of ``log M``
    between neighbouring nodes with the cell average of the right-hand side
    (16-point Gauss-Legendre per cell).  ``form="pointwise"`` uses the centred
    difference at each node against the pointwise right-hand side; its
    truncation error grows like ``sec^k`` towards the zeros of ``D`` and is
    only useful well inside the lobe.

    Nodes within ``exclude_cells`` cells of ``phi2 +- pi/2`` and nodes where
    ``M`` underflows to 0 are skipped.  Returns ``(max residual, mask)`` where
    ``mask`` marks the evaluation points (left node of each cell for "cell").
    """
    grid = m.grid
    h = grid.spacing
    theta = grid.nodes
    op = order_parameter(m, 2)
    r2, phi2 = op.r, op.phi
    ratio = params.kappa / params.sigma

    def rhs(x):
        return ratio * np.sin(2.0 * (phi2 - x)) / (r2 * np.cos(x - phi2) ** 4)

    # distance to the nearest zero of D, measured along the circle
    dist = np.abs(np.angle(np.exp(1j * (theta - phi2 - 0.5 * math.pi))))
    dist = np.minimum(dist, np.abs(np.angle(np.exp(1j * (theta - phi2 + 0.5 * math.pi)))))
    far = dist > exclude_cells * h + 1e-12 * h
    positive = m.values > 0
    with np.errstate(divide="ignore"):
        logm = np.where(positive, np.log(np.where(positive, m.values, 1.0)), -np.inf)

    if form == "cell":
        nxt = np.roll(np.arange(grid.n_points), -1)
        mask = far & far[nxt] & positive & positive[nxt]
        # a cell must not straddle a zero of D
        lo = theta[mask]
        nodes = lo[:, None] + 0.5 * h * (_GL_X[None, :] + 1.0)
        avg = 0.5 * (rhs(nodes) @ _GL_W)
        diff = (logm[nxt][mask] - logm[mask]) / h
        res = np.abs(diff - avg)
    elif form == "pointwise":
        prv = np.roll(np.arange(grid.n_points), 1)
        nxt = np.roll(np.arange(grid.n_points), -1)
        mask = far & positive & positive[prv] & positive[nxt]
        diff = (logm[nxt][mask] - logm[prv][mask]) / (2.0 * h)
        res = np.abs(diff - rhs(theta[mask]))
    else:
        raise ValueError(f"unknown form {form!r}")
    return (float(res.max()) if res.size else 0.0), mask
