"""Periodic angle grids, densities on them, and the nonlocal functionals.

Everything here works on a uniform grid ``theta_j = j * period / n`` with the
periodic trapezoid rule, which is spectrally accurate for the smooth periodic
integrands that appear in the model.  The same code serves densities on the
full circle (period ``2*pi``) and the folded pi-periodic densities of the
multiplicative-noise model.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import AliasedMode, NonPositiveMass, ValidationError

FloatArray = NDArray[np.float64]

TWO_PI = 2.0 * math.pi
R_TOL = 1e-12
DEFAULT_POINTS = 256


@dataclass(frozen=True)
class AngleGrid:
    n_points: int = DEFAULT_POINTS
    period: float = TWO_PI

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 8 or self.n_points % 2:
            raise ValueError(f"n_points must be an even integer >= 8, got {self.n_points}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        object.__setattr__(self, "n_points", int(self.n_points))
        object.__setattr__(self, "period", float(self.period))

    @classmethod
    def circle(cls, n_points: int = DEFAULT_POINTS) -> "AngleGrid":
        return cls(n_points, TWO_PI)

    @classmethod
    def half_circle(cls, n_points: int = DEFAULT_POINTS) -> "AngleGrid":
        return cls(n_points, math.pi)

    @property
    def spacing(self) -> float:
        return self.period / self.n_points

    @property
    def nodes(self) -> FloatArray:
        return np.arange(self.n_points) * self.spacing

    @property
    def wavenumbers(self) -> FloatArray:
        """Angular wavenumbers of the ``rfft`` modes."""
        return np.arange(self.n_points // 2 + 1) * (TWO_PI / self.period)


def _frozen(values: ArrayLike) -> FloatArray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AngularField:
    """Real grid function with no sign or mass constraint."""

    grid: AngleGrid
    values: FloatArray = field(repr=False)

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} values, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class AngularDensity(AngularField):
    """Probability density per radian sampled on ``grid``.

    Nonnegativity and unit mass are established by :func:`normalize`; raw
    construction does not enforce them so solver intermediates can be wrapped.
    """

    @classmethod
    def from_function(cls, grid: AngleGrid, fn: Callable[[FloatArray], ArrayLike]) -> "AngularDensity":
        return normalize(cls(grid, np.broadcast_to(fn(grid.nodes), (grid.n_points,))))

    @classmethod
    def uniform(cls, grid: AngleGrid) -> "AngularDensity":
        return cls(grid, np.full(grid.n_points, 1.0 / grid.period))


@dataclass(frozen=True)
class OrderParameter:
    n: int
    r: float
    phi: float

    @property
    def complex(self) -> complex:
        return self.r * complex(math.cos(self.n * self.phi), math.sin(self.n * self.phi))


class NoiseKind(str, enum.Enum):
    CONSTANT = "constant"
    MULTIPLICATIVE = "multiplicative"


@dataclass(frozen=True)
class PsiTable:
    """Communication weight psi(r) by piecewise-linear interpolation.

    Beyond the last abscissa the last value is held.
    """

    r: tuple[float, ...]
    psi: tuple[float, ...]

    def __post_init__(self):
        r = tuple(float(x) for x in self.r)
        psi = tuple(float(x) for x in self.psi)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "psi", psi)
        errors = []
        if len(r) != len(psi) or not r:
            errors.append("psi table needs matching, non-empty r and psi columns")
        else:
            if r[0] != 0.0:
                errors.append("psi table must start at r = 0")
            if any(b <= a for a, b in zip(r, r[1:])):
                errors.append("psi table abscissae must be strictly increasing")
            if any(p <= 0 for p in psi):
                errors.append("psi values must be positive")
            if any(p > psi[0] for p in psi):
                errors.append("psi values must not exceed psi(0)")
        if errors:
            raise ValidationError(errors)

    def __call__(self, dist: ArrayLike) -> FloatArray:
        return np.interp(dist, self.r, self.psi)

    @property
    def at_zero(self) -> float:
        return self.psi[0]


@dataclass(frozen=True)
class ModelParams:
    sigma: float
    kappa: float
    noise_kind: NoiseKind = NoiseKind.CONSTANT
    psi: PsiTable | None = None  # None means psi == 1

    def __post_init__(self):
        errors = []
        if not (isinstance(self.sigma, (int, float)) and self.sigma > 0 and math.isfinite(self.sigma)):
            errors.append("sigma must be positive")
        if not (isinstance(self.kappa, (int, float)) and self.kappa > 0 and math.isfinite(self.kappa)):
            errors.append("kappa must be positive")
        if errors:
            raise ValidationError(errors)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "noise_kind", NoiseKind(self.noise_kind))

    @property
    def ratio(self) -> float:
        return self.sigma / self.kappa

    @property
    def psi_at_zero(self) -> float:
        return 1.0 if self.psi is None else self.psi.at_zero

    def psi_of(self, dist: ArrayLike) -> FloatArray:
        if self.psi is None:
            return np.ones_like(np.asarray(dist, dtype=np.float64))
        return self.psi(dist)


def mass(d: AngularField) -> float:
    """Periodic trapezoid quadrature of the grid values."""
    return float(d.grid.spacing * np.sum(d.values))


def normalize(d: AngularDensity) -> AngularDensity:
    m = mass(d)
    if not m > 0:
        raise NonPositiveMass(f"cannot normalize a density with mass {m!r}")
    return AngularDensity(d.grid, d.values / m)


def fourier_mode(d: AngularField, k: int) -> complex:
    """``c_k = integral d(theta) exp(i k theta) dtheta`` over one grid period.

    ``k`` is the integer harmonic of ``theta``.  On a pi-periodic grid only
    even harmonics are genuine grid modes.
    """
    n = d.grid.n_points
    # harmonic k of theta is grid mode k*period/(2*pi)
    if abs(k) * d.grid.period / TWO_PI >= n / 2:
        raise AliasedMode(f"harmonic {k} aliases on a {n}-point grid of period {d.grid.period}")
    phase = np.exp(1j * k * d.grid.nodes)
    return complex(d.grid.spacing * np.dot(d.values, phase))


def order_parameter(d: AngularField, n: int) -> OrderParameter:
    if n < 1:
        raise ValueError("harmonic index must be >= 1")
    c = fourier_mode(d, n)
    return _order_from_complex(c, n)


def _order_from_complex(c: complex, n: int) -> OrderParameter:
    r = abs(c)
    if r < R_TOL:
        return OrderParameter(n, float(r), 0.0)
    span = TWO_PI / n
    phi = (math.atan2(c.imag, c.real) / n) % span
    if phi >= span:  # float edge case of the modulo
        phi = 0.0
    return OrderParameter(n, float(r), float(phi))


def alignment_force(d: AngularDensity) -> AngularField:
    """``L[f](theta) = r2 sin 2(phi2 - theta)``, the closed form of the convolution
    ``integral sin 2(theta* - theta) f(theta*) dtheta*``."""
    op = order_parameter(d, 2)
    return AngularField(d.grid, op.r * np.sin(2.0 * (op.phi - d.grid.nodes)))


def diffusion_coefficient(d: AngularDensity) -> AngularField:
    """Multiplicative diffusion ``D[f] = r2^2 cos^4(theta - phi2)``."""
    op = order_parameter(d, 2)
    return AngularField(d.grid, op.r**2 * np.cos(d.grid.nodes - op.phi) ** 4)


def spectral_derivative(d: AngularField) -> FloatArray:
    """First derivative by FFT; the Nyquist mode is dropped."""
    grid = d.grid
    coeffs = np.fft.rfft(d.values)
    ik = 1j * grid.wavenumbers
    ik[-1] = 0.0
    return np.fft.irfft(ik * coeffs, n=grid.n_points)


def rotate(d: AngularDensity, shift_nodes: int) -> AngularDensity:
    """Density shifted by ``shift_nodes * spacing`` in the positive direction."""
    return type(d)(d.grid, np.roll(d.values, shift_nodes))


def l2_norm(values: ArrayLike, grid: AngleGrid) -> float:
    v = np.asarray(values, dtype=np.float64)
    return float(math.sqrt(grid.spacing * np.dot(v, v)))
