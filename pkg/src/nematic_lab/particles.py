"""Euler-Maruyama simulation of the N-particle nematic alignment system.

Each particle carries a heading ``theta_j`` and, in spatial mode, a planar
position ``x_j`` moving with unit speed along its heading.  The heading obeys

    d theta_j = (kappa/N) sum_k psi(|x_k - x_j|) sin 2(theta_k - theta_j) dt
                + sqrt(2 sigma D_j) dB_j

with ``D_j = 1`` for constant noise.  Without spatial mode the weight is
frozen at ``psi(0)`` and the sum collapses to ``kappa psi(0) r2 sin 2(phi2 - theta_j)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .circle_field import TWO_PI, AngularDensity, ModelParams, NoiseKind, OrderParameter, _order_from_complex

SPATIAL_MAX_N = 10_000


@dataclass(frozen=True)
class ParticleState:
    angles: np.ndarray
    positions: np.ndarray
    rng: np.random.Generator

    def __post_init__(self):
        if self.angles.ndim != 1 or self.angles.size < 1:
            raise ValueError("need at least one particle")
        if self.positions.shape != (self.angles.size, 2):
            raise ValueError("positions must have shape (n, 2)")

    @property
    def n(self) -> int:
        return int(self.angles.size)


@dataclass(frozen=True)
class SimConfig:
    dt: float
    t_end: float
    n_particles: int = 10_000
    replicas: int = 1
    seed: int = 0
    spatial_mode: bool = False
    record_every: int = 1
    init_eta: float = 0.0  # nematic von-Mises concentration of the initial angles; 0 is uniform
    init_phi: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.spatial_mode and self.n_particles > SPATIAL_MAX_N:
            raise ValueError(f"spatial mode is O(N^2) per step and capped at N = {SPATIAL_MAX_N}")


@dataclass(frozen=True)
class EnsembleResult:
    times: np.ndarray
    r2: np.ndarray  # (replicas, records)
    phi2: np.ndarray

    @property
    def mean_r2(self) -> np.ndarray:
        return self.r2.mean(axis=0)

    @property
    def std_r2(self) -> np.ndarray:
        ddof = 1 if self.r2.shape[0] > 1 else 0
        return self.r2.std(axis=0, ddof=ddof)


# -- observables ------------------------------------------------------------------


def empirical_order_parameter(s: ParticleState | np.ndarray, n: int) -> OrderParameter:
    """``r e^{i n phi} = mean_j e^{i n theta_j}``."""
    angles = s.angles if isinstance(s, ParticleState) else np.asarray(s)
    if n < 1:
        raise ValueError("harmonic index must be >= 1")
    c = complex(np.mean(np.exp(1j * n * angles)))
    return _order_from_complex(c, n)


def multiplicative_noise_coeff(s: ParticleState, j: int) -> float:
    """``(1/2)[mean_k cos 2(theta_k - theta_j) + |mean_k e^{2i(theta_k - theta_j)}|]``."""
    d = s.angles - s.angles[j]
    a = float(np.mean(np.cos(2.0 * d)))
    b = abs(complex(np.mean(np.exp(2j * d))))
    return min(max(0.5 * (a + b), 0.0), 1.0)


def multiplicative_noise_coeffs(angles: np.ndarray) -> np.ndarray:
    """All ``D_j`` at once via ``D_j = r2 cos^2(theta_j - phi2)``."""
    c = np.mean(np.exp(2j * angles))
    return abs(c) * np.cos(angles - 0.5 * np.angle(c)) ** 2


# -- dynamics ------------------------------------------------------------------------


def _threads() -> int:
    env = os.environ.get("NEMATIC_LAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def em_step(s: ParticleState, dt: float, params: ModelParams, spatial_mode: bool = False) -> ParticleState:
    """One Euler-Maruyama step; the noise coefficient is frozen at the step start."""
    theta = s.angles
    noise = s.rng.standard_normal(theta.size)
    mult = params.noise_kind is NoiseKind.MULTIPLICATIVE
    c2 = complex(np.mean(np.exp(2j * theta)))
    r2, phi2 = abs(c2), 0.5 * math.atan2(c2.imag, c2.real)
    if spatial_mode and params.psi is not None:
        drift = kernels.pairwise_drift(theta, s.positions, params.psi.r, params.psi.psi, params.kappa)
        amp = np.sqrt(multiplicative_noise_coeffs(theta)) if mult else 1.0
        new = kernels.wrap_angles(theta + dt * drift + math.sqrt(2.0 * params.sigma * dt) * amp * noise)
    else:
        gain = params.kappa * params.psi_at_zero
        new = kernels.em_angles(theta, noise, dt, params.sigma, gain, r2, phi2, mult)
    pos = s.positions
    if spatial_mode:
        pos = pos + dt * np.column_stack((np.cos(theta), np.sin(theta)))
    return ParticleState(new, pos, s.rng)


def nematic_von_mises_angles(rng: np.random.Generator, n: int, eta: float, phi: float = 0.0) -> np.ndarray:
    """Samples from ``exp(eta cos 2(theta - phi))``: half a von-Mises angle plus a random half turn."""
    if eta == 0.0:
        x = rng.uniform(0.0, TWO_PI, n)
    else:
        x = rng.vonmises(0.0, eta, n)
    half = rng.integers(0, 2, n)
    return kernels.wrap_angles(0.5 * x + phi + math.pi * half)


def sample_density(rng: np.random.Generator, d: AngularDensity, n: int) -> np.ndarray:
    """Inverse-CDF samples from a piecewise-constant reading of a grid density."""
    h = d.grid.spacing
    cdf = np.concatenate(([0.0], np.cumsum(d.values) * h))
    cdf /= cdf[-1]
    u = rng.random(n)
    idx = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, d.grid.n_points - 1)
    w = (u - cdf[idx]) / np.maximum(cdf[idx + 1] - cdf[idx], 1e-300)
    return kernels.wrap_angles((idx + w) * h)


def initial_state(cfg: SimConfig, rng: np.random.Generator) -> ParticleState:
    angles = nematic_von_mises_angles(rng, cfg.n_particles, cfg.init_eta, cfg.init_phi)
    if cfg.spatial_mode:
        pos = rng.random((cfg.n_particles, 2))
    else:
        pos = np.zeros((cfg.n_particles, 2))
    return ParticleState(angles, pos, rng)


def replica_generators(seed: int, replicas: int) -> list[np.random.Generator]:
    """Independent Philox streams spawned from one master seed."""
    return [np.random.Generator(np.random.Philox(ss)) for ss in np.random.SeedSequence(seed).spawn(replicas)]


def _run_replica(cfg: SimConfig, params: ModelParams, rng: np.random.Generator):
    s = initial_state(cfg, rng)
    n_steps = max(1, math.ceil(cfg.t_end / cfg.dt - 1e-9))
    dt = cfg.t_end / n_steps
    times, r2, phi2 = [0.0], [], []
    op = empirical_order_parameter(s, 2)
    r2.append(op.r)
    phi2.append(op.phi)
    for k in range(1, n_steps + 1):
        s = em_step(s, dt, params, cfg.spatial_mode)
        if k % cfg.record_every == 0 or k == n_steps:
            op = empirical_order_parameter(s, 2)
            times.append(k * dt)
            r2.append(op.r)
            phi2.append(op.phi)
    return np.array(times), np.array(r2), np.array(phi2)


def run_ensemble(cfg: SimConfig, params: ModelParams, workers: int | None = None) -> EnsembleResult:
    """Run ``cfg.replicas`` independent replicas and stack their (r2, phi2) series.

    Output depends only on ``cfg`` and ``params``: each replica owns its
    stream and results are merged in replica order.
    """
    gens = replica_generators(cfg.seed, cfg.replicas)
    workers = min(workers or _threads(), cfg.replicas)
    if workers <= 1:
        out = [_run_replica(cfg, params, g) for g in gens]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(lambda g: _run_replica(cfg, params, g), gens))
    times = out[0][0]
    return EnsembleResult(times, np.stack([o[1] for o in out]), np.stack([o[2] for o in out]))


def with_seed(cfg: SimConfig, seed: int) -> SimConfig:
    return replace(cfg, seed=seed)
