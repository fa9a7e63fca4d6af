"""Time the numba kernels against their numpy fallbacks.

Run with ``python3 benchmarks/bench_kernels.py``.  The first numba call of
each kernel (compilation or cache load) is excluded from the timings.
"""

from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from nematic_lab import _accel, kernels


def cases(n_grid: int, n_particles: int, n_pairs: int):
    rng = np.random.default_rng(0)
    h = 2 * math.pi / n_grid
    f = rng.random(n_grid)
    th = rng.random(n_particles) * 2 * math.pi
    z = rng.standard_normal(n_particles)
    th_p = rng.random(n_pairs) * 2 * math.pi
    pos = rng.random((n_pairs, 2)) * 4
    r, psi = [0.0, 0.5, 1.5], [1.0, 0.6, 0.1]
    return {
        f"sg_flux (n={n_grid})": lambda nb: kernels.sg_flux(f, h, 0.7, 1.3, 0.6, 0.4, use_numba=nb),
        f"em_angles (N={n_particles})": lambda nb: kernels.em_angles(th, z, 0.01, 0.4, 1.0, 0.5, 0.3, True, use_numba=nb),
        f"pairwise_drift (N={n_pairs})": lambda nb: kernels.pairwise_drift(th_p, pos, r, psi, 1.0, use_numba=nb),
    }


def best_of(fn, repeat: int) -> float:
    number, _ = timeit.Timer(fn).autorange()
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=512)
    ap.add_argument("--particles", type=int, default=100_000)
    ap.add_argument("--pairs", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"numba available: {_accel.HAVE_NUMBA}")
    print(f"{'kernel':32s} {'numpy':>12s} {'numba':>12s} {'speedup':>8s}")
    for name, fn in cases(args.grid, args.particles, args.pairs).items():
        t_np = best_of(lambda: fn(False), args.repeat)
        if _accel.HAVE_NUMBA:
            fn(True)
            t_nb = best_of(lambda: fn(True), args.repeat)
            print(f"{name:32s} {t_np * 1e3:10.3f}ms {t_nb * 1e3:10.3f}ms {t_np / t_nb:7.1f}x")
        else:
            print(f"{name:32s} {t_np * 1e3:10.3f}ms {'n/a':>12s}")


if __name__ == "__main__":
    main()
