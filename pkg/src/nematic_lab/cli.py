"""``nematic-lab`` command-line driver."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import _accel, emit, fp_solver
from .circle_field import AngleGrid, AngularDensity, ModelParams, NoiseKind, order_parameter
from .config import Command, ExperimentConfig, InitialSpec, parse_config
from .equilibria import (
    FamilyKind,
    VonMisesParams,
    beta,
    beta_tilde,
    degenerate_r2,
    solve_compatibility,
    solve_degenerate,
    varkappa,
    von_mises_density,
)
from .errors import NematicLabError, ParseError, UnstableStep, ValidationError
from .particles import run_ensemble

log = logging.getLogger("nematic_lab")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

SWEEP_COLUMNS = ("sigma_over_kappa", "eta_star", "r2_predicted", "r2_simulated", "regime")


def _workers() -> int:
    env = os.environ.get("NEMATIC_LAB_THREADS")
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def initial_density(spec: InitialSpec, grid: AngleGrid) -> AngularDensity:
    if spec.kind == "uniform":
        return fp_solver.uniform(grid)
    if spec.kind == "harmonic":
        return fp_solver.harmonic(grid, spec.eps, spec.n, spec.phi)
    vm = fp_solver.von_mises(grid, spec.eta, spec.phi)
    if spec.kind == "von_mises":
        return vm
    return fp_solver.mixture((1.0 - spec.weight, fp_solver.uniform(grid)), (spec.weight, vm))


def _metadata(cfg: ExperimentConfig, **extra) -> str:
    from . import __version__

    meta = {
        "command": cfg.command.value,
        "seed": cfg.seed,
        "config": cfg.source,
        "version": __version__,
        "numpy": np.__version__,
        "backend": _accel.backend_name(),
    }
    meta.update(extra)
    return json.dumps(meta, indent=1, sort_keys=True) + "\n"


# -- commands -----------------------------------------------------------------------


def run_solve(cfg: ExperimentConfig, out: Path) -> None:
    f0 = initial_density(cfg.initial, cfg.grid)
    traj = fp_solver.evolve(f0, cfg.solver, cfg.model)
    log.info("solve: %d steps, %d records, steady=%s", traj.steps, len(traj), traj.steady)
    emit.emit_plot_data(traj, out)
    emit.atomic_write(out / "metadata.json", _metadata(cfg, steady=traj.steady, dt=traj.dt))


def run_equilibrium(cfg: ExperimentConfig, out: Path) -> None:
    p = cfg.model
    grid = cfg.grid
    if p.noise_kind is NoiseKind.CONSTANT:
        pc = solve_compatibility(p)
        eta = pc.eta_star or 0.0
        dens = von_mises_density(VonMisesParams(FamilyKind.STANDARD, eta), grid)
        resid = abs(beta(eta) - 2.0 * p.ratio) if eta > 0 else 0.0
        vk = varkappa(p.sigma, p.kappa, eta) if eta > 0 else 0.0
        header = ("sigma", "kappa", "sigma_over_kappa", "regime", "eta_star", "r2_predicted",
                  "r2_grid", "compat_residual", "varkappa")
        row = (p.sigma, p.kappa, p.ratio, pc.regime.value, eta, pc.r2_predicted,
               order_parameter(dens, 2).r, resid, vk)
    else:
        eta = solve_degenerate(p)
        dens = von_mises_density(VonMisesParams(FamilyKind.DEGENERATE, eta), grid)
        header = ("sigma", "kappa", "sigma_over_kappa", "eta_tilde", "r2_predicted", "r2_grid", "compat_residual")
        row = (p.sigma, p.kappa, p.ratio, eta, degenerate_r2(p, eta), order_parameter(dens, 2).r,
               abs(beta_tilde(eta) - p.kappa / p.sigma))
    emit.write_csv(out / "equilibrium.csv", header, [row])
    emit.write_csv(out / "equilibrium_density.csv", ("theta", "f"),
                   zip(grid.nodes.tolist(), dens.values.tolist()))
    emit.atomic_write(out / "metadata.json", _metadata(cfg))


def _sweep_point(cfg: ExperimentConfig, ratio: float) -> tuple:
    p = ModelParams(ratio * cfg.kappa, cfg.kappa)
    pc = solve_compatibility(p)
    solver = cfg.solver
    if cfg.auto_dt:
        solver = dataclasses.replace(solver, dt=fp_solver.stable_dt(solver.scheme, p, cfg.grid))
    traj = fp_solver.evolve(initial_density(cfg.initial, cfg.grid), solver, p)
    eta = pc.eta_star or 0.0
    return (ratio, eta, pc.r2_predicted, traj.series[-1].r2, pc.regime.value)


def run_sweep(cfg: ExperimentConfig, out: Path, workers: int) -> None:
    grid = cfg.sweep_grid
    workers = max(1, min(workers, len(grid)))
    if workers == 1:
        rows = [_sweep_point(cfg, r) for r in grid]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda r: _sweep_point(cfg, r), grid))
    emit.write_csv(out / "bifurcation.csv", SWEEP_COLUMNS, rows)
    emit.atomic_write(out / "metadata.json", _metadata(cfg, sweep_grid=[emit.fmt(r) for r in grid]))


def run_particles(cfg: ExperimentConfig, out: Path, workers: int) -> None:
    res = run_ensemble(cfg.sim, cfg.model, workers=workers)
    rows = [
        (rep, t, r, ph)
        for rep in range(res.r2.shape[0])
        for t, r, ph in zip(res.times.tolist(), res.r2[rep].tolist(), res.phi2[rep].tolist())
    ]
    emit.write_csv(out / "particles.csv", ("replica", "t", "r2", "phi2"), rows)
    emit.write_csv(out / "ensemble.csv", ("t", "mean_r2", "std_r2"),
                   zip(res.times.tolist(), res.mean_r2.tolist(), res.std_r2.tolist()))
    emit.atomic_write(out / "metadata.json", _metadata(cfg))


def pde_r2_at(times: np.ndarray, cfg: ExperimentConfig) -> np.ndarray:
    """Mean-field ``r2`` at ``times`` from the particles' initial law."""
    sim = cfg.sim
    f0 = fp_solver.von_mises(cfg.grid, sim.init_eta, sim.init_phi)
    solver = dataclasses.replace(cfg.solver, t_end=float(times[-1]), steady_tol=0.0, record_every=1)
    m = cfg.model
    # the homogeneous limit of the particle drift couples with kappa psi(0)
    pde_model = ModelParams(m.sigma, m.kappa * m.psi_at_zero, m.noise_kind)
    traj = fp_solver.evolve(f0, solver, pde_model)
    return np.interp(times, traj.times, traj.column("r2"))


def run_compare(cfg: ExperimentConfig, out: Path, workers: int) -> None:
    res = run_ensemble(cfg.sim, cfg.model, workers=workers)
    pde = pde_r2_at(res.times, cfg)
    gap = np.abs(res.mean_r2 - pde)
    emit.write_csv(out / "compare.csv", ("t", "r2_particle", "r2_particle_std", "r2_pde", "abs_gap"),
                   zip(res.times.tolist(), res.mean_r2.tolist(), res.std_r2.tolist(), pde.tolist(), gap.tolist()))
    emit.atomic_write(out / "metadata.json", _metadata(cfg, final_gap=emit.fmt(float(gap[-1]))))
    log.info("compare: final |r2_particle - r2_pde| = %.3g", gap[-1])


def run(cfg: ExperimentConfig, output: str | Path | None = None, workers: int | None = None) -> int:
    """Execute ``cfg``; returns the process exit code.

    Failures are reported as a JSON record on stderr and, when the output
    directory is usable, in ``error.json``.
    """
    out = Path(output if output is not None else cfg.output_dir)
    workers = workers or _workers()
    try:
        out.mkdir(parents=True, exist_ok=True)
        if cfg.command is Command.SOLVE:
            run_solve(cfg, out)
        elif cfg.command is Command.EQUILIBRIUM:
            run_equilibrium(cfg, out)
        elif cfg.command is Command.SWEEP:
            run_sweep(cfg, out, workers)
        elif cfg.command is Command.PARTICLES:
            run_particles(cfg, out, workers)
        else:
            run_compare(cfg, out, workers)
        emit.write_manifest(out)
    except UnstableStep as exc:
        return _fail(EXIT_NUMERIC, exc, out, time=exc.time)
    except NematicLabError as exc:
        return _fail(EXIT_NUMERIC, exc, out)
    except OSError as exc:
        return _fail(EXIT_IO, exc, out, path=getattr(exc, "filename", None))
    return EXIT_OK


def _fail(code: int, exc: BaseException, out: Path | None, **extra) -> int:
    rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, ValidationError):
        rec["errors"] = exc.errors
    if isinstance(exc, ParseError):
        rec.update(line=exc.line, field=exc.field)
    rec.update({k: v for k, v in extra.items() if v is not None})
    text = json.dumps(rec, sort_keys=True)
    print(text, file=sys.stderr)
    if out is not None and code != EXIT_IO:
        try:
            emit.atomic_write(out / "error.json", text + "\n")
        except OSError:
            pass
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nematic-lab", description="Nematic alignment kinetic model laboratory.")
    ap.add_argument("command", choices=[c.value for c in Command])
    ap.add_argument("--config", required=True, help="configuration file (key = value lines)")
    ap.add_argument("--output", help="output directory (overrides output.dir)")
    ap.add_argument("--seed", type=int, help="master seed, unsigned 64-bit (overrides seed)")
    ap.add_argument("--quiet", action="store_true", help="only report errors")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        return _fail(EXIT_IO, exc, None, path=args.config)
    try:
        cfg = parse_config(text, args.command)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ValidationError(["seed must be an unsigned 64-bit integer"])
            sim = dataclasses.replace(cfg.sim, seed=args.seed) if cfg.sim is not None else None
            cfg = dataclasses.replace(cfg, seed=args.seed, sim=sim)
    except (ParseError, ValidationError) as exc:
        return _fail(EXIT_CONFIG, exc, None)
    return run(cfg, args.output)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
