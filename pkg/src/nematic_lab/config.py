"""Experiment configuration: a line-oriented ``key = value`` format.

Grammar::

    # comment
    key = value          # trailing comments are allowed
    section.key = value

Values are numbers, booleans (true/false), bare words, or comma-separated
number lists.  Keys are dotted; the first component is the section.  Every
problem found is reported together in one :class:`ValidationError`; syntax
errors raise :class:`ParseError` with the offending line.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .circle_field import AngleGrid, ModelParams, NoiseKind, PsiTable
from .errors import ParseError, ValidationError
from .fp_solver import Scheme, SolverConfig, stable_dt
from .particles import SimConfig


class Command(str, enum.Enum):
    SOLVE = "solve"
    PARTICLES = "particles"
    EQUILIBRIUM = "equilibrium"
    SWEEP = "sweep"
    COMPARE = "compare"


# key -> kind; kinds: float, int, bool, word, floats
SCHEMA: dict[str, str] = {
    "command": "word",
    "seed": "int",
    "model.sigma": "float",
    "model.kappa": "float",
    "model.noise": "word",
    "model.psi_r": "floats",
    "model.psi": "floats",
    "grid.n_points": "int",
    "solver.dt": "float",
    "solver.t_end": "float",
    "solver.record_every": "int",
    "solver.steady_tol": "float",
    "solver.clamp_tol": "float",
    "initial.kind": "word",
    "initial.eta": "float",
    "initial.phi": "float",
    "initial.eps": "float",
    "initial.n": "int",
    "initial.weight": "float",
    "sim.dt": "float",
    "sim.t_end": "float",
    "sim.n_particles": "int",
    "sim.replicas": "int",
    "sim.record_every": "int",
    "sim.spatial_mode": "bool",
    "sim.init_eta": "float",
    "sim.init_phi": "float",
    "sweep.ratios": "floats",
    "sweep.logspace": "floats",
    "sweep.linspace": "floats",
    "output.dir": "word",
}

SECTIONS = {
    Command.SOLVE: {"model", "grid", "solver", "initial", "output"},
    Command.EQUILIBRIUM: {"model", "grid", "output"},
    Command.SWEEP: {"model", "grid", "solver", "initial", "sweep", "output"},
    Command.PARTICLES: {"model", "sim", "output"},
    Command.COMPARE: {"model", "grid", "solver", "sim", "output"},
}

INITIAL_KINDS = ("uniform", "harmonic", "von_mises", "mixture")
DEFAULT_T_END = 50.0
SWEEP_T_END = 300.0


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "mixture"
    eta: float = 3.0
    phi: float = 0.0
    eps: float = 0.1
    n: int = 2
    weight: float = 0.1  # weight of the von-Mises component in a mixture


@dataclass(frozen=True)
class ExperimentConfig:
    command: Command
    model: ModelParams | None  # None for sweeps
    kappa: float
    grid: AngleGrid = field(default_factory=AngleGrid)
    solver: SolverConfig | None = None
    sim: SimConfig | None = None
    initial: InitialSpec = field(default_factory=InitialSpec)
    output_dir: str = "nematic-lab-output"
    sweep_grid: tuple[float, ...] | None = None
    seed: int = 0
    auto_dt: bool = False
    source: str = ""


def _convert(kind: str, raw: str, line: int, key: str) -> Any:
    try:
        if kind == "float":
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        if kind == "int":
            return int(raw, 10)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError
        if kind == "floats":
            vals = tuple(float(x) for x in raw.split(",") if x.strip())
            if not vals or not all(math.isfinite(x) for x in vals):
                raise ValueError
            return vals
        return raw
    except ValueError:
        raise ParseError(f"cannot read {raw!r} as {kind}", line=line, field=key) from None


def tokenize(text: str) -> dict[str, tuple[Any, int]]:
    """Map ``key -> (value, line)`` after syntax checks."""
    out: dict[str, tuple[Any, int]] = {}
    for no, raw_line in enumerate(text.splitlines(), start=1):
        body = raw_line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError("expected 'key = value'", line=no)
        key, value = (s.strip() for s in body.split("=", 1))
        if not key:
            raise ParseError("missing key", line=no)
        if key not in SCHEMA:
            raise ParseError("unknown key", line=no, field=key)
        if key in out:
            raise ParseError("duplicate key", line=no, field=key)
        if not value:
            raise ParseError("missing value", line=no, field=key)
        out[key] = (_convert(SCHEMA[key], value, no, key), no)
    return out


def _sweep_grid(kv: dict[str, Any], errors: list[str]) -> tuple[float, ...] | None:
    given = [k for k in ("sweep.ratios", "sweep.logspace", "sweep.linspace") if k in kv]
    if len(given) != 1:
        errors.append("sweep needs exactly one of sweep.ratios, sweep.logspace, sweep.linspace")
        return None
    key = given[0]
    vals = kv[key]
    if key == "sweep.ratios":
        grid = vals
    else:
        if len(vals) != 3 or vals[2] != int(vals[2]) or vals[2] < 1:
            errors.append(f"{key} takes 'start, stop, count'")
            return None
        lo, hi, n = vals[0], vals[1], int(vals[2])
        if key == "sweep.logspace":
            if lo <= 0 or hi <= 0:
                errors.append("sweep.logspace bounds must be positive")
                return None
            grid = tuple(float(x) for x in np.geomspace(lo, hi, n))
        else:
            grid = tuple(float(x) for x in np.linspace(lo, hi, n))
    if any(r <= 0 for r in grid):
        errors.append("sweep ratios must be positive")
    return tuple(grid)


def parse_config(text: str, command: str | Command | None = None) -> ExperimentConfig:
    """Parse and validate a configuration.

    ``command`` (from the command line) takes precedence; if the file also
    names one they must agree.
    """
    tokens = tokenize(text)
    kv = {k: v for k, (v, _) in tokens.items()}
    errors: list[str] = []

    file_cmd = kv.get("command")
    if command is None and file_cmd is None:
        raise ValidationError(["no command given"])
    try:
        cmd = Command(command if command is not None else file_cmd)
    except ValueError:
        raise ValidationError([f"unknown command {command or file_cmd!r}"]) from None
    if file_cmd is not None and command is not None and Command(command).value != file_cmd:
        errors.append(f"config names command {file_cmd!r} but {cmd.value!r} was requested")

    allowed = SECTIONS[cmd]
    for key in kv:
        if "." in key and key.split(".", 1)[0] not in allowed:
            errors.append(f"{key} is not used by the {cmd.value} command")

    # model
    kappa = kv.get("model.kappa")
    sigma = kv.get("model.sigma")
    if kappa is None:
        errors.append("model.kappa is required")
    elif not kappa > 0:
        errors.append("kappa must be positive")
    if cmd is Command.SWEEP:
        if sigma is not None:
            errors.append("model.sigma is set by the sweep grid; remove it")
    elif sigma is None:
        errors.append("model.sigma is required")
    elif not sigma > 0:
        errors.append("sigma must be positive")
    noise = kv.get("model.noise", "constant")
    if noise not in {n.value for n in NoiseKind}:
        errors.append(f"model.noise must be 'constant' or 'multiplicative', got {noise!r}")
        noise = "constant"
    if cmd is Command.SWEEP and noise != "constant":
        errors.append("sweep runs the constant-noise bifurcation only")
    psi = None
    if ("model.psi" in kv) != ("model.psi_r" in kv):
        errors.append("model.psi and model.psi_r must be given together")
    elif "model.psi" in kv:
        try:
            psi = PsiTable(kv["model.psi_r"], kv["model.psi"])
        except ValidationError as exc:
            errors.extend(exc.errors)

    model = None
    if kappa is not None and kappa > 0 and (sigma is None or sigma > 0):
        model = ModelParams(sigma if sigma is not None else 1.0, kappa, NoiseKind(noise), psi)

    # grid
    n_points = kv.get("grid.n_points", 256)
    grid = AngleGrid()
    if n_points < 8 or n_points % 2:
        errors.append("grid.n_points must be an even integer >= 8")
    else:
        grid = AngleGrid.circle(n_points)

    # initial data
    init = InitialSpec(
        kind=kv.get("initial.kind", "mixture"),
        eta=kv.get("initial.eta", 3.0),
        phi=kv.get("initial.phi", 0.0),
        eps=kv.get("initial.eps", 0.1),
        n=kv.get("initial.n", 2),
        weight=kv.get("initial.weight", 0.1),
    )
    if init.kind not in INITIAL_KINDS:
        errors.append(f"initial.kind must be one of {', '.join(INITIAL_KINDS)}")
    if init.eta < 0:
        errors.append("initial.eta must be nonnegative")
    if abs(init.eps) > 1:
        errors.append("initial.eps must lie in [-1, 1]")
    if not 0 <= init.weight <= 1:
        errors.append("initial.weight must lie in [0, 1]")
    if init.n < 1:
        errors.append("initial.n must be >= 1")

    seed = kv.get("seed", 0)
    if not 0 <= seed < 2**64:
        errors.append("seed must be an unsigned 64-bit integer")

    # solver
    solver = None
    auto_dt = False
    if "solver" in allowed and model is not None:
        scheme = Scheme.IMEX_SPECTRAL if model.noise_kind is NoiseKind.CONSTANT else Scheme.EXPLICIT_FLUX
        t_end = kv.get("solver.t_end", SWEEP_T_END if cmd is Command.SWEEP else DEFAULT_T_END)
        if cmd is Command.SWEEP:
            dt = kv.get("solver.dt")
            auto_dt = dt is None  # chosen per ratio at run time
        else:
            dt = kv.get("solver.dt", stable_dt(scheme, model, grid))
        try:
            solver = SolverConfig(
                dt=dt if dt is not None else 1.0,
                t_end=t_end,
                scheme=scheme,
                record_every=kv.get("solver.record_every", 100),
                clamp_tol=kv.get("solver.clamp_tol", 1e-13),
                steady_tol=kv.get("solver.steady_tol", 1e-9),
            )
        except ValueError as exc:
            errors.append(f"solver: {exc}")
    # particles
    sim = None
    if "sim" in allowed:
        missing = [req for req in ("sim.dt", "sim.t_end") if req not in kv]
        errors.extend(f"{req} is required" for req in missing)
        if not missing:
            try:
                sim = SimConfig(
                    dt=kv["sim.dt"],
                    t_end=kv["sim.t_end"],
                    n_particles=kv.get("sim.n_particles", 10_000),
                    replicas=kv.get("sim.replicas", 1),
                    seed=seed,
                    spatial_mode=kv.get("sim.spatial_mode", False),
                    record_every=kv.get("sim.record_every", 1),
                    init_eta=kv.get("sim.init_eta", 0.0),
                    init_phi=kv.get("sim.init_phi", 0.0),
                )
            except ValueError as exc:
                errors.append(f"sim: {exc}")
            if sim is not None and sim.init_eta < 0:
                errors.append("sim.init_eta must be nonnegative")

    sweep_grid = None
    if cmd is Command.SWEEP:
        sweep_grid = _sweep_grid(kv, errors)
        model = None  # one model per ratio, built by the runner

    if errors:
        raise ValidationError(errors)
    return ExperimentConfig(
        command=cmd,
        model=model,
        kappa=float(kappa),
        grid=grid,
        solver=solver,
        sim=sim,
        initial=init,
        output_dir=kv.get("output.dir", "nematic-lab-output"),
        sweep_grid=sweep_grid,
        seed=seed,
        auto_dt=auto_dt,
        source=text,
    )
