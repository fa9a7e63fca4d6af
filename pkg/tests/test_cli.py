from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from nematic_lab import cli
from nematic_lab.config import Command, parse_config
from nematic_lab.emit import SERIES_COLUMNS, emit_plot_data, read_csv
from nematic_lab.equilibria import solve_compatibility
from nematic_lab.errors import ParseError, ValidationError
from nematic_lab.circle_field import ModelParams
from nematic_lab.fp_solver import SolverConfig, evolve, von_mises
from nematic_lab.circle_field import AngleGrid


def test_minimal_solve_defaults():
    cfg = parse_config("model.sigma = 0.1\nmodel.kappa = 1\n", "solve")
    assert cfg.command is Command.SOLVE
    assert cfg.grid.n_points == 256
    assert 0 < cfg.solver.dt < 0.05
    assert cfg.solver.t_end > 0


def test_negative_sigma():
    with pytest.raises(ValidationError) as exc:
        parse_config("model.sigma = -1\nmodel.kappa = 1\n", "solve")
    assert "sigma must be positive" in exc.value.errors


def test_all_errors_reported():
    text = "model.sigma = -1\nmodel.kappa = -2\ngrid.n_points = 7\ninitial.eps = 3\n"
    with pytest.raises(ValidationError) as exc:
        parse_config(text, "solve")
    assert len(exc.value.errors) == 4


def test_parse_error_has_location():
    with pytest.raises(ParseError) as exc:
        parse_config("model.kappa = 1\n\nmodel.sigma = abc  # bad\n", "solve")
    assert exc.value.line == 3 and exc.value.field == "model.sigma"
    with pytest.raises(ParseError) as exc:
        parse_config("model.kapa = 1\n", "solve")
    assert exc.value.field == "model.kapa"


def test_command_sections_enforced():
    with pytest.raises(ValidationError):
        parse_config("model.sigma = 0.1\nmodel.kappa = 1\nsim.dt = 0.1\n", "solve")


def test_sweep_grid_roundtrip(tmp_path):
    text = "model.kappa = 1\nsweep.logspace = 0.01, 2, 50\nsolver.t_end = 1\nsolver.steady_tol = 1\n"
    cfg = parse_config(text, "sweep")
    assert len(cfg.sweep_grid) == 50
    assert cfg.sweep_grid[0] == pytest.approx(0.01) and cfg.sweep_grid[-1] == pytest.approx(2.0)
    assert cli.run(cfg, tmp_path, workers=1) == 0
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert [float(x) for x in meta["sweep_grid"]] == list(cfg.sweep_grid)
    assert meta["config"] == text
    _, rows = read_csv_mixed(tmp_path / "bifurcation.csv")
    eta = [float(r[1]) for r in rows]
    assert all(a >= b for a, b in zip(eta, eta[1:]))
    for r in rows:
        ratio, e = float(r[0]), float(r[1])
        assert (e == 0.0) == (ratio >= 0.25)
        assert (float(r[2]) == 0.0) == (e == 0.0)


def read_csv_mixed(path):
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    assert all(len(r) == len(header) for r in rows)
    return header, rows


def test_sweep_matches_prediction(tmp_path):
    cfg = parse_config("model.kappa = 1\nsweep.ratios = 0.1, 0.2, 0.5\n", "sweep")
    assert cli.run(cfg, tmp_path) == 0
    _, rows = read_csv_mixed(tmp_path / "bifurcation.csv")
    for r in rows:
        if r[4] == "supercritical_bifurcation":
            assert abs(float(r[3]) - float(r[2])) < 1e-3
        else:
            assert float(r[3]) < 1e-6


def test_equilibrium_command(tmp_path):
    cfg = parse_config("model.sigma = 0.2\nmodel.kappa = 1\n", "equilibrium")
    assert cli.run(cfg, tmp_path) == 0
    header, rows = read_csv_mixed(tmp_path / "equilibrium.csv")
    row = dict(zip(header, rows[0]))
    assert float(row["eta_star"]) == solve_compatibility(ModelParams(0.2, 1.0)).eta_star
    assert float(row["compat_residual"]) <= 1e-12
    cfg = parse_config("model.sigma = 1\nmodel.kappa = 2\nmodel.noise = multiplicative\n", "equilibrium")
    assert cli.run(cfg, tmp_path / "deg") == 0


def test_emit_plot_data_roundtrip(tmp_path):
    p = ModelParams(0.1, 1.0)
    tr = evolve(von_mises(AngleGrid.circle(64), 1.0), SolverConfig(dt=0.01, t_end=0.2, record_every=10), p)
    assert len(tr.snapshots) == 3
    emit_plot_data(tr, tmp_path)
    assert sorted(x.name for x in (tmp_path / "snapshots").iterdir()) == ["0000.csv", "0001.csv", "0002.csv"]
    header, rows = read_csv(tmp_path / "series.csv")
    assert tuple(header) == SERIES_COLUMNS
    expected = np.array([r.as_tuple() for r in tr.series])
    assert np.array_equal(np.array(rows), expected)
    h, snap = read_csv(tmp_path / "snapshots" / "0001.csv")
    assert h == ["theta", "f"]
    assert np.array_equal(np.array(snap)[:, 1], tr.snapshots[1].values)


def test_manifest_lists_checksums(tmp_path):
    cfg = parse_config("model.sigma = 0.1\nmodel.kappa = 1\nsolver.t_end = 0.5\n", "solve")
    assert cli.run(cfg, tmp_path) == 0
    lines = (tmp_path / "manifest.txt").read_text().splitlines()
    names = [ln.split("  ", 1)[1] for ln in lines]
    assert "series.csv" in names and "metadata.json" in names
    assert all(len(ln.split("  ", 1)[0]) == 64 for ln in lines)


def _tree(root: Path) -> dict[str, bytes]:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_particles_deterministic_across_workers(tmp_path):
    text = "model.sigma = 0.1\nmodel.kappa = 1\nsim.dt = 0.01\nsim.t_end = 0.3\nsim.n_particles = 300\nsim.replicas = 4\nseed = 9\n"
    cfg = parse_config(text, "particles")
    assert cli.run(cfg, tmp_path / "a", workers=1) == 0
    assert cli.run(cfg, tmp_path / "b", workers=4) == 0
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")


def test_main_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("model.sigma = -1\nmodel.kappa = 1\n")
    assert cli.main(["solve", "--config", str(bad), "--quiet"]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["exit_code"] == 2 and err["errors"] == ["sigma must be positive"]
    assert cli.main(["solve", "--config", str(tmp_path / "missing.cfg"), "--quiet"]) == 4
    boom = tmp_path / "boom.cfg"
    boom.write_text("model.sigma = 0.0001\nmodel.kappa = 50\nsolver.dt = 5\nsolver.t_end = 50\ninitial.kind = harmonic\ninitial.eps = 0.5\n")
    assert cli.main(["solve", "--config", str(boom), "--output", str(tmp_path / "o"), "--quiet"]) == 3
    rec = json.loads((tmp_path / "o" / "error.json").read_text())
    assert rec["error"] == "UnstableStep" and rec["time"] > 0


def test_seed_override(tmp_path):
    cfgf = tmp_path / "p.cfg"
    cfgf.write_text("model.sigma = 0.1\nmodel.kappa = 1\nsim.dt = 0.01\nsim.t_end = 0.1\nsim.n_particles = 100\n")
    assert cli.main(["particles", "--config", str(cfgf), "--output", str(tmp_path / "a"), "--seed", "1", "--quiet"]) == 0
    assert cli.main(["particles", "--config", str(cfgf), "--output", str(tmp_path / "b"), "--seed", "2", "--quiet"]) == 0
    assert (tmp_path / "a" / "particles.csv").read_bytes() != (tmp_path / "b" / "particles.csv").read_bytes()


def test_module_entry_point(tmp_path):
    cfgf = tmp_path / "e.cfg"
    cfgf.write_text("model.sigma = 0.3\nmodel.kappa = 1\n")
    out = subprocess.run([sys.executable, "-m", "nematic_lab", "equilibrium", "--config", str(cfgf),
                          "--output", str(tmp_path / "o"), "--quiet"], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "o" / "equilibrium.csv").exists()
