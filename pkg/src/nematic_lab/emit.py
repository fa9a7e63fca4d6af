"""Deterministic file output: atomic writes, full-precision CSV, manifests."""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

from .diagnostics import DiagnosticRecord

SERIES_COLUMNS = DiagnosticRecord.FIELDS
MANIFEST = "manifest.txt"


def fmt(x) -> str:
    """17 significant digits for floats, plain text for everything else."""
    if isinstance(x, float):
        return format(x, ".17g")
    if isinstance(x, bool):
        return "true" if x else "false"
    if hasattr(x, "item"):  # numpy scalar
        return fmt(x.item())
    return str(x)


def atomic_write(path: Path, data: str | bytes) -> None:
    """Write to a sibling temp file and rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    width = len(header)
    for row in rows:
        if len(row) != width:
            raise ValueError(f"row has {len(row)} fields, header has {width}")
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    atomic_write(path, csv_text(header, rows))
    return Path(path)


def read_csv(path: Path) -> tuple[list[str], list[list[float]]]:
    """Parse a numeric CSV written by :func:`write_csv`."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        rows = [[float(x) for x in line.rstrip("\n").split(",")] for line in fh if line.strip()]
    return header, rows


def emit_plot_data(traj, out_dir: Path) -> list[Path]:
    """``series.csv`` plus one ``snapshots/NNNN.csv`` per recorded density."""
    out_dir = Path(out_dir)
    if len(traj.snapshots) == 0:
        raise ValueError("empty trajectory")
    written = [write_csv(out_dir / "series.csv", SERIES_COLUMNS, (r.as_tuple() for r in traj.series))]
    for i, snap in enumerate(traj.snapshots):
        rows = zip(snap.grid.nodes.tolist(), snap.values.tolist())
        written.append(write_csv(out_dir / "snapshots" / f"{i:04d}.csv", ("theta", "f"), rows))
    return written


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path) -> Path:
    """List every file under ``out_dir`` as ``sha256  relative/path``, sorted by path."""
    out_dir = Path(out_dir)
    files = sorted(
        p for p in out_dir.rglob("*") if p.is_file() and p.name != MANIFEST and not p.name.startswith(".")
    )
    lines = [f"{sha256_file(p)}  {p.relative_to(out_dir).as_posix()}" for p in files]
    path = out_dir / MANIFEST
    atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))
    return path
