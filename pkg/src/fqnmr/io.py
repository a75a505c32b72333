"""Deterministic CSV and JSON writers."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from . import __version__

SIG_DIGITS = 12


def fmt(value) -> str:
    """Locale-independent 12-significant-digit rendering."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, f".{SIG_DIGITS}g")
    if value is None:
        return ""
    return str(value)


def _round(value):
    if isinstance(value, float) and math.isfinite(value):
        return float(format(value, f".{SIG_DIGITS}g"))
    if isinstance(value, float):
        return fmt(value)
    if isinstance(value, dict):
        return {k: _round(v) for k, v in value.items()}
    return value


def header_lines(config_hash: str, extra=()) -> list:
    lines = [f"# fqnmr {__version__}", f"# config_sha256 {config_hash}"]
    lines.extend(f"# {e}" for e in extra)
    return lines


def write_table(path, table, config_hash: str, extra=()) -> Path:
    """Write ``table`` as CSV with provenance comment lines and 'name [unit]' headers."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines(config_hash, extra):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{c} [{table.units[c]}]" if table.units.get(c) else c for c in table.columns])
        for row in table.rows:
            w.writerow([fmt(row[c]) for c in table.columns])
    return path


def write_json(path, payload: dict, config_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"version": __version__, "config_sha256": config_hash, **_round(payload)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_table(path):
    """Read a CSV written by :func:`write_table` into (columns, rows of strings)."""
    with open(path, encoding="utf-8") as fh:
        lines = [l for l in fh if not l.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    cols = [h.split(" [")[0] for h in header]
    return cols, [dict(zip(cols, r)) for r in reader]
