"""Figure runs: sweep, write one CSV per panel, optionally render PNGs."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .io import write_table
from .sensitivity import Table, sweep

FIGURES = ("fig4", "fig5", "fig6", "fig7", "fig8", "fig10")


def _ridge_table(t5: Table) -> Table:
    rows = []
    for z in sorted({r["z_rf"] for r in t5.rows}):
        col = t5.where(z_rf=z)
        best = max(col, key=lambda r: abs(r["detuning_per_density"]))
        rows.append({"z_rf": z, "ridge_normalized_current": best["normalized_current"],
                     "max_detuning_per_density": best["detuning_per_density"]})
    return Table("fig5_ridge", ["z_rf", "ridge_normalized_current", "max_detuning_per_density"],
                 {"z_rf": "m", "ridge_normalized_current": "1",
                  "max_detuning_per_density": "rad/s m^3"}, rows)


def _ratio_table(t6: Table) -> Table:
    rows = []
    for L in sorted({r["loop_side"] for r in t6.rows}):
        for h in sorted({r["h"] for r in t6.rows}):
            ram = t6.where(loop_side=L, h=h, scheme="ramsey")
            dd = t6.where(loop_side=L, h=h, scheme="dd")
            if ram and dd:
                ratio = dd[0]["rho_min"] / ram[0]["rho_min"]
                rows.append({"loop_side": L, "h": h, "echo_over_ramsey": float(ratio)})
    return Table("fig6_ratio", ["loop_side", "h", "echo_over_ramsey"],
                 {"loop_side": "m", "h": "m", "echo_over_ramsey": "1"}, rows)


def _split(table: Table, key: str, value, name: str) -> Table:
    return Table(name, table.columns, table.units, table.where(**{key: value}))


def figure_tables(name: str, setup, **axes) -> list:
    """Tables (one per panel plus derived summaries) for figure ``name``."""
    if name not in FIGURES:
        raise ValueError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    table = sweep(name, setup, **axes)
    if name == "fig5":
        return [table, _ridge_table(table)]
    if name == "fig6":
        return [_split(table, "scheme", "ramsey", "fig6a_ramsey"),
                _split(table, "scheme", "dd", "fig6b_echo"), _ratio_table(table)]
    return [table]


def run_figure(name: str, config, out_dir, plots: bool = True, **axes):
    """Compute figure ``name`` from a :class:`~fqnmr.config.RunConfig`.

    Returns
    -------
    paths : list of Path
        CSV files (one per panel, plus derived tables) and the PNG if requested.
    tables : list of Table
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = config.digest()
    setup = config.setup()
    tables = figure_tables(name, setup, **axes)
    extra = [f"figure {name}"]
    if name == "fig8":
        extra.append("B_ex > 4 mT exceeds the device guideline")
    paths = [write_table(out / f"{t.name}.csv", t, digest, extra=extra) for t in tables]
    if plots:
        from .plotting import PLOTTERS

        full = sweep_union(tables) if name == "fig6" else tables[0]
        paths.append(PLOTTERS[name](full, out / f"{name}.png"))
    return paths, tables


def sweep_union(tables) -> Table:
    base = tables[0]
    rows = [r for t in tables if t.columns == base.columns for r in t.rows]
    return Table(base.name, base.columns, base.units, rows)


def summarize(name: str, tables) -> list:
    """Short human-readable findings printed after a figure run."""
    lines = []
    if name == "fig5":
        ridge = tables[1].column("ridge_normalized_current")
        lines.append(f"ridge normalized current: {ridge.min():.3g} .. {ridge.max():.3g}")
    elif name == "fig6":
        for r in tables[2].rows:
            if r["h"] == min(x["h"] for x in tables[2].rows):
                lines.append(f"L = {r['loop_side'] * 1e6:g} um, h = {r['h'] * 1e6:g} um: "
                             f"echo/Ramsey = {r['echo_over_ramsey']:.3g}")
    elif name in ("fig7", "fig8"):
        t = tables[0]
        key = "scheme" if name == "fig7" else "n"
        for v in sorted({r[key] for r in t.rows}, key=str):
            rows = [r for r in t.where(**{key: v}) if np.isfinite(r["rho_min"])]
            if rows:
                best = min(rows, key=lambda r: r["rho_min"])
                lines.append(f"{key} = {v}: min rho = {best['rho_min_cm3']:.3g} cm^-3 "
                             f"at B_ex = {best['b_ex'] * 1e3:.3g} mT")
    return lines
