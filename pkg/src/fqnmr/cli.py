"""Command-line interface: figure reproduction, sensitivity queries, self-checks.

Exit codes: 0 success, 1 solver or I/O failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path
import sys

from . import __version__
from .config import ConfigError, RunConfig, parse_overrides
from .ensemble import CapacityError
from .figures import FIGURES, run_figure, summarize
from .io import write_json, write_table
from .oracle import AccuracyError
from .protocols import OutOfRegimeError
from .sensitivity import (BracketError, NoSignalError, Table, min_density, min_spin_number)

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2
SOLVER_ERRORS = (NoSignalError, BracketError, OutOfRegimeError, CapacityError, AccuracyError,
                 OSError)
CONVENTION_KEYS = ("polarization", "dephasing", "rf_reference")


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", help="INI file layered over the defaults "
                   "(default: $FQNMR_CONFIG if set)")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--resolution", metavar="METERS", help="voxel edge length")
    p.add_argument("--threads", metavar="K", help="worker threads")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="SECTION.KEY=VALUE", help="override one config value (repeatable)")
    p.add_argument("--convention", action="append", default=[], metavar="NAME=VALUE",
                   help="polarization={exact,ratio}, dephasing={total,block}, "
                        "rf_reference={edge,center} (repeatable)")
    p.add_argument("--no-plots", action="store_true", help="skip PNG rendering")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="fqnmr", description="Flux-qubit NMR sensitivity simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    fig = sub.add_parser("figure", parents=[common], help="reproduce a figure as CSV (+PNG)")
    fig.add_argument("name", choices=FIGURES)
    q = sub.add_parser("query", parents=[common], help="single sensitivity evaluation")
    q.add_argument("kind", choices=("min-density", "min-number"))
    sub.add_parser("selfcheck", parents=[common], help="oracle vs closed-form suites")
    return parser


def _collect_overrides(args) -> dict:
    items = list(args.overrides)
    for item in args.convention:
        if "=" not in item:
            raise ConfigError(f"--convention {item!r} must look like name=value")
        key, value = item.split("=", 1)
        if key.strip() not in CONVENTION_KEYS:
            raise ConfigError(f"unknown convention {key!r}; choose from {', '.join(CONVENTION_KEYS)}")
        items.append(f"conventions.{key.strip()}={value}")
    if args.resolution is not None:
        items.append(f"numerics.resolution={args.resolution}")
    if args.threads is not None:
        items.append(f"numerics.threads={args.threads}")
    if args.out is not None:
        items.append(f"output.directory={args.out}")
    if args.no_plots:
        items.append("output.plots=false")
    return parse_overrides(items)


def _write_resolved(cfg: RunConfig, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    path = out / "config.resolved.ini"
    path.write_text(f"# fqnmr {__version__}\n# config_sha256 {cfg.digest()}\n" + cfg.to_ini(),
                    encoding="utf-8")
    return path


def cmd_figure(args, cfg: RunConfig) -> int:
    out = Path(cfg["output"]["directory"])
    _write_resolved(cfg, out)
    paths, tables = run_figure(args.name, cfg, out, plots=cfg["output"]["plots"])
    for p in paths:
        print(f"wrote {p}")
    for line in summarize(args.name, tables):
        print(line)
    return EXIT_OK


def cmd_query(args, cfg: RunConfig) -> int:
    setup = cfg.setup()
    scheme = cfg["protocol"]["scheme"]
    if args.kind == "min-number":
        if setup.sample == "large":
            raise ConfigError("min-number needs sample.kind = a, b or c")
        res = min_spin_number(setup, setup.sample, setup.sample_width, scheme,
                              setup.sample_height)
    else:
        res = min_density(setup, scheme)
    out = Path(cfg["output"]["directory"])
    _write_resolved(cfg, out)
    row = {"kind": args.kind, "scheme": scheme, "sample": setup.sample, "b_ex": setup.env.b_ex,
           "loop_side": setup.qubit.loop_side, **res.as_dict()}
    row = {k: (float("nan") if v is None else v) for k, v in row.items()}
    units = {"b_ex": "T", "loop_side": "m", "rho_min": "m^-3", "rho_min_cm3": "cm^-3",
             "n_min": "1", "sample_volume": "m^3", "tau": "s", "rf_current": "A",
             "rf_offset": "m", "bracket_width": "log10", "voxel_edge": "m",
             "signal": "T", "uncertainty": "T"}
    cols = list(row)
    digest = cfg.digest()
    csv_path = write_table(out / "query.csv", Table("query", cols, units, [row]), digest)
    json_path = write_json(out / "query.json", {"result": row}, digest)
    print(json.dumps({"rho_min_cm3": float(f"{res.rho_min_cm3:.6g}"),
                      "n_min": float(f"{res.n_min:.6g}"), "scheme": scheme,
                      "csv": str(csv_path), "json": str(json_path)}))
    return EXIT_OK


def cmd_selfcheck(args, cfg: RunConfig) -> int:
    from .selfcheck import run_selfcheck

    results = run_selfcheck(sys.stdout)
    ok = all(r.passed for r in results)
    print("selfcheck", "PASSED" if ok else "FAILED")
    return EXIT_OK if ok else EXIT_SOLVER


COMMANDS = {"figure": cmd_figure, "query": cmd_query, "selfcheck": cmd_selfcheck}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config, _collect_overrides(args))
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"fqnmr: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"fqnmr: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
