"""Command line runner for the verification sweeps.

    symcalc <subcommand> [--config file.ini] [--p 4,8] [--epsilon 0.25]
            [--phi 0,1,-1] [--samples N] [--seed S] [--out DIR]

Writes ``<out>/<subcommand>.csv`` and ``<out>/summary.json``; the exit code
is 0 iff every row passes.  ``--phi`` values are fractions of
``phi_{p_eps}``.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import calculus
from .errors import DomainError
from .sweeps import COLUMNS, DEFAULTS, EXPERIMENTS, default_config, run_cells

SUBCOMMANDS = EXPERIMENTS + ("full",)
_LIST_KEYS = ("p", "epsilon", "phi", "n", "r", "J")
_SCALAR_KEYS = {"samples": int, "seed": int, "s_max": float, "s_points": int,
                "tolerance": float, "workers": int, "out": str}


def _parse_list(text: str, cast=float):
    parts = [t for t in str(text).replace(";", ",").split(",") if t.strip()]
    return tuple(cast(t) for t in parts)


def read_config(path: str, experiment: str) -> dict:
    """Flat INI: keys in ``[DEFAULT]`` apply to all, ``[<subcommand>]`` overrides."""
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    section = parser[experiment] if parser.has_section(experiment) else parser[parser.default_section]
    out = {}
    for key, value in section.items():
        key = key.replace("-", "_")
        if key in _LIST_KEYS:
            out[key] = _parse_list(value, int if key == "n" else float)
        elif key in _SCALAR_KEYS:
            out[key] = _SCALAR_KEYS[key](value)
        elif key == "manifest":
            out[key] = value
        else:
            raise DomainError(f"unknown config key {key!r}")
    return out


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(rows, path: Path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in COLUMNS])
    path.write_text(buf.getvalue())


def _finite(x):
    return x if np.isfinite(x) else None


def summarize(name: str, rows, runtime=None) -> dict:
    slacks = [r["slack"] for r in rows if np.isfinite(r["slack"])]
    ratios = [r["observed"] / r["bound"] for r in rows
              if r["bound"] not in (0.0,) and np.isfinite(r["bound"]) and np.isfinite(r["observed"])]
    out = {
        "experiment": name,
        "rows": len(rows),
        "failed": sum(not r["passed"] for r in rows),
        "passed": all(r["passed"] for r in rows),
        "min_slack": _finite(min(slacks)) if slacks else None,
        "max_ratio": _finite(max(ratios)) if ratios else None,
        "failures": [{"cell": r["cell"], "quantity": r["quantity"], "observed": _finite(r["observed"]),
                      "bound": _finite(r["bound"])} for r in rows if not r["passed"]],
    }
    if runtime is not None:
        out["runtime_seconds"] = round(runtime, 3)
    return out


def run(subcommand: str, overrides: dict, out_dir: Path, timing: bool = False) -> dict:
    """Run one experiment, write its CSV and return its summary."""
    start = time.perf_counter()
    overrides = dict(overrides)
    manifest_path = overrides.pop("manifest", None)
    overrides.pop("out", None)
    cfg = default_config(subcommand, **overrides)
    manifest = calculus.load_manifest(manifest_path) if manifest_path else None
    rows = run_cells(cfg, manifest)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv(rows, out_dir / f"{subcommand}.csv")
    return summarize(subcommand, rows, time.perf_counter() - start if timing else None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="symcalc", description="Run numerical verification sweeps.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="INI file with [DEFAULT] and per-subcommand sections")
    ap.add_argument("--p", help="comma separated exponents")
    ap.add_argument("--epsilon", help="comma separated epsilons in (0, 1/2)")
    ap.add_argument("--phi", help="comma separated fractions of phi_(p_eps) in [-1, 1]")
    ap.add_argument("--n", help="comma separated chain sizes")
    ap.add_argument("--r", help="comma separated Bakry exponents")
    ap.add_argument("--J", help="comma separated Sobolev orders")
    ap.add_argument("--s-max", type=float)
    ap.add_argument("--s-points", type=int)
    ap.add_argument("--samples", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--tolerance", type=float)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--manifest", help="JSON multiplier manifest for the hormander table")
    ap.add_argument("--out", default=None, help="output directory (default: results)")
    ap.add_argument("--timing", action="store_true", help="record runtimes in summary.json")
    return ap


def _overrides(args, experiment: str) -> dict:
    out = read_config(args.config, experiment) if args.config else {}
    for key in _LIST_KEYS:
        val = getattr(args, key)
        if val is not None:
            out[key] = _parse_list(val, int if key == "n" else float)
    for key in ("samples", "seed", "s_max", "s_points", "tolerance", "workers", "manifest"):
        val = getattr(args, key)
        if val is not None:
            out[key] = val
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    names = list(EXPERIMENTS) if args.subcommand == "full" else [args.subcommand]
    summaries = {}
    try:
        for name in names:
            ov = _overrides(args, name)
            out_dir = Path(args.out or ov.get("out") or "results")
            summaries[name] = run(name, ov, out_dir, timing=args.timing)
    except (DomainError, ValueError, OSError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    report = {"subcommand": args.subcommand, "passed": all(s["passed"] for s in summaries.values()),
              "experiments": summaries}
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    for name, s in summaries.items():
        status = "PASS" if s["passed"] else "FAIL"
        print(f"{status} {name}: {s['rows']} rows, {s['failed']} failed, min slack {s['min_slack']}")
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
