"""Run every sweep at its default size and write CSVs plus summary.json.

    python scripts/run_full_sweep.py --out results/full --workers 4
"""
import argparse
import sys

from symcalc import cli


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/full")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--timing", action="store_true")
    args = ap.parse_args(argv)
    extra = ["--timing"] if args.timing else []
    return cli.main(["full", "--out", args.out, "--seed", str(args.seed),
                     "--workers", str(args.workers), *extra])


if __name__ == "__main__":
    sys.exit(main())
