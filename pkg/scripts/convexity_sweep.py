"""Large convexity sweep over the (p, epsilon, phi) grid used by the acceptance suite.

Each cell draws ``--samples`` stratified states; the CSV records the raw and
scale-normalised minima per cell.
"""
import argparse
import sys

from symcalc import cli


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--out", default="results/convexity")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    return cli.main(["verify-convexity", "--p", "2.5,4,8,20", "--epsilon", "0.05,0.25,0.45",
                     "--phi", "0,0.5,-0.5,1,-1", "--samples", str(args.samples),
                     "--seed", str(args.seed), "--workers", str(args.workers), "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
