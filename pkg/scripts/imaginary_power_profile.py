"""Tabulate ``||A^{is}||_{p, R(A)}`` on Ehrenfest chains against the growth envelope.

Writes one CSV with columns n, p, s, norm, envelope, shaped where
``envelope = (1+|s|)^{1/2} e^{phi*_p |s|}`` and ``shaped = norm / envelope``.
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from symcalc.bellman import phi_star_angle
from symcalc.semigroup import ehrenfest
from symcalc.sweeps import imaginary_norm_profile


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", default="4,6,8")
    ap.add_argument("--p", default="1.5,2,3")
    ap.add_argument("--s-max", type=float, default=20.0)
    ap.add_argument("--s-points", type=int, default=41)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/imaginary_profile.csv")
    args = ap.parse_args(argv)
    s = np.linspace(-args.s_max, args.s_max, args.s_points)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "p", "s", "norm", "envelope", "shaped"])
        for n in (int(x) for x in args.n.split(",")):
            gen = ehrenfest(n)
            for p in (float(x) for x in args.p.split(",")):
                norms = imaginary_norm_profile(gen, p, s, seed=args.seed)
                env = np.sqrt(1 + np.abs(s)) * np.exp(phi_star_angle(p) * np.abs(s))
                for row in zip(s, norms, env, norms / env):
                    w.writerow([n, p, *(repr(float(x)) for x in row)])
                print(f"n={n} p={p}: max shaped {float((norms / env).max()):.4g}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
