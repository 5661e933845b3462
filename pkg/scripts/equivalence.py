"""Norm-equivalence ratios across resolutions and residual subordination."""

import argparse
import json
from pathlib import Path

from nlsgrowth.spectral import GridSpec
from nlsgrowth.studies import norm_equivalence_probe, residual_subordination


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="32,64,128")
    ap.add_argument("--ensemble", type=int, default=32)
    ap.add_argument("--k", type=int, default=1)
    ap.add_argument("--s", type=float, default=1.0)
    ap.add_argument("--out", default="results/equivalence.json")
    args = ap.parse_args()

    out = {"probe": {}}
    for n in (int(v) for v in args.sizes.split(",")):
        res = norm_equivalence_probe(GridSpec.cube(2, n), args.k, args.s, 3, args.ensemble)
        out["probe"][n] = res.to_dict()
        print(f"n={n:4d}  max ratio {res.max_ratio:.4g}  median {res.median_ratio:.4g}  over-strong median {res.median_strong:.3e}")

    rep = residual_subordination(GridSpec.cube(2, 1024), [0, 1, 2, 4, 8, 16, 32, 64, 128, 160])
    out["subordination"] = rep.to_dict()
    print(f"|R_2| vs ||u||_H2 at fixed H1: slope {rep.slope:.3f}, r^2 {rep.r_squared:.4f}")
    for h, r in zip(rep.h2k_norms, rep.residuals):
        print(f"  {h:10.4g} {r:12.4e}")

    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(out, indent=2) + "\n")


if __name__ == "__main__":
    main()
