#!/usr/bin/env python3
"""Sweep the (r_s, alpha) plane and map the admissibility flags.

Writes a CSV with one row per parameter pair; plot-ready (no plotting here).
"""

import argparse
import csv

import numpy as np

from qnmkit.spacetime import SpacetimeParams, admissibility


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="admissibility_sweep.csv")
    ap.add_argument("--lam", type=float, default=3.0)
    ap.add_argument("--n-rs", type=int, default=30)
    ap.add_argument("--n-alpha", type=int, default=20)
    ns = ap.parse_args()

    with open(ns.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r_s", "alpha", "horizons", "nontrapping",
                    "semiclassical", "ergo_disjoint"])
        for r_s in np.linspace(0.02, 0.38, ns.n_rs):
            for alpha in np.linspace(0.0, 0.12, ns.n_alpha):
                model = "KerrDeSitter" if alpha > 0 else "dSSchwarzschild"
                p = SpacetimeParams(ns.lam, float(r_s), float(alpha), model)
                rep = admissibility(p)
                w.writerow([f"{r_s:.5f}", f"{alpha:.5f}",
                            int(rep.horizons_exist),
                            int(rep.classical_nontrapping),
                            int(rep.semiclassical_regime),
                            int(rep.ergoregions_disjoint)])
    print(f"wrote {ns.out}")


if __name__ == "__main__":
    main()
