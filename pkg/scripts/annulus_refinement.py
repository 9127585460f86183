#!/usr/bin/env python3
"""Annulus modulus under grid refinement, flat-cylinder and Euclidean metrics.

The exact value is 2 pi / log(R/r).  On the flat cylinder the log-polar grid
is exact up to solver tolerance.  A 4-connected Cartesian grid measures path
length in the l1 norm, so there the values approach the taxicab modulus
4 / log(R/r) instead (the integral of (|cos|+|sin|)^-2 over a turn is 4).

    python3 scripts/annulus_refinement.py --R 2.718281828459045 --levels 3
"""
import argparse
import math

from carpet_modulus.carpets import Boundary, CylinderDomain, Scene
from carpet_modulus.geometry import TWO_PI
from carpet_modulus.grid import FamilySpec, discretize
from carpet_modulus.io import dumps, to_csv
from carpet_modulus.modulus import classical_modulus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--r", type=float, default=1.0)
    ap.add_argument("--R", type=float, default=math.e)
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--csv")
    a = ap.parse_args()
    exact = TWO_PI / math.log(a.R / a.r)
    taxicab = 4.0 / math.log(a.R / a.r)
    cyl = CylinderDomain(a.r, a.R).to_scene()
    planar = Scene(Boundary(1, "disk", (0.0, 0.0, a.R)), (Boundary(0, "disk", (0.0, 0.0, a.r)),))
    rows = []
    for name, scene, h0 in (("flat-cylinder", cyl, 1 / 16), ("euclidean", planar, a.R / 8)):
        prev = None
        for k in range(a.levels):
            h = h0 / 2 ** k
            g = discretize(scene, h)
            res = classical_modulus(g, FamilySpec(0, 1))
            err = (res.value - exact) / exact
            rate = math.log2(abs(prev / err)) if prev not in (None, 0.0) and err != 0 else float("nan")
            tx = (res.value - taxicab) / taxicab
            rows.append((name, h, g.shape[0] * g.shape[1], res.value, err, tx, rate, res.elapsed))
            print(f"{name:14s} h={h:.5f} cells={rows[-1][2]:7d} M={res.value:.6f} rel.err={err:+.2e} "
                  f"vs taxicab={tx:+.2e} order={rate:.2f} ({res.elapsed:.1f}s)", flush=True)
            prev = err
    print(dumps({"exact": exact, "taxicab_limit": taxicab}), end="")
    if a.csv:
        with open(a.csv, "w") as f:
            f.write(to_csv(rows, ["metric", "h", "cells", "modulus", "rel_err", "rel_err_taxicab", "order", "seconds"]))


if __name__ == "__main__":
    main()
