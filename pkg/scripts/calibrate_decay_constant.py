#!/usr/bin/env python3
"""Fit the decay constant C(mu) against transboundary moduli of separated pairs.

Each configuration places two unit-diameter disks E (label 0), F (label 2) at relative distance
t > 4e inside a box, scatters disjoint round holes (mu >= 1/4) between them,
and solves the transboundary modulus of the E-F family with every scattered
hole carrying a weight.  The bound C * log(t/4)^(-1/3^(N+1)) dominates all
of them iff C is at least the largest  M * log(t/4)^(1/3^(N+1)).

Grids of this size are far beyond the path enumerator, so the moduli come
from the cutting-plane solver (checked against enumeration elsewhere).

    python3 scripts/calibrate_decay_constant.py --configs 50 --h 0.25
"""
import argparse
import math

import numpy as np

from carpet_modulus.carpets import Boundary, Scene
from carpet_modulus.config import Config
from carpet_modulus.diagnostics import decay_bound, ring_fat_bound
from carpet_modulus.grid import FamilySpec, discretize
from carpet_modulus.io import dumps
from carpet_modulus.modulus import transboundary_modulus


def configuration(rng, t):
    d = t + 1.0  # center distance, so dist(E, F) = t for unit diameters
    holes = [Boundary(0, "disk", (-d / 2, 0.0, 0.5)), Boundary(2, "disk", (d / 2, 0.0, 0.5))]
    placed = [(-d / 2, 0.0, 0.5), (d / 2, 0.0, 0.5)]
    label = 3
    for _ in range(400):
        if label >= 3 + int(rng.integers(3, 9)):
            break
        r = float(rng.uniform(0.5, 1.0))
        x, y = float(rng.uniform(-d / 2 + 1, d / 2 - 1)), float(rng.uniform(-2.0, 2.0))
        if all(math.hypot(x - a, y - b) > r + c + 0.3 for a, b, c in placed):
            holes.append(Boundary(label, "disk", (x, y, r)))
            placed.append((x, y, r))
            label += 1
    box = Boundary(None, "rect", (-d / 2 - 2.0, -3.5, d + 4.0, 7.0))
    return Scene(box, tuple(holes))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--configs", type=int, default=50)
    ap.add_argument("--h", type=float, default=0.25)
    ap.add_argument("--mu", type=float, default=0.25)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    a = ap.parse_args()
    rng = np.random.default_rng(a.seed)
    N = ring_fat_bound(a.mu)
    default = Config().decay_constant
    rows = []
    for k in range(a.configs):
        t = float(np.exp(rng.uniform(math.log(4 * math.e * 1.01), math.log(30.0))))
        scene = configuration(rng, t)
        res = transboundary_modulus(discretize(scene, a.h), FamilySpec(0, 2))
        need = res.value * math.log(t / 4) ** (1.0 / 3 ** (N + 1))
        rows.append({"config": k, "t": t, "holes": len(scene.holes) - 2, "modulus": res.value,
                     "C_needed": need, "bound_at_default": decay_bound(t, a.mu, default)})
        print(f"{k:3d} t={t:6.2f} holes={len(scene.holes) - 2} M={res.value:.4f} C_needed={need:.4f}", flush=True)
    C = max(r["C_needed"] for r in rows)
    report = {"configs": a.configs, "h": a.h, "mu": a.mu, "N": N, "empirical_C": C, "default_C": default,
              "default_dominates": C <= default}
    print(dumps(report), end="")
    if a.out:
        with open(a.out, "w") as f:
            f.write(dumps({**report, "rows": rows}))


if __name__ == "__main__":
    main()
