#!/usr/bin/env python3
"""Uniformize finite-depth carpets and track how much of the band the squares miss.

For each depth the middle square is the inner boundary and the outside of the
unit square the outer one.  The residual fraction is the share of the band
area 2 pi h_A not covered by squares; it should fall as holes are added.

    python3 scripts/carpet_depth_residual.py --depths 1 2 3 --n 81
"""
import argparse

from carpet_modulus.carpets import carpet_to_scene, standard_carpet
from carpet_modulus.io import dumps, layout_svg, layout_to_json, to_csv
from carpet_modulus.uniformizer import layout_validate, uniformize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depths", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--n", type=int, default=81, help="cells per unit length (h = 1/n)")
    ap.add_argument("--svg-prefix", help="write one SVG per depth")
    ap.add_argument("--csv")
    a = ap.parse_args()
    rows, layouts = [], {}
    for depth in a.depths:
        L = uniformize(carpet_to_scene(standard_carpet(depth)), h=1 / a.n)
        rep = layout_validate(L, tol=1e-6)
        sides = sorted((s.side for s in L.squares.values()), reverse=True)
        rows.append((depth, len(L.squares), L.h_A, L.modulus, L.residual_fraction, rep.area_residual,
                     rep.min_gap, sides[0] if sides else 0.0, rep.ok))
        layouts[depth] = layout_to_json(L, rep)
        print(f"depth {depth}: squares={len(L.squares):3d} h_A={L.h_A:.5f} residual={L.residual_fraction:.4f} "
              f"area identity={rep.area_residual:+.1e} valid={rep.ok}", flush=True)
        if a.svg_prefix:
            with open(f"{a.svg_prefix}{depth}.svg", "w") as f:
                f.write(layout_svg(L))
    fr = [r[4] for r in rows]
    print(dumps({"h": 1 / a.n, "residual_fraction": fr,
                 "strictly_decreasing": all(y < x for x, y in zip(fr, fr[1:]))}), end="")
    if a.csv:
        with open(a.csv, "w") as f:
            f.write(to_csv(rows, ["depth", "squares", "h_A", "modulus", "residual_fraction", "area_residual",
                                  "min_gap", "largest_side", "valid"]))


if __name__ == "__main__":
    main()
