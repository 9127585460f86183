"""Command line: ``carpet-modulus {gen,modulus,uniformize,diagnose,validate}``.

Exit codes: 0 ok, 1 parse or usage error, 2 convergence/gap warning,
3 topology error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .acceptance import CRITERIA, run_suite
from .carpets import CylinderDomain, carpet_to_scene, cylinder_from_height, standard_carpet
from .config import Config, thread_cap
from .diagnostics import family_separation, fatness_estimate, quasi_round_fit, quasicircle_constant, select_subannulus
from .errors import CarpetError, ConvergenceError, DomainError, TopologyError
from .geometry import Annulus, MetricKind
from .grid import FamilySpec, discretize, fill_residual
from .modulus import modulus as solve_modulus
from .uniformizer import layout_validate, uniformize

EXIT_OK, EXIT_USAGE, EXIT_GAP, EXIT_TOPOLOGY = 0, 1, 2, 3
log = logging.getLogger("carpet_modulus")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args) -> Config:
    cfg = Config()
    if getattr(args, "config", None):
        try:
            cfg = Config.from_json(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError, TypeError) as e:
            raise UsageError(f"cannot read config {args.config}: {e}") from e
    return cfg.replace(seed=getattr(args, "seed", None), h=getattr(args, "h", None),
                       eps=getattr(args, "eps", None))


def _selector(text: str):
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return int(parts[0])
        if len(parts) == 4:
            return tuple(float(p) for p in parts)
    except ValueError:
        pass
    raise UsageError(f"selector {text!r} is neither a hole label nor x0,y0,x1,y1")


# ---------------------------------------------------------------------------
# gen

def parse_squares(text: str):
    """``side@u:theta,...`` -> [(side, u, theta), ...]."""
    out = []
    for item in filter(None, text.split(",")):
        try:
            side, rest = item.split("@")
            u, theta = rest.split(":")
            out.append((float(side), float(u), float(theta)))
        except ValueError:
            raise UsageError(f"square {item!r} is not side@u:theta") from None
    return out


def cmd_gen(args, cfg) -> int:
    if args.kind == "carpet":
        if args.depth is None:
            raise UsageError("gen carpet needs --depth")
        scene = carpet_to_scene(standard_carpet(args.depth))
    elif args.kind == "annulus":
        if args.r is None or args.R is None:
            raise UsageError("gen annulus needs --r and --R")
        scene = CylinderDomain(args.r, args.R).to_scene()
    else:
        if args.height is None:
            raise UsageError("gen cylinder needs --h")
        scene = cylinder_from_height(args.height, parse_squares(args.squares or "")).to_scene()
    _emit(io.dumps(io.scene_to_json(scene)), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# modulus

def cmd_modulus(args, cfg) -> int:
    scene = io.read_scene(args.scene)
    grid = discretize(scene, cfg.h, seed=cfg.seed if args.shift else None)
    if args.dense_cover is not None:
        grid = fill_residual(grid, args.dense_cover if args.dense_cover > 0 else None)
    E, F = _selector(args.E), _selector(args.F)
    conv = args.convention or ("open" if args.mode == "carpet" else cfg.convention)
    fam = FamilySpec(E, F, conv)
    kw = {"eps": cfg.eps, "iter_cap": cfg.iter_cap}
    if args.holes is not None and args.mode == "transboundary":
        kw["hole_labels"] = [int(v) for v in args.holes.split(",") if v]
    status = EXIT_OK
    try:
        res = solve_modulus(grid, fam, args.mode, **kw)
    except ConvergenceError as e:
        log.warning("%s", e)
        res, status = e.partial, EXIT_GAP
        if res is None:
            return EXIT_GAP
    if res.empty_family:
        raise TopologyError("no path joins E and F")
    if res.gap_estimate > cfg.eps:
        status = EXIT_GAP
    out = io.result_to_json(res, grid, timing=args.timing)
    if args.oracle:
        from .oracle import brute_force_modulus

        o = brute_force_modulus(grid, fam, args.mode, kw.get("hole_labels"))
        delta = abs(o.value - res.value) if math.isfinite(o.value) or math.isfinite(res.value) else 0.0
        out["oracle"] = {"value": o.value, "delta": delta}
        print(f"oracle delta {delta:.3e}", file=sys.stderr)
    _emit(io.dumps(out), args.out)
    if args.csv:
        X, Y = grid.centers()
        rows = [(int(j), int(i), X[j, i], Y[j, i], res.distribution.density[j, i])
                for j, i in zip(*np.nonzero(res.distribution.density))]
        Path(args.csv).write_text(io.to_csv(rows, ["j", "i", "x", "y", "rho"]))
    return status


# ---------------------------------------------------------------------------
# uniformize

def cmd_uniformize(args, cfg) -> int:
    scene = io.read_scene(args.scene)
    L = uniformize(scene, args.inner, args.outer, h=cfg.h, seed=cfg.seed if args.shift else None, eps=cfg.eps,
                   convention=cfg.convention, l_min_fraction=cfg.l_min_fraction)
    rep = layout_validate(L, l_min_fraction=cfg.l_min_fraction)
    _emit(io.dumps(io.layout_to_json(L, rep)), args.out)
    if args.svg:
        Path(args.svg).write_text(io.layout_svg(L))
    return EXIT_GAP if L.gap > cfg.eps else EXIT_OK


# ---------------------------------------------------------------------------
# diagnose

def _nan_on_error(f):
    try:
        return f()
    except (CarpetError, ValueError):
        return math.nan


def cmd_diagnose(args, cfg) -> int:
    scene = io.read_scene(args.scene)
    m = scene.metric
    rows = []
    for label, curve in scene.curves().items():
        b = scene.outer if label == scene.outer_label and scene.outer is not None else scene.hole(label)
        k = _nan_on_error(lambda: quasicircle_constant(curve, m, args.samples).k)
        lam = _nan_on_error(lambda: quasi_round_fit(curve, m).lam)
        mu = _nan_on_error(lambda: fatness_estimate(b.region, m, trials=args.trials, seed=cfg.seed).mu)
        rows.append({"label": label, "k": k, "lambda": lam, "mu": mu})
    out = {"version": io.RESULT_VERSION, "metric": m.value, "curves": rows}
    curves = scene.curves()
    if len(curves) >= 2:
        sep = family_separation(curves, m)
        out["separation"] = {"s": sep.s, "witness": list(sep.witness)}
    if args.annulus:
        try:
            x, r, R = (float(v) for v in args.annulus.split(","))
        except ValueError:
            raise UsageError("--annulus needs x,r,R") from None
        A = Annulus(complex(x), r, R, MetricKind.parse(args.annulus_metric))
        res = select_subannulus(A, {b.label: b.region for b in scene.holes}, args.mu)
        from .diagnostics import ring_fat_bound

        N = ring_fat_bound(args.mu)
        out["subannulus"] = {
            "r": res.annulus.r, "R": res.annulus.R, "width": res.annulus.width, "removed": list(res.removed),
            "N": N, "clauses": list(res.clauses(A, N)),
        }
    _emit(io.dumps(out), args.out)
    if args.csv:
        table = [(r["label"], r["k"], r["lambda"], r["mu"], "") for r in rows]
        if "separation" in out:
            table.append(("family", "", "", "", out["separation"]["s"]))
        Path(args.csv).write_text(io.to_csv(table, ["label", "k", "lambda", "mu", "s"]))
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate

def cmd_validate(args, cfg) -> int:
    only = None
    if args.only:
        try:
            only = {int(v) for v in args.only.split(",") if v}
        except ValueError:
            raise UsageError(f"--only expects criterion numbers, got {args.only!r}") from None
        unknown = only - set(CRITERIA)
        if unknown:
            raise UsageError(f"no criterion numbered {sorted(unknown)}")
    echo = None if args.json else (lambda line: print(line, flush=True))
    results = run_suite(args.suite, only=only, echo=echo)
    if args.json:
        sys.stdout.write(io.dumps({"version": io.RESULT_VERSION, "suite": args.suite, "passed": all(r.passed for r in results),
                                   "criteria": [r.to_json() for r in results]}))
    return EXIT_OK if all(r.passed for r in results) else EXIT_GAP


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="carpet-modulus", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file with Config fields")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a scene file")
    g.add_argument("kind", choices=["carpet", "cylinder", "annulus"])
    g.add_argument("--depth", type=int)
    g.add_argument("--r", type=float)
    g.add_argument("--R", type=float)
    g.add_argument("--h", dest="height", type=float, help="cylinder height log(R/r)")
    g.add_argument("--squares", help="side@u:theta,... (u measured from the inner circle)")
    g.add_argument("-o", "--out")
    g.set_defaults(func=cmd_gen)

    def common(q):
        q.add_argument("scene")
        q.add_argument("--h", type=float, help="grid resolution")
        q.add_argument("--seed", type=int)
        q.add_argument("--eps", type=float)
        q.add_argument("--shift", action="store_true", help="random sub-cell grid offset from the seed")
        q.add_argument("-o", "--out")

    m = sub.add_parser("modulus", help="discrete modulus of a connecting family")
    common(m)
    m.add_argument("--E", default="0", help="hole label or x0,y0,x1,y1")
    m.add_argument("--F", default="1")
    m.add_argument("--mode", choices=["classical", "transboundary", "carpet"], default="classical")
    m.add_argument("--convention", choices=["open", "closed"])
    m.add_argument("--holes", help="weight-carrying hole labels (transboundary)")
    m.add_argument("--dense-cover", type=int, nargs="?", const=0, default=None,
                   help="cover the residual set by square blocks (optional max block size)")
    m.add_argument("--oracle", action="store_true", help="also run the brute-force oracle")
    m.add_argument("--csv", help="write the density per cell")
    m.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical output)")
    m.set_defaults(func=cmd_modulus)

    u = sub.add_parser("uniformize", help="cylinder-with-squares layout")
    common(u)
    u.add_argument("--inner", type=int, default=0)
    u.add_argument("--outer", type=int, default=1)
    u.add_argument("--svg")
    u.set_defaults(func=cmd_uniformize)

    d = sub.add_parser("diagnose", help="per-curve and family diagnostics")
    d.add_argument("scene")
    d.add_argument("--seed", type=int)
    d.add_argument("--samples", type=int, default=256)
    d.add_argument("--trials", type=int, default=32)
    d.add_argument("--annulus", help="x,r,R: run the subannulus selection")
    d.add_argument("--annulus-metric", default="chordal")
    d.add_argument("--mu", type=float, default=0.25)
    d.add_argument("--csv")
    d.add_argument("-o", "--out")
    d.set_defaults(func=cmd_diagnose)

    v = sub.add_parser("validate", help="run the acceptance suite")
    v.add_argument("suite", choices=["fast", "full"])
    v.add_argument("--json", action="store_true")
    v.add_argument("--only", help="comma-separated criterion numbers")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:  # --help and argparse errors
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        cap = thread_cap()
        if cap is not None:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=cap):
                return args.func(args, cfg)
        return args.func(args, cfg)
    except TopologyError as e:
        print(f"topology error: {e}", file=sys.stderr)
        return EXIT_TOPOLOGY
    except (UsageError, DomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as e:
        print(f"warning: {e}", file=sys.stderr)
        return EXIT_GAP
    except CarpetError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
