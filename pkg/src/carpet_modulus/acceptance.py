"""Acceptance harness: twelve numbered checks with fixed seeds and budgets.

``run_suite("full")`` uses the stated sample sizes; ``"fast"`` shrinks the
sample counts, drops the finest annulus grid and skips the carpet-depth
trend, and marks every shrunk check as reduced in its record.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .carpets import (CylinderDomain, Scene, Boundary, carpet_to_scene, cylinder_from_height, llc_route,
                      standard_carpet)
from .diagnostics import cross_ratio_separation, fatness_estimate, ring_fat_bound, select_subannulus
from .errors import ConvergenceError, DomainError, ResourceError
from .geometry import (CHORDAL, EUCLIDEAN, FLAT, TWO_PI, Annulus, cross_ratios, dist, eta_lower, eta_upper)
from .grid import EXTERIOR, INTERIOR, FamilySpec, Grid, discretize, fill_residual, left_right
from .modulus import carpet_modulus, classical_modulus, modulus, transboundary_modulus
from .oracle import brute_force_modulus
from .regions import CStarSquare, Disk
from .uniformizer import Layout, uniformize

SUITES = ("fast", "full")
CYLINDER_SQUARES = [(0.4, 0.5, 0.0), (0.6, 0.5, 3.14)]   # (side, u, theta)
ROUND_TRIP_SQUARES = [(0.4, 0.3, 0.5), (0.6, 0.55, 3.0), (0.3, 0.7, 5.0)]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    elapsed: float
    budget: float | None = None
    reduced: bool = False
    measured: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        b = f" / {self.budget:.0f}s" if self.budget else ""
        red = " [reduced]" if self.reduced else ""
        return f"[{tag}] {self.number:2d} {self.name}: {self.detail} ({self.elapsed:.1f}s{b}){red}"

    def to_json(self) -> dict:
        return asdict(self)


def _rel(a, b):
    return abs(a - b) / abs(b)


def _timed(budget):
    t0 = time.perf_counter()
    return lambda: (time.perf_counter() - t0, budget)


# ---------------------------------------------------------------------------
# 1-4: exact formulas

def c01_annulus(full: bool) -> CriterionResult:
    t0 = time.perf_counter()
    scene = CylinderDomain(1.0, math.e).to_scene()
    cases = [(1 / 64, 0.03, 30.0)] + ([(1 / 128, 0.015, 180.0)] if full else [])
    ok, parts, meas = True, [], {}
    for h, tol, budget in cases:
        t = time.perf_counter()
        r = classical_modulus(discretize(scene, h), FamilySpec(0, 1))
        el = time.perf_counter() - t
        e = _rel(r.value, TWO_PI)
        ok &= e <= tol and el < budget
        meas[f"h=1/{round(1 / h)}"] = {"value": r.value, "rel_err": e, "seconds": el}
        parts.append(f"h=1/{round(1 / h)}: {r.value:.5f} (err {e:.2%} <= {tol:.1%}, {el:.1f}s < {budget:.0f}s)")
    return CriterionResult(1, "annulus modulus", ok, "; ".join(parts), time.perf_counter() - t0, None,
                           not full, meas)


def c02_rectangle(full: bool) -> CriterionResult:
    t0 = time.perf_counter()
    g = discretize(Scene(Boundary(None, "square", (0.0, 0.0, 1.0)), (), EUCLIDEAN), 1 / 64)
    r = classical_modulus(g, left_right(g))
    el = time.perf_counter() - t0
    e = _rel(r.value, 1.0)
    return CriterionResult(2, "rectangle modulus", e <= 0.03 and el < 30, f"{r.value:.6f} (err {e:.2%} <= 3%)",
                           el, 30.0, False, {"value": r.value})


def c03_transboundary(full: bool) -> CriterionResult:
    t0 = time.perf_counter()
    d = cylinder_from_height(1.0, CYLINDER_SQUARES)
    r = transboundary_modulus(discretize(d.to_scene(), 1 / 64), FamilySpec(0, 1))
    el = time.perf_counter() - t0
    e = _rel(r.value, TWO_PI / d.h_A)
    werr = {k: _rel(r.weights[k], q.side / d.h_A) for k, q in d.squares.items()}
    ok = e <= 0.05 and max(werr.values()) <= 0.10 and el < 120
    w = ", ".join(f"rho{k}={r.weights[k]:.4f}" for k in sorted(werr))
    return CriterionResult(3, "transboundary extremal formula", ok,
                           f"M={r.value:.5f} (err {e:.2%} <= 5%), {w} (worst err {max(werr.values()):.2%} <= 10%)",
                           el, 120.0, False, {"value": r.value, "weights": r.weights})


def c04_carpet(full: bool) -> CriterionResult:
    t0 = time.perf_counter()
    d = cylinder_from_height(1.0, CYLINDER_SQUARES)
    g = fill_residual(discretize(d.to_scene(), 1 / 64))
    r = carpet_modulus(g, FamilySpec(0, 1, "open"))
    el = time.perf_counter() - t0
    e = _rel(r.value, TWO_PI / d.h_A)
    ok = e <= 0.10 and r.weights[0] == 0.0 and r.weights[1] == 0.0 and el < 120
    return CriterionResult(4, "carpet modulus", ok,
                           f"M={r.value:.5f} (err {e:.2%} <= 10%), rho0={r.weights[0]!r}, rho1={r.weights[1]!r}",
                           el, 120.0, False, {"value": r.value, "rho0": r.weights[0], "rho1": r.weights[1]})


# ---------------------------------------------------------------------------
# 5: oracle equivalence

def random_enumerable_grid(rng: np.random.Generator, mode: str):
    """Small strip grid with a few rectangular holes; E/F are the side columns."""
    ny, nx = int(rng.integers(3, 6)), int(rng.integers(3, 6))
    lab = np.full((ny, nx + 2), INTERIOR, dtype=np.int64)
    lab[:, 0] = lab[:, -1] = EXTERIOR
    nxt = 0
    for _ in range(int(rng.integers(0, 3))):
        w, hh = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        j, i = int(rng.integers(0, ny - hh + 1)), int(rng.integers(1, nx - w + 2))
        if (lab[j:j + hh, i:i + w] == INTERIOR).all():
            lab[j:j + hh, i:i + w] = nxt
            nxt += 1
    g = Grid(lab, 1 / nx, 1 / nx, 0.0, 0.0, EUCLIDEAN)
    if mode == "carpet":
        g = fill_residual(g, int(rng.integers(1, 3)))
    E = np.zeros(lab.shape, bool)
    E[:, 0] = True
    F = np.zeros(lab.shape, bool)
    F[:, -1] = True
    return g, FamilySpec(E, F, str(rng.choice(["open", "closed"])))


def c05_oracle(full: bool) -> CriterionResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    n = 50 if full else 10
    worst, bad = 0.0, []
    for k in range(n):
        for mode in ("classical", "transboundary", "carpet"):
            while True:
                g, fam = random_enumerable_grid(rng, mode)
                try:
                    o = brute_force_modulus(g, fam, mode)
                    break
                except ResourceError:
                    continue
            m = modulus(g, fam, mode, eps=1e-10)
            diff = 0.0 if (math.isinf(o.value) and math.isinf(m.value)) else abs(o.value - m.value)
            worst = max(worst, diff)
            if diff > 1e-6:
                bad.append((k, mode, o.value, m.value))
    el = time.perf_counter() - t0
    return CriterionResult(5, "oracle equivalence", not bad and el < 300,
                           f"{n} scenes x 3 modes, worst |diff| {worst:.2e} <= 1e-6, {len(bad)} mismatches",
                           el, 300.0, not full, {"worst": worst, "mismatches": bad[:5]})


# ---------------------------------------------------------------------------
# 6-10: metric properties

def random_points(rng, n, metric):
    if metric is FLAT:
        return np.exp(rng.uniform(-3, 3, n) + 1j * rng.uniform(-math.pi, math.pi, n))
    r = np.exp(rng.uniform(-4, 4, n)) if metric is CHORDAL else rng.uniform(0, 10, n)
    return r * np.exp(1j * rng.uniform(0, TWO_PI, n))


def c06_cross_ratio(full: bool) -> CriterionResult:
    t0 = time.perf_counter()
    n = 100_000 if full else 10_000
    rng = np.random.default_rng(6)
    out, viol = {}, 0
    for m in (CHORDAL, EUCLIDEAN, FLAT):
        X = random_points(rng, 4 * n, m).reshape(n, 4)
        cr, mcr = cross_ratios(X, m)
        good = np.isfinite(cr) & (cr > 0)
        v = int(np.sum(good & ((mcr < eta_lower(cr)) | (mcr > eta_upper(cr)))))
        out[m.value] = {"tuples": int(good.sum()), "violations": v}
        viol += v
    el = time.perf_counter() - t0
    desc = ", ".join(f"{k}: {v['violations']}/{v['tuples']}" for k, v in out.items())
    return CriterionResult(6, "cross-ratio sandwich", viol == 0, f"violations {desc}", el, None, not full, out)


def random_continuum(rng, center, scale, n_vertices=5, samples=40):
    """Dense arclength samples of a random polyline."""
    v = center + scale * (rng.normal(size=n_vertices) + 1j * rng.normal(size=n_vertices))
    seg = np.abs(np.diff(v))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = np.linspace(0, cum[-1], samples)
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    t = (s - cum[idx]) / np.where(seg[idx] > 0, seg[idx], 1.0)
    return v[idx] + t * (v[idx + 1] - v[idx])


def c07_separation(full: bool) -> CriterionResult:
    t0 = time.perf_counter()
    n = 1000 if full else 100
    rng = np.random.default_rng(7)
    worst_lo = worst_hi = -math.inf
    bad = 0
    for k in range(n):
        m = (EUCLIDEAN, CHORDAL)[k % 2]
        while True:
            E = random_continuum(rng, 0, rng.uniform(0.1, 1))
            F = random_continuum(rng, rng.uniform(0.5, 5) * np.exp(1j * rng.uniform(0, TWO_PI)),
                                 rng.uniform(0.1, 1))
            dEF = float(dist(E[:, None], F[None, :], m).min())
            if dEF > 1e-6:
                break
        diam = min(float(dist(E[:, None], E[None, :], m).max()), float(dist(F[:, None], F[None, :], m).max()))
        delta = dEF / diam
        D = cross_ratio_separation(E, F, m)
        lo, hi = (delta - D) / delta, (D - 2 * delta) / delta
        worst_lo, worst_hi = max(worst_lo, lo), max(worst_hi, hi)
        bad += lo > 1e-3 or hi > 1e-3
    el = time.perf_counter() - t0
    return CriterionResult(7, "separation sandwich", bad == 0,
                           f"{n} pairs, {bad} violations; max (Delta-D)/Delta={worst_lo:.2e}, "
                           f"max (D-2Delta)/Delta={worst_hi:.2e} (tol 1e-3)",
                           el, None, not full, {"violations": bad})


def random_fat_disk_configuration(rng):
    """Chordal annulus around 0 with width in [1, 20] plus disjoint Euclidean disks."""
    w = rng.uniform(1, 20)
    R = rng.uniform(0.05, 0.9)
    A = Annulus(0j, R * math.exp(-w), R, CHORDAL)
    disks = {}
    for label in range(int(rng.integers(1, 12))):
        for _ in range(50):
            rad = math.exp(rng.uniform(math.log(A.r / 4), math.log(A.R)))  # log-uniform distance scale
            c = rad * np.exp(1j * rng.uniform(0, TWO_PI))
            d = Disk(c, rad * rng.uniform(0.05, 0.9))
            if all(abs(d.center - e.center) > d.radius + e.radius for e in disks.values()):
                disks[label] = d
                break
    return A, disks


def c08_subannulus(full: bool) -> CriterionResult:
    t0 = time.perf_counter()
    n = 100 if full else 20
    rng = np.random.default_rng(8)
    mu = 0.25
    N = ring_fat_bound(mu)
    fails, removed_max = [], 0
    for k in range(n):
        A, disks = random_fat_disk_configuration(rng)
        try:
            res = select_subannulus(A, disks, mu)
        except ConvergenceError as e:
            fails.append((k, str(e)))
            continue
        removed_max = max(removed_max, len(res.removed))
        c = res.clauses(A, N)
        if not all(c):
            fails.append((k, c))
    el = time.perf_counter() - t0
    return CriterionResult(8, "subannulus algorithm", not fails,
                           f"{n} configurations, N={N}, max |I0|={removed_max}, {len(fails)} failures",
                           el, None, not full, {"N": N, "failures": fails[:5]})


def c09_fatness(full: bool) -> CriterionResult:
    t0 = time.perf_counter()
    trials = 64 if full else 24
    disks = [Disk(0.3 + 0.2j, 0.5), Disk(2.0, 1.5), Disk(-0.1j, 0.05)]
    squares = [CStarSquare(0.5, 1.0, 0.5), CStarSquare(-0.3, 4.0, 2.0), CStarSquare(0.0, 0.0, 0.1)]
    dm = [fatness_estimate(d, CHORDAL, trials=trials).mu for d in disks]
    sm = [fatness_estimate(q, FLAT, trials=trials).mu for q in squares]
    ok = min(dm) >= 0.25 - 0.02 and min(sm) >= 1 / 32 - 0.005
    el = time.perf_counter() - t0
    return CriterionResult(9, "fatness constants", ok,
                           f"disk min mu={min(dm):.4f} >= 0.23, C*-square min mu={min(sm):.4f} >= {1 / 32 - 0.005:.4f}",
                           el, None, not full, {"disks": dm, "squares": sm})


def random_square_domain(rng, n_squares=5, h_A=2.0):
    squares = []
    while len(squares) < n_squares:
        side = rng.uniform(0.1, 0.6)
        u = rng.uniform(side / 2 + 0.02, h_A - side / 2 - 0.02)
        t = rng.uniform(0, TWO_PI)
        try:
            d = cylinder_from_height(h_A, squares + [(side, u, t)])
        except DomainError:
            continue
        squares.append((side, u, t))
    return d


def c10_llc(full: bool) -> CriterionResult:
    t0 = time.perf_counter()
    pairs = 1000 if full else 200
    rng = np.random.default_rng(10)
    worst, count = 0.0, 0
    while count < pairs:
        d = random_square_domain(rng)
        for _ in range(100):
            pts = []
            while len(pts) < 2:
                z = np.exp(rng.uniform(0, d.h_A) + 1j * rng.uniform(0, TWO_PI))
                if d.point_in_T(np.array([z]))[0]:
                    pts.append(z)
            worst = max(worst, llc_route(d, *pts).factor)
            count += 1
    el = time.perf_counter() - t0
    return CriterionResult(10, "LLC router factor", worst <= 2 + 1e-3,
                           f"{count} pairs, max factor {worst:.5f} <= 2.001", el, None, not full, {"max_factor": worst})


# ---------------------------------------------------------------------------
# 11-12: uniformizer

def c11_round_trip(full: bool) -> CriterionResult:
    t0 = time.perf_counter()
    d = cylinder_from_height(1.0, ROUND_TRIP_SQUARES)
    ref = Layout.from_cylinder(d)
    layouts = [uniformize(d.to_scene(), h=1 / 64, seed=s) for s in (1, 2)]
    herr = [_rel(L.h_A, d.h_A) for L in layouts]
    lerr = max(_rel(L.squares[k].side, q.side) for L in layouts for k, q in ref.squares.items())
    seed_gap = abs(layouts[0].h_A - layouts[1].h_A) / d.h_A
    el = time.perf_counter() - t0
    ok = max(herr) <= 0.05 and lerr <= 0.10 and seed_gap <= 0.05 and el < 300
    return CriterionResult(11, "uniformizer round trip", ok,
                           f"h_A err {max(herr):.2%} <= 5%, worst side err {lerr:.2%} <= 10%, "
                           f"seed spread {seed_gap:.2%} <= 5%", el, 300.0, False,
                           {"h_A": [L.h_A for L in layouts], "side_err": lerr, "seed_gap": seed_gap})


def c12_carpet_trend(full: bool) -> CriterionResult:
    t0 = time.perf_counter()
    fr = []
    for depth in (1, 2, 3):
        L = uniformize(carpet_to_scene(standard_carpet(depth)), h=1 / 81)
        fr.append(L.residual_fraction)
    el = time.perf_counter() - t0
    ok = all(b < a for a, b in zip(fr, fr[1:])) and el < 600
    return CriterionResult(12, "area-identity trend", ok,
                           "residual fraction " + " > ".join(f"{v:.4f}" for v in fr) + " (strictly decreasing)",
                           el, 600.0, False, {"fractions": fr})


CRITERIA = {1: c01_annulus, 2: c02_rectangle, 3: c03_transboundary, 4: c04_carpet, 5: c05_oracle,
            6: c06_cross_ratio, 7: c07_separation, 8: c08_subannulus, 9: c09_fatness, 10: c10_llc,
            11: c11_round_trip, 12: c12_carpet_trend}
FAST_SKIP = {12}


def run_criterion(number: int, suite: str = "full") -> CriterionResult:
    if suite not in SUITES:
        raise DomainError(f"unknown suite {suite!r}")
    try:
        return CRITERIA[number](suite == "full")
    except Exception as e:  # an exception is a failed criterion, reported as such
        return CriterionResult(number, CRITERIA[number].__name__, False, f"error: {type(e).__name__}: {e}", 0.0)


def run_suite(suite: str = "full", only=None, echo=None) -> list:
    if suite not in SUITES:
        raise DomainError(f"unknown suite {suite!r}")
    out = []
    for n in sorted(CRITERIA):
        if only is not None and n not in only:
            continue
        if suite == "fast" and n in FAST_SKIP:
            continue
        r = run_criterion(n, suite)
        if echo:
            echo(r.line())
        out.append(r)
    return out
