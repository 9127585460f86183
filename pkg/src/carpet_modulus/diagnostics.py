"""Quantitative-geometry estimators: quasicircle constants, separation,
quasi-roundness, fatness, annulus widths and the subannulus selection
procedure.

All estimators are deterministic: sampling is stratified and any
randomness goes through ``numpy.random.default_rng(seed)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, DomainError
from .geometry import (EUCLIDEAN, FLAT, REFINE_TOL, Annulus, MetricKind, PolyCurve, as_point,
                       ball_area, dist, distance, distance_to_curve, set_diameter, set_distance)
from .regions import CStarSquare, Disk, PolygonRegion, as_region

#: default for the universal constant in the meeting-set counting bound
MEETING_CONSTANT = 16.0


# ---------------------------------------------------------------------------
# reports

@dataclass(frozen=True)
class QuasicircleReport:
    k: float
    witness: tuple
    sample_count: int


@dataclass(frozen=True)
class SeparationReport:
    s: float
    witness: tuple


@dataclass(frozen=True)
class RoundnessFit:
    center: complex
    r: float
    lam: float


@dataclass(frozen=True)
class FatnessReport:
    mu: float
    witness: tuple
    tolerance: float


@dataclass(frozen=True)
class SubannulusResult:
    annulus: Annulus
    removed: tuple
    steps: int
    # widths of the remaining sets relative to the output annulus
    remaining_widths: Mapping = field(default_factory=dict)

    def clauses(self, original: Annulus, N: int):
        """Truth values of the three guarantees (count, width, relative widths)."""
        w = self.annulus.width
        return (len(self.removed) <= N,
                w >= original.width ** (1.0 / 3 ** N),
                all(v <= w ** (1.0 / 3) for v in self.remaining_widths.values()))


# ---------------------------------------------------------------------------
# quasicircles

def _ring_points(curve: PolyCurve, samples: int):
    """Vertices plus 2^k equally spaced arclength points (nested in ``samples``)."""
    level = 1 << max(3, math.ceil(math.log2(max(samples, 8))))
    a, b = curve.segments()
    seg = np.abs(b - a)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    params = np.concatenate([cum[:-1], np.arange(level) * total / level])
    params = np.unique(np.round(params / total, 13)) * total
    idx = np.clip(np.searchsorted(cum, params, side="right") - 1, 0, len(seg) - 1)
    t = np.clip((params - cum[idx]) / seg[idx], 0.0, 1.0)
    return a[idx] + t * (b[idx] - a[idx]), level


def _arc_diameters(D: np.ndarray) -> np.ndarray:
    """``out[i, l]`` = diameter of the cyclic run of points i, i+1, ..., i+l."""
    n = len(D)
    out = np.zeros((n, n))
    cur = np.zeros(2 * n)
    for j in range(1, 2 * n - 1):
        lo = max(0, j - n + 1)
        ks = np.arange(lo, j)
        col = D[ks % n, j % n]
        g = np.maximum.accumulate(col[::-1])[::-1]
        cur[ks] = np.maximum(cur[ks], g)
        keep = ks < n
        out[ks[keep], j - ks[keep]] = cur[ks[keep]]
    return out


def quasicircle_constant(curve: PolyCurve, m=EUCLIDEAN, samples: int = 256) -> QuasicircleReport:
    """Smallest k with min(diam of the two subarcs) <= k d(x, y) over sampled pairs."""
    m = MetricKind.parse(m)
    if samples < 8:
        raise DomainError("need at least 8 samples")
    if not curve.closed or not curve.is_simple():
        raise DomainError("quasicircle constant needs a closed simple curve")
    P, level = _ring_points(curve, samples)
    n = len(P)
    D = dist(P[:, None], P[None, :], m)
    A = _arc_diameters(D)
    best, wit = 1.0, (complex(P[0]), complex(P[1 % n]))
    idx = np.arange(n)
    for ell in range(1, n):
        j = (idx + ell) % n
        ratio = np.minimum(A[idx, ell], A[j, n - ell]) / D[idx, j]
        k = int(np.argmax(ratio))
        if ratio[k] > best:
            best, wit = float(ratio[k]), (complex(P[k]), complex(P[j[k]]))
    return QuasicircleReport(best, wit, n)


# ---------------------------------------------------------------------------
# separation

def _bbox(c: PolyCurve):
    v = c.vertices
    return v.real.min(), v.real.max(), v.imag.min(), v.imag.max()


def family_separation(curves, m=EUCLIDEAN, tol: float = REFINE_TOL) -> SeparationReport:
    """Minimum pairwise relative distance of a family of disjoint curves."""
    m = MetricKind.parse(m)
    items = list(curves.items()) if isinstance(curves, Mapping) else list(enumerate(curves))
    if len(items) < 2:
        raise DomainError("separation needs at least two curves")
    labels = [k for k, _ in items]
    cs = [c for _, c in items]
    diams = np.array([set_diameter(c, m, tol) for c in cs])
    n = len(cs)
    I, J = np.triu_indices(n, 1)
    if m is EUCLIDEAN:
        bb = np.array([_bbox(c) for c in cs])
        gx = np.maximum(0, np.maximum(bb[I, 0] - bb[J, 1], bb[J, 0] - bb[I, 1]))
        gy = np.maximum(0, np.maximum(bb[I, 2] - bb[J, 3], bb[J, 2] - bb[I, 3]))
        lower = np.hypot(gx, gy) / np.minimum(diams[I], diams[J])
    else:
        lower = np.zeros(len(I))
    order = np.argsort(lower, kind="stable")
    best, wit = math.inf, None
    for p in order:
        if lower[p] >= best:
            break
        i, j = I[p], J[p]
        d = set_distance(cs[i], cs[j], m, tol)
        if d <= 0:
            raise DomainError(f"curves {labels[i]!r} and {labels[j]!r} intersect")
        val = d / min(diams[i], diams[j])
        if val < best:
            best, wit = val, (labels[i], labels[j])
    return SeparationReport(float(best), wit)


def cross_ratio_separation(E: np.ndarray, F: np.ndarray, m=EUCLIDEAN) -> float:
    """inf of <x1,x2,x3,x4> over x1, x4 in E and x2, x3 in F (finite samples)."""
    E = np.asarray(E, dtype=complex)
    F = np.asarray(F, dtype=complex)
    DEF = dist(E[:, None], F[None, :], m)
    DE = dist(E[:, None], E[None, :], m)
    DF = dist(F[:, None], F[None, :], m)
    best = math.inf
    for i1 in range(len(E)):
        # axes: x4 (E), x2 (F), x3 (F)
        d13 = DEF[i1][None, None, :]
        d24 = DEF[:, :, None]
        d14 = DE[i1][:, None, None]
        d23 = DF[None, :, :]
        den = np.minimum(d14, d23)
        num = np.minimum(d13, d24)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(den > 0, num / den, np.inf)
        best = min(best, float(r.min()))
    return best


# ---------------------------------------------------------------------------
# quasi-roundness

def quasi_round_fit(boundary: PolyCurve, m=EUCLIDEAN, tol: float = REFINE_TOL) -> RoundnessFit:
    """Center x0 minimizing (max boundary distance) / (min boundary distance)."""
    m = MetricKind.parse(m)
    if not boundary.closed or not boundary.is_simple():
        raise DomainError("quasi-roundness needs a Jordan boundary")
    if abs(boundary.signed_area()) <= 0:
        raise DomainError("degenerate boundary")
    pts = boundary.sample(m, tol) if m is not EUCLIDEAN else boundary.vertices

    def radii(c):
        z = complex(c[0], c[1])
        if not boundary.contains(np.array([z]))[0]:
            return None
        rmin = float(distance_to_curve(z, boundary, m, tol)[0])
        rmax = float(dist(pts, z, m).max())
        return rmin, rmax

    def objective(c):
        rr = radii(c)
        if rr is None or rr[0] <= 0:
            return 1e300
        return rr[1] / rr[0]

    c0 = boundary.centroid()
    scale = set_diameter(boundary, EUCLIDEAN)
    start = np.array([c0.real, c0.imag])
    res = minimize(objective, start, method="Nelder-Mead",
                   options={"xatol": 1e-10 * scale, "fatol": 1e-12, "maxiter": 2000,
                            "initial_simplex": [start, start + [0.05 * scale, 0], start + [0, 0.05 * scale]]})
    x = res.x if res.fun <= objective(start) else start
    rmin, rmax = radii(x)
    return RoundnessFit(complex(x[0], x[1]), rmax, rmax / rmin)


# ---------------------------------------------------------------------------
# fatness

def fatness_estimate(region, m=EUCLIDEAN, trials: int = 64, grid: int = 400, seed: int = 0) -> FatnessReport:
    """min over centers x in the region and radii r <= diam of mass(M cap B(x,r)) / mass(B(x,r)).

    Areas are computed by cell counting on a ``grid x grid`` quadrature of
    the region; radii smaller than 20 quadrature cells are skipped.
    """
    m = MetricKind.parse(m)
    reg = as_region(region)
    pts, w = reg.area_samples(m, grid)
    if len(pts) == 0 or w.sum() <= 0:
        raise DomainError("region has zero area")
    diam = reg.diameter(m)
    cell = math.sqrt(float(np.median(w)))
    rng = np.random.default_rng(seed)
    bnd = np.asarray(reg.boundary_points(), dtype=complex)
    nb = max(trials // 2, 1)
    centers = np.concatenate([bnd[np.linspace(0, len(bnd) - 1, nb).astype(int)],
                              pts[rng.choice(len(pts), size=max(trials - nb, 1), replace=False)]])
    radii = diam * 0.5 ** np.arange(0, 12)
    radii = radii[radii >= 20 * cell]
    if len(radii) == 0:
        radii = np.array([diam])
    best, wit = math.inf, None
    for x in centers:
        d = dist(pts, x, m)
        order = np.argsort(d)
        cum = np.concatenate([[0.0], np.cumsum(w[order])])
        k = np.searchsorted(d[order], radii, side="left")
        for r, mass in zip(radii, cum[k]):
            ratio = mass / ball_area(r, m)
            if ratio < best:
                best, wit = float(ratio), (complex(x), float(r))
    tol = float(4 * cell / radii.min())
    return FatnessReport(min(best, 1.0), wit, tol)


def ring_fat_bound(mu: float) -> int:
    """Smallest integer >= 4 / mu^2."""
    if not (0 < mu <= 1):
        raise DomainError(f"fatness constant must lie in (0, 1], got {mu}")
    return int(math.ceil(4.0 / (mu * mu) * (1 - 1e-14)))


# ---------------------------------------------------------------------------
# annuli

def radial_extent(K, center: complex, metric=EUCLIDEAN):
    """(inf, sup) of d(y, center) over a set K (disk, region or point array)."""
    if isinstance(K, Disk):
        return K.radial_extent(center, metric)
    if isinstance(K, (CStarSquare, PolygonRegion)):
        b = np.asarray(K.boundary_points(), dtype=complex)
        d = dist(b, center, metric)
        return (0.0 if K.contains(np.array([center]))[0] else float(d.min())), float(d.max())
    pts = np.atleast_1d(np.asarray(K.sample(metric) if isinstance(K, PolyCurve) else K, dtype=complex))
    d = dist(pts, center, metric)
    return float(d.min()), float(d.max())


def _relative_extent(A: Annulus, K):
    """(r_A(K), R_A(K)) or None when K misses the annulus."""
    if isinstance(K, (Disk, CStarSquare, PolygonRegion)):
        lo, hi = radial_extent(K, A.center, A.metric)
        if lo >= A.R or hi <= A.r:
            return None
        return max(lo, A.r), min(hi, A.R)
    pts = np.atleast_1d(np.asarray(K.sample(A.metric) if isinstance(K, PolyCurve) else K, dtype=complex))
    d = dist(pts, A.center, A.metric)
    d = d[(d > A.r) & (d < A.R)]
    if len(d) == 0:
        return None
    return float(d.min()), float(d.max())


def annulus_relative_width(A: Annulus, K) -> float:
    """log(R_A(K) / r_A(K)); zero when K misses A."""
    ext = _relative_extent(A, K)
    if ext is None:
        return 0.0
    return math.log(ext[1] / ext[0])


def meets_both_parts(A: Annulus, K) -> bool:
    """Does K meet the closed inner ball and the complement of the open outer ball?"""
    lo, hi = radial_extent(K, A.center, A.metric)
    return lo <= A.r and hi >= A.R


def select_subannulus(A: Annulus, K: Mapping, mu: float) -> SubannulusResult:
    """Shrink ``A`` around sets that are too wide relative to it.

    While some remaining set has relative width above ``w^(1/3)``, the
    annulus is replaced by the radial extent of that set inside it and the
    set's label is recorded.  Among qualifying sets the widest is taken
    (ties: smallest label in sort order).
    """
    if A.width < 1:
        raise DomainError(f"annulus width {A.width:.4g} < 1")
    N = ring_fat_bound(mu)
    labels = sorted(K, key=repr)
    cur, removed = A, []
    for _ in range(N + 1):
        w = cur.width
        widths = {i: annulus_relative_width(cur, K[i]) for i in labels if i not in removed}
        over = [(v, i) for i, v in widths.items() if v > w ** (1.0 / 3)]
        if not over:
            return SubannulusResult(cur, tuple(removed), len(removed), widths)
        v, i = max(over, key=lambda t: (t[0], [-labels.index(t[1])]))
        r_new, R_new = _relative_extent(cur, K[i])
        cur = cur.sub(r_new, R_new)
        removed.append(i)
    raise ConvergenceError(f"no stable subannulus after {N + 1} steps: more than N(mu)={N} "
                           "fat sets cross an annulus of width >= 1")


def count_large_meeting_sets(A, sets: Mapping, s: float, t: float, metric=EUCLIDEAN) -> int:
    """Number of sets that meet ``A`` and have diameter >= t diam(A).

    ``A`` and the members are :class:`Disk` instances or point arrays.
    """
    dA = A.diameter(metric) if isinstance(A, Disk) else set_diameter(np.asarray(A), metric)
    count = 0
    for K in sets.values():
        dK = K.diameter(metric) if isinstance(K, Disk) else set_diameter(np.asarray(K), metric)
        if dK < t * dA:
            continue
        if isinstance(A, Disk) and isinstance(K, Disk):
            hit = A.meets(K) if MetricKind.parse(metric) is EUCLIDEAN else bool(
                np.any(A.contains(K.boundary_points())) or np.any(K.contains(A.boundary_points())))
        elif isinstance(A, Disk):
            hit = bool(np.any(A.contains(np.asarray(K))))
        else:
            pts = np.asarray(A)
            hit = bool(np.any(K.contains(pts))) if isinstance(K, Disk) else bool(
                len(np.intersect1d(pts, np.asarray(K))) > 0)
        count += bool(hit)
    return count


def meeting_bound(s: float, t: float, C: float = MEETING_CONSTANT) -> float:
    """Upper bound max(1, C/(s t)^2) for :func:`count_large_meeting_sets`."""
    return max(1.0, C / (s * t) ** 2)


def decay_bound(t: float, mu: float, C: float) -> float:
    """C * log(t/4)^(-1/3^(N+1)) with N = ring_fat_bound(mu).

    For the default N this exponent is below double precision, so the value
    equals C to machine accuracy; it is non-increasing in t regardless.
    """
    if not t > 4 * math.e:
        raise DomainError("decay bound needs t > 4e")
    if not C > 0:
        raise DomainError("constant must be positive")
    N = ring_fat_bound(mu)
    return C * math.exp(-math.log(math.log(t / 4.0)) / float(3 ** (N + 1)))


def third_point_select(x, y, xs, ys, a: float, b: float, metric=EUCLIDEAN) -> int:
    """Index l in {1, 2, 3} with d(x, x_l) >= a/2 and d(y, y_l) >= b/2."""
    xs = [as_point(p) for p in xs]
    ys = [as_point(p) for p in ys]
    if len(xs) != 3 or len(ys) != 3:
        raise DomainError("need two triples")
    for pts, sep in ((xs, a), (ys, b)):
        for i in range(3):
            for j in range(i + 1, 3):
                if distance(pts[i], pts[j], metric) < sep:
                    raise DomainError("triple points are closer than the stated separation")
    for l in range(3):
        if distance(x, xs[l], metric) >= a / 2 and distance(y, ys[l], metric) >= b / 2:
            return l + 1
    raise DomainError("no admissible index (separation hypothesis violated)")
