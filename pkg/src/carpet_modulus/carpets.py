"""Concrete domains: hole scenes, the standard square carpet, cylinders
with C*-squares, the factor-2 router and the LLC checker.

Label convention used throughout: the two distinguished boundary
components are 0 (inner) and 1 (outer); every other hole gets a label
>= 2.  In a standard-carpet scene the first removed (middle) square is 0
and the complement of the unit square is 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .diagnostics import family_separation, quasicircle_constant
from .errors import DomainError, ResourceError
from .geometry import (CHORDAL, EUCLIDEAN, FLAT, TWO_PI, MetricKind, PolyCurve, circle, dist, lift,
                       rectangle, to_sphere, wrap_angle)
from .regions import CStarSquare, Disk, PolygonRegion

MAX_DEPTH = 6
KINDS = ("polygon", "square", "rect", "disk", "circle", "cstar-square")


# ---------------------------------------------------------------------------
# scenes

@dataclass(frozen=True)
class Boundary:
    """A labeled boundary component.

    ``kind`` selects an analytic description used for exact containment:

    * ``square`` / ``rect``: params (x0, y0, w[, h]), axis-aligned
    * ``disk`` / ``circle``: params (cx, cy, radius)
    * ``cstar-square``: params (u, theta, side) in log-polar coordinates
    * ``polygon``: params is the flat vertex list (x0, y0, x1, y1, ...)

    The region bounded by the curve (the closed hole) is what ``contains``
    tests.  ``label`` may be ``None`` only for an outer boundary whose
    complement is plain exterior.
    """

    label: int | None
    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown boundary kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.label is not None:
            if int(self.label) != self.label or self.label < 0:
                raise DomainError("labels must be nonnegative integers")
            object.__setattr__(self, "label", int(self.label))
        p = self.params
        if self.kind == "square" and (len(p) != 3 or p[2] <= 0):
            raise DomainError("square needs (x0, y0, side > 0)")
        if self.kind == "rect" and (len(p) != 4 or p[2] <= 0 or p[3] <= 0):
            raise DomainError("rect needs (x0, y0, w > 0, h > 0)")
        if self.kind in ("disk", "circle") and (len(p) != 3 or p[2] <= 0):
            raise DomainError("disk needs (cx, cy, radius > 0)")
        if self.kind == "cstar-square":
            CStarSquare(*p)
        if self.kind == "polygon" and (len(p) % 2 or len(p) < 6):
            raise DomainError("polygon needs >= 3 vertices")

    @classmethod
    def from_curve(cls, label, curve: PolyCurve) -> "Boundary":
        v = curve.oriented(True).vertices
        return cls(label, "polygon", tuple(np.column_stack([v.real, v.imag]).ravel()))

    @cached_property
    def curve(self) -> PolyCurve:
        p = self.params
        if self.kind == "square":
            return rectangle(p[0], p[1], p[2], p[2])
        if self.kind == "rect":
            return rectangle(*p)
        if self.kind in ("disk", "circle"):
            return circle(complex(p[0], p[1]), p[2], 512)
        if self.kind == "cstar-square":
            return CStarSquare(*p).boundary(64)
        xy = np.asarray(p).reshape(-1, 2)
        return PolyCurve(xy[:, 0] + 1j * xy[:, 1], closed=True).oriented(True)

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        p = self.params
        if self.kind in ("square", "rect"):
            w = p[2]
            h = p[2] if self.kind == "square" else p[3]
            return (z.real >= p[0]) & (z.real <= p[0] + w) & (z.imag >= p[1]) & (z.imag <= p[1] + h)
        if self.kind in ("disk", "circle"):
            return np.abs(z - complex(p[0], p[1])) <= p[2]
        if self.kind == "cstar-square":
            return CStarSquare(*p).contains(z)
        return self.curve.contains(z)

    def contains_lifted(self, s, t) -> np.ndarray:
        """Containment for points given in log-polar coordinates (s, t)."""
        if self.kind == "cstar-square":
            return CStarSquare(*self.params).contains_lifted(s, t)
        if self.kind in ("disk", "circle") and self.params[0] == 0 and self.params[1] == 0:
            return np.asarray(s) <= math.log(self.params[2])
        return self.contains(np.exp(np.asarray(s) + 1j * np.asarray(t)))

    def shapely(self):
        from shapely.geometry import Polygon

        v = self.curve.vertices
        return Polygon(np.column_stack([v.real, v.imag]))

    @property
    def region(self):
        """The closed hole as a region object (exact for disks and C*-squares)."""
        if self.kind in ("disk", "circle"):
            return Disk(complex(self.params[0], self.params[1]), self.params[2])
        if self.kind == "cstar-square":
            return CStarSquare(*self.params)
        return PolygonRegion(self.curve)

    def to_json(self) -> dict:
        out = {"label": self.label}
        if self.kind == "polygon":
            xy = np.asarray(self.params).reshape(-1, 2)
            out["vertices"] = xy.tolist()
        else:
            out["kind"] = self.kind
            out["params"] = list(self.params)
        return out


@dataclass(frozen=True)
class Scene:
    """Outer boundary plus labeled holes.

    ``outer=None`` means the whole sphere.  When ``outer.label`` is an
    integer the complement of the outer region is itself a labeled hole.
    """

    outer: Boundary | None
    holes: tuple
    metric: MetricKind = EUCLIDEAN

    def __post_init__(self):
        object.__setattr__(self, "holes", tuple(self.holes))
        object.__setattr__(self, "metric", MetricKind.parse(self.metric))
        labels = self.labels
        if len(set(labels)) != len(labels):
            raise DomainError("hole labels must be unique")
        if any(h.label is None for h in self.holes):
            raise DomainError("every hole needs a label")

    @property
    def labels(self) -> list:
        out = [h.label for h in self.holes]
        if self.outer is not None and self.outer.label is not None:
            out.append(self.outer.label)
        return out

    @property
    def hole_labels(self) -> list:
        return [h.label for h in self.holes]

    @property
    def outer_label(self):
        return None if self.outer is None else self.outer.label

    def hole(self, label) -> Boundary:
        for h in self.holes:
            if h.label == label:
                return h
        raise DomainError(f"no hole with label {label}")

    def curves(self) -> dict:
        """Peripheral curves keyed by label (outer under its label or 'outer')."""
        out = {h.label: h.curve for h in self.holes}
        if self.outer is not None:
            out[self.outer.label if self.outer.label is not None else "outer"] = self.outer.curve
        return out

    def validate(self) -> "Scene":
        """Check Jordan curves, pairwise disjoint holes, holes inside outer."""
        from shapely.strtree import STRtree

        for b in ([self.outer] if self.outer else []) + list(self.holes):
            if b.kind == "polygon" and not b.curve.is_simple():
                raise DomainError(f"boundary {b.label} is not a Jordan curve")
        polys = [h.shapely() for h in self.holes]
        tree = STRtree(polys)
        for i, pi in enumerate(polys):
            for j in tree.query(pi, predicate="intersects"):
                if j > i:
                    raise DomainError(f"holes {self.holes[i].label} and {self.holes[j].label} intersect")
        if self.outer is not None:
            outer = self.outer.shapely()
            for h, p in zip(self.holes, polys):
                if not outer.contains(p) or p.intersects(outer.exterior):
                    raise DomainError(f"hole {h.label} is not inside the outer boundary")
        return self

    def classify(self, z) -> np.ndarray:
        """Per-point label; -1 interior, -2 exterior (outside an unlabeled outer)."""
        from .grid import EXTERIOR, INTERIOR

        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, INTERIOR, dtype=np.int64)
        if self.outer is not None:
            outside = ~self.outer.contains(z)
            out[outside] = EXTERIOR if self.outer.label is None else self.outer.label
        for h in self.holes:
            out[(out == INTERIOR) & h.contains(z)] = h.label
        return out

    def classify_lifted(self, s, t) -> np.ndarray:
        from .grid import EXTERIOR, INTERIOR

        s, t = np.asarray(s, float), np.asarray(t, float)
        out = np.full(s.shape, INTERIOR, dtype=np.int64)
        if self.outer is not None:
            outside = ~self.outer.contains_lifted(s, t)
            out[outside] = EXTERIOR if self.outer.label is None else self.outer.label
        for h in self.holes:
            out[(out == INTERIOR) & h.contains_lifted(s, t)] = h.label
        return out

    def relabeled(self, mapping: Mapping) -> "Scene":
        def re(b):
            if b is None or b.label is None:
                return b
            return Boundary(mapping.get(b.label, b.label), b.kind, b.params)
        return Scene(re(self.outer), tuple(re(h) for h in self.holes), self.metric)

    def rotated(self, angle: float) -> "Scene":
        """Rotate a scene about 0 (cylindrical scenes: shifts every angle)."""
        w = complex(math.cos(angle), math.sin(angle))

        def rot(b):
            if b is None:
                return None
            p = b.params
            if b.kind in ("disk", "circle"):
                c = w * complex(p[0], p[1])
                return Boundary(b.label, b.kind, (c.real, c.imag, p[2]))
            if b.kind == "cstar-square":
                return Boundary(b.label, b.kind, (p[0], p[1] + angle, p[2]))
            v = w * b.curve.vertices
            return Boundary(b.label, "polygon", tuple(np.column_stack([v.real, v.imag]).ravel()))
        return Scene(rot(self.outer), tuple(rot(h) for h in self.holes), self.metric)


# ---------------------------------------------------------------------------
# standard carpet

@dataclass(frozen=True)
class SquareCarpet:
    """Removed squares stored exactly as (i, j, level): corner (i, j)/3^level, side 3^-level."""

    depth: int
    squares: tuple

    def corner(self, k: int):
        i, j, lev = self.squares[k]
        return Fraction(i, 3 ** lev), Fraction(j, 3 ** lev)

    def side(self, k: int) -> Fraction:
        return Fraction(1, 3 ** self.squares[k][2])

    def removed_area(self) -> Fraction:
        return sum((self.side(k) ** 2 for k in range(len(self.squares))), Fraction(0))

    def square_tuples(self):
        """(x0, y0, side) floats in construction order."""
        return [(i / 3 ** lev, j / 3 ** lev, 1 / 3 ** lev) for i, j, lev in self.squares]


def standard_carpet(depth: int) -> SquareCarpet:
    """Depth-n approximation of the standard carpet.

    Level j removes the middle ninth of each of the 8^(j-1) squares kept
    at level j-1; squares are listed level by level, row-major inside a level.
    """
    if int(depth) != depth or depth < 0:
        raise DomainError("depth must be a nonnegative integer")
    if depth > MAX_DEPTH:
        raise ResourceError(f"depth {depth} exceeds the cap {MAX_DEPTH}")
    kept = [(0, 0)]  # lower-left corners at the current level, in units of 3^-level
    removed = []
    for lev in range(1, depth + 1):
        nxt = []
        for (i, j) in kept:
            for b in range(3):
                for a in range(3):
                    if a == 1 and b == 1:
                        removed.append((3 * i + 1, 3 * j + 1, lev))
                    else:
                        nxt.append((3 * i + a, 3 * j + b))
        kept = sorted(nxt, key=lambda c: (c[1], c[0]))
        lev_sq = sorted([s for s in removed if s[2] == lev], key=lambda s: (s[1], s[0]))
        removed = [s for s in removed if s[2] != lev] + lev_sq
    return SquareCarpet(depth, tuple(removed))


def carpet_labels(n_removed: int) -> list:
    """Labels of removed squares in construction order: 0, 2, 3, ..."""
    return [0] + list(range(2, n_removed + 1)) if n_removed else []


def carpet_to_scene(c: SquareCarpet, outer_label: int | None = 1) -> Scene:
    """Scene with the unit square as outer boundary (label 1) and removed squares as holes."""
    holes = tuple(Boundary(lab, "square", sq) for lab, sq in zip(carpet_labels(len(c.squares)), c.square_tuples()))
    return Scene(Boundary(outer_label, "square", (0.0, 0.0, 1.0)), holes, EUCLIDEAN)


@dataclass(frozen=True)
class PeripheralStats:
    k: float
    k_per_curve: dict
    s: float | None
    witness: tuple | None


def peripheral_stats(c: SquareCarpet, samples: int = 256) -> PeripheralStats:
    """Quasicircle constants of all peripheral squares and their separation."""
    scene = carpet_to_scene(c)
    curves = scene.curves()
    ks = {lab: quasicircle_constant(cv, EUCLIDEAN, samples).k for lab, cv in curves.items()}
    if len(curves) < 2:
        return PeripheralStats(max(ks.values()), ks, None, None)
    sep = family_separation(curves, EUCLIDEAN)
    return PeripheralStats(max(ks.values()), ks, sep.s, sep.witness)


# ---------------------------------------------------------------------------
# cylinders with C*-squares

def _overlap_1d(a, wa, b, wb):
    return abs(a - b) <= (wa + wb) / 2


@dataclass(frozen=True)
class CylinderDomain:
    """Annulus r < |z| < R (centered at 0) with labeled disjoint C*-squares."""

    r: float
    R: float
    squares: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if not (0 < self.r < self.R):
            raise DomainError("cylinder needs 0 < r < R")
        sq = {int(k): (v if isinstance(v, CStarSquare) else CStarSquare(*v)) for k, v in dict(self.squares).items()}
        if any(k < 2 for k in sq):
            raise DomainError("square labels start at 2 (0 and 1 are the boundary circles)")
        object.__setattr__(self, "squares", dict(sorted(sq.items())))
        lo, hi = math.log(self.r), math.log(self.R)
        items = list(self.squares.items())
        for k, q in items:
            if not (lo < q.u - q.side / 2 and q.u + q.side / 2 < hi):
                raise DomainError(f"square {k} is not inside the annulus")
        for a in range(len(items)):
            ka, qa = items[a]
            for b in range(a + 1, len(items)):
                kb, qb = items[b]
                if _overlap_1d(qa.u, qa.side, qb.u, qb.side) and \
                        abs(wrap_angle(qa.theta - qb.theta)) <= (qa.side + qb.side) / 2:
                    raise DomainError(f"squares {ka} and {kb} overlap")

    @property
    def h_A(self) -> float:
        return math.log(self.R / self.r)

    def area_sum(self) -> float:
        return sum(q.side ** 2 for q in self.squares.values())

    def to_scene(self) -> Scene:
        holes = [Boundary(0, "disk", (0.0, 0.0, self.r))]
        holes += [Boundary(k, "cstar-square", (q.u, q.theta, q.side)) for k, q in self.squares.items()]
        return Scene(Boundary(1, "disk", (0.0, 0.0, self.R)), tuple(holes), FLAT)

    def point_in_T(self, z) -> np.ndarray:
        """Membership in the closed annulus minus open squares."""
        s, t = lift(np.asarray(z, dtype=complex))
        ok = (s >= math.log(self.r) - 1e-12) & (s <= math.log(self.R) + 1e-12)
        for q in self.squares.values():
            h = q.side / 2
            ok &= ~((np.abs(s - q.u) < h) & (np.abs(wrap_angle(t - q.theta)) < h))
        return ok


def cylinder_domain(r: float, R: float, squares: Iterable = ()) -> CylinderDomain:
    """Build a cylinder domain; each square is ``(center, side)`` with a complex
    center, or a ``CStarSquare``.  Labels are assigned 2, 3, ... in order."""
    out = {}
    for k, s in enumerate(squares):
        if isinstance(s, CStarSquare):
            out[k + 2] = s
            continue
        center, side = s
        if center == 0:
            raise DomainError("square center must be nonzero")
        u, t = lift(complex(center))
        out[k + 2] = CStarSquare(float(u), float(t), float(side))
    return CylinderDomain(r, R, out)


def cylinder_from_height(h_A: float, squares: Sequence = ()) -> CylinderDomain:
    """Cylinder 1 < |z| < e^h_A; squares as (side, u, theta) with u the log-radius."""
    return CylinderDomain(1.0, math.exp(h_A), {k + 2: CStarSquare(u, t, s) for k, (s, u, t) in enumerate(squares)})


# ---------------------------------------------------------------------------
# factor-2 router

@dataclass(frozen=True)
class LLCRoute:
    lifted: np.ndarray  # vertices in (log-radius + i*angle), angle unwrapped
    distance: float

    @property
    def length(self) -> float:
        return float(np.sum(np.abs(np.diff(self.lifted))))

    @property
    def factor(self) -> float:
        return self.length / self.distance if self.distance > 0 else 1.0

    @property
    def curve(self) -> PolyCurve:
        z = np.exp(self.lifted)
        keep = np.concatenate([[True], np.abs(np.diff(z)) > 0])
        return PolyCurve(z[keep], closed=False)

    def dense_curve(self, step: float = 1e-3) -> PolyCurve:
        """Curve in C with lifted segments subdivided to ``step``."""
        pts = [self.lifted[:1]]
        for a, b in zip(self.lifted[:-1], self.lifted[1:]):
            n = max(1, int(math.ceil(abs(b - a) / step)))
            pts.append(a + (b - a) * np.arange(1, n + 1) / n)
        z = np.exp(np.concatenate(pts))
        keep = np.concatenate([[True], np.abs(np.diff(z)) > 0])
        return PolyCurve(z[keep], closed=False)


def _clip(p, q, lo, hi):
    """Liang-Barsky: parameter interval of segment p->q inside box [lo, hi] (complex corners)."""
    d = q - p
    t0, t1 = 0.0, 1.0
    for pc, dc, a, b in ((p.real, d.real, lo.real, hi.real), (p.imag, d.imag, lo.imag, hi.imag)):
        if dc == 0:
            if pc < a or pc > b:
                return None
            continue
        ta, tb = (a - pc) / dc, (b - pc) / dc
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 > t1:
            return None
    return t0, t1


def _boundary_detour(a, b, lo, hi):
    """Shorter arc of the box boundary from a to b (both on the boundary)."""
    corners = [lo, complex(hi.real, lo.imag), hi, complex(lo.real, hi.imag)]
    w, h = hi.real - lo.real, hi.imag - lo.imag
    per = 2 * (w + h)

    def param(z):
        # arclength position counterclockwise from lo
        if abs(z.imag - lo.imag) < 1e-12 * (1 + abs(lo.imag)):
            return z.real - lo.real
        if abs(z.real - hi.real) < 1e-12 * (1 + abs(hi.real)):
            return w + (z.imag - lo.imag)
        if abs(z.imag - hi.imag) < 1e-12 * (1 + abs(hi.imag)):
            return w + h + (hi.real - z.real)
        return 2 * w + h + (hi.imag - z.imag)

    sa, sb = param(a), param(b)
    ccw = (sb - sa) % per
    cum = [0.0, w, w + h, 2 * w + h]
    if ccw <= per - ccw:
        ks = [k for k in range(4) if 0 < (cum[k] - sa) % per < ccw]
        ks.sort(key=lambda k: (cum[k] - sa) % per)
    else:
        ks = [k for k in range(4) if 0 < (sa - cum[k]) % per < per - ccw]
        ks.sort(key=lambda k: (sa - cum[k]) % per)
    return [corners[k] for k in ks] + [b]


def llc_route(d: CylinderDomain, x, y) -> LLCRoute:
    """Flat geodesic from x to y with every square crossing replaced by the
    shorter way around the square's boundary."""
    x, y = complex(x), complex(y)
    for p in (x, y):
        if not d.point_in_T(np.array([p]))[0]:
            raise DomainError(f"endpoint {p} is not in the closed domain minus open squares")
    sx, tx = lift(x)
    sy, ty = lift(y)
    X = complex(sx, tx)
    Y = complex(sy, tx + float(wrap_angle(ty - tx)))
    dist_flat = abs(Y - X)
    crossings = []
    for q in d.squares.values():
        h = q.side / 2
        # copies of the square near the segment in the universal cover
        for k in (-1, 0, 1):
            c = q.theta + TWO_PI * k + TWO_PI * round((tx - q.theta) / TWO_PI)
            lo, hi = complex(q.u - h, c - h), complex(q.u + h, c + h)
            iv = _clip(X, Y, lo, hi)
            if iv is None or iv[1] - iv[0] <= 1e-14:
                continue
            mid = X + 0.5 * (iv[0] + iv[1]) * (Y - X)
            if not (lo.real < mid.real < hi.real and lo.imag < mid.imag < hi.imag):
                continue  # grazing an edge or a corner
            crossings.append((iv[0], iv[1], lo, hi))
    crossings.sort(key=lambda c: c[0])
    pts = [X]
    for t0, t1, lo, hi in crossings:
        a, b = X + t0 * (Y - X), X + t1 * (Y - X)
        if a != pts[-1]:
            pts.append(a)
        pts.extend(_boundary_detour(a, b, lo, hi))
    if Y != pts[-1]:
        pts.append(Y)
    return LLCRoute(np.array(pts, dtype=complex), float(dist_flat))


# ---------------------------------------------------------------------------
# LLC check on the sphere

@dataclass(frozen=True)
class LLCReport:
    passed: bool
    trials: int
    failures: list
    lam: float
    slack: float


def _fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    zc = 1 - 2 * i / n
    phi = math.pi * (3 - math.sqrt(5)) * i
    rxy = np.sqrt(1 - zc ** 2)
    return np.column_stack([rxy * np.cos(phi), rxy * np.sin(phi), zc])


def _from_sphere(P: np.ndarray) -> np.ndarray:
    """Inverse stereographic projection (north pole -> very large value)."""
    den = np.maximum(1 - P[:, 2], 1e-300)
    return (P[:, 0] + 1j * P[:, 1]) / den


def llc_check(scene: Scene, lam: float = 1.0, trials: int = 200, n_nodes: int = 20000,
              seed: int = 0) -> LLCReport:
    """Sampled test of the two LLC conditions in the chordal metric.

    The domain is the sphere minus the closed holes (and minus the outside
    of the outer boundary when present).  Connectivity is decided on a
    near-uniform point graph of the sphere; balls are enlarged (LLC1) or
    shrunk (LLC2) by two graph spacings to absorb discretization.
    """
    if lam < 1:
        raise DomainError("LLC factor must be >= 1")
    round_only = all(h.kind in ("disk", "circle") for h in scene.holes) and (
        scene.outer is None or scene.outer.kind in ("disk", "circle"))
    if lam == 1 and not round_only:
        raise DomainError("factor 1 is only claimed for circle domains")
    P = _fibonacci_sphere(n_nodes)
    z = _from_sphere(P)
    from .grid import INTERIOR
    inside = scene.classify(z) == INTERIOR
    spacing = math.sqrt(4 * math.pi / n_nodes)
    tree = cKDTree(P)
    pairs = tree.query_pairs(1.8 * spacing, output_type="ndarray")
    rng = np.random.default_rng(seed)
    slack = 2.0 * spacing
    failures = []
    node_ids = np.flatnonzero(inside)
    for trial in range(trials):
        a = P[node_ids[rng.integers(len(node_ids))]] if trial % 2 == 0 else P[rng.integers(n_nodes)]
        r = float(rng.uniform(4 * spacing, 1.9))
        da = np.linalg.norm(P - a, axis=1)
        for cond in (1, 2):
            if cond == 1:
                pick = inside & (da < r)
                allowed = inside & (da < lam * r + slack)
            else:
                pick = inside & (da > r)
                allowed = inside & (da > r / lam - slack)
            cand = np.flatnonzero(pick)
            if len(cand) < 2:
                continue
            i, j = rng.choice(cand, 2, replace=False)
            keep = allowed[pairs[:, 0]] & allowed[pairs[:, 1]]
            e = pairs[keep]
            g = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n_nodes, n_nodes))
            _, comp = connected_components(g, directed=False)
            if comp[i] != comp[j]:
                failures.append((cond, tuple(np.round(a, 6)), r, int(i), int(j)))
    return LLCReport(not failures, trials, failures, lam, slack)
