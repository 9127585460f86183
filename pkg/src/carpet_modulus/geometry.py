"""Metrics, measures, polyline curves and elementary set functionals.

Points of the extended plane are Python complex numbers, plus the
:data:`INF` marker for the point at infinity.  Vectorized helpers take
numpy arrays of finite complex numbers.

Three metrics are supported (:class:`MetricKind`):

* ``chordal``: ``2|x-y| / sqrt(1+|x|^2) sqrt(1+|y|^2)``, the chord metric of
  the unit sphere in R^3 under stereographic projection;
* ``euclidean``: ``|x-y|``;
* ``flat-cylinder``: the quotient metric of ``R x (R / 2 pi Z)`` pulled back
  through ``log``, i.e. length element ``|dz|/|z|`` on the punctured plane.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError

TWO_PI = 2.0 * math.pi

#: default relative chord-error tolerance for adaptive curve subdivision
REFINE_TOL = 1e-6


class _Infinity:
    """The point at infinity of the Riemann sphere (singleton)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()
SpherePoint = Union[complex, float, int, _Infinity]


def is_inf(p) -> bool:
    return p is INF


def as_point(p) -> SpherePoint:
    if p is INF:
        return INF
    z = complex(p)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"non-finite coordinate {p!r}; use INF for the point at infinity")
    return z


class MetricKind(str, enum.Enum):
    CHORDAL = "chordal"
    EUCLIDEAN = "euclidean"
    FLAT = "flat-cylinder"

    @classmethod
    def parse(cls, value) -> "MetricKind":
        if isinstance(value, cls):
            return value
        value = str(value).lower()
        aliases = {"flat": cls.FLAT, "cylinder": cls.FLAT, "cstar": cls.FLAT}
        if value in aliases:
            return aliases[value]
        return cls(value)


CHORDAL, EUCLIDEAN, FLAT = MetricKind.CHORDAL, MetricKind.EUCLIDEAN, MetricKind.FLAT


# ---------------------------------------------------------------------------
# point distances

def lift(z):
    """Log coordinates ``(u, theta)`` with ``u = log|z|`` and ``theta`` in (-pi, pi]."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("flat-cylinder metric is undefined at 0")
    return np.log(np.abs(z)), np.angle(z)


def wrap_angle(t):
    """Wrap angles to [-pi, pi)."""
    return (np.asarray(t) + math.pi) % TWO_PI - math.pi


def to_sphere(z) -> np.ndarray:
    """Stereographic embedding onto the unit sphere; chordal distance is the R^3 chord."""
    z = np.asarray(z, dtype=complex)
    n2 = np.abs(z) ** 2
    d = 1.0 + n2
    return np.stack([2 * z.real / d, 2 * z.imag / d, (n2 - 1.0) / d], axis=-1)


def dist(a, b, metric) -> np.ndarray:
    """Vectorized distance between finite complex arrays (broadcasting)."""
    metric = MetricKind.parse(metric)
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if metric is EUCLIDEAN:
        return np.abs(a - b)
    if metric is CHORDAL:
        return 2.0 * np.abs(a - b) / np.sqrt((1.0 + np.abs(a) ** 2) * (1.0 + np.abs(b) ** 2))
    ua, ta = lift(a)
    ub, tb = lift(b)
    return np.hypot(ua - ub, wrap_angle(ta - tb))


def distance(p: SpherePoint, q: SpherePoint, m) -> float:
    """Distance between two points of the extended plane in metric ``m``."""
    m = MetricKind.parse(m)
    p, q = as_point(p), as_point(q)
    if p is INF or q is INF:
        if m is not CHORDAL:
            raise DomainError(f"the point at infinity has no {m.value} distance")
        if p is INF and q is INF:
            return 0.0
        x = q if p is INF else p
        return 2.0 / math.sqrt(1.0 + abs(x) ** 2)
    if p == q:
        return 0.0
    return float(dist(p, q, m))


def disk_area(r: float) -> float:
    """Spherical measure of a chordal ball of radius ``r``: pi r^2 for 0 < r <= 2."""
    if not (0.0 < r <= 2.0):
        raise DomainError(f"chordal ball radius must lie in (0, 2], got {r}")
    return math.pi * r * r


def ball_area(r: float, metric) -> float:
    """Measure of a ball of radius ``r`` in the natural measure of ``metric``."""
    metric = MetricKind.parse(metric)
    if r <= 0:
        raise DomainError("radius must be positive")
    if metric is CHORDAL:
        return disk_area(min(r, 2.0))
    if metric is EUCLIDEAN or r <= math.pi:
        return math.pi * r * r
    # flat cylinder: the disk wraps around once r > pi
    from scipy.integrate import quad

    val, _ = quad(lambda u: min(TWO_PI, 2.0 * math.sqrt(max(r * r - u * u, 0.0))), -r, r,
                  points=[-math.sqrt(r * r - math.pi ** 2), math.sqrt(r * r - math.pi ** 2)])
    return val


def metric_area_factor(z, metric) -> np.ndarray:
    """Density of the metric's area measure w.r.t. Lebesgue measure on C."""
    metric = MetricKind.parse(metric)
    z = np.asarray(z, dtype=complex)
    if metric is EUCLIDEAN:
        return np.ones(z.shape)
    if metric is CHORDAL:
        return 4.0 / (1.0 + np.abs(z) ** 2) ** 2
    return 1.0 / np.abs(z) ** 2


def metric_length_factor(z, metric) -> np.ndarray:
    """Density of the metric's length element w.r.t. |dz|."""
    metric = MetricKind.parse(metric)
    z = np.asarray(z, dtype=complex)
    if metric is EUCLIDEAN:
        return np.ones(z.shape)
    if metric is CHORDAL:
        return 2.0 / (1.0 + np.abs(z) ** 2)
    return 1.0 / np.abs(z)


# ---------------------------------------------------------------------------
# segment lengths

def segment_length(a, b, metric) -> np.ndarray:
    """Exact metric length of the straight segments ``[a, b]`` (vectorized)."""
    metric = MetricKind.parse(metric)
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    a, b = np.broadcast_arrays(a, b)
    d = b - a
    if metric is EUCLIDEAN:
        return np.abs(d)
    A = np.abs(d) ** 2
    B = 2.0 * (a.conj() * d).real
    out = np.zeros(a.shape)
    nz = A > 0
    if metric is CHORDAL:
        C = 1.0 + np.abs(a) ** 2
        D = np.sqrt(np.maximum(4.0 * A * C - B * B, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            integral = 2.0 / D * (np.arctan((2 * A + B) / D) - np.arctan(B / D))
        out[nz] = (2.0 * np.sqrt(A) * integral)[nz]
        return out
    # flat: |d| * int_0^1 dt / |a + t d|
    C = np.abs(a) ** 2
    tstar = np.where(nz, -B / np.where(nz, 2 * A, 1.0), 0.0)
    closest = np.abs(a + np.clip(tstar, 0.0, 1.0) * d)
    if np.any(nz & (closest <= 1e-300)) or np.any(np.abs(a) == 0) or np.any(np.abs(b) == 0):
        raise DomainError("segment passes through 0 under the flat-cylinder metric")

    def prim_pos(t):  # valid where 2At+B >= 0
        q = A * t * t + B * t + C
        return np.log(2.0 * np.sqrt(A * q) + 2.0 * A * t + B)

    def prim_neg(t):  # valid where 2At+B <= 0, equals -log(g - s)
        q = A * t * t + B * t + C
        return -np.log(2.0 * np.sqrt(A * q) - 2.0 * A * t - B)

    with np.errstate(divide="ignore", invalid="ignore"):
        s0 = B
        s1 = 2 * A + B
        both_pos = (s0 >= 0) & (s1 >= 0)
        both_neg = (s0 <= 0) & (s1 <= 0) & ~both_pos
        mixed = ~(both_pos | both_neg)
        tm = np.clip(tstar, 0.0, 1.0)
        val = np.where(both_pos, prim_pos(1.0) - prim_pos(0.0), 0.0)
        val = np.where(both_neg, prim_neg(1.0) - prim_neg(0.0), val)
        val = np.where(mixed, (prim_neg(tm) - prim_neg(0.0)) + (prim_pos(1.0) - prim_pos(tm)), val)
    out[nz] = val[nz]
    return out


# ---------------------------------------------------------------------------
# curves

def _signed_area(v: np.ndarray) -> float:
    x, y = v.real, v.imag
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True, eq=False)
class PolyCurve:
    """A polyline in the plane, optionally closed.

    ``jordan=True`` asserts (and verifies) that a closed curve is simple.
    """

    vertices: np.ndarray
    closed: bool = False
    jordan: bool = False

    def __post_init__(self):
        v = np.array([complex(p) for p in self.vertices], dtype=complex) if not isinstance(
            self.vertices, np.ndarray) else np.asarray(self.vertices, dtype=complex).copy()
        if v.ndim != 1:
            raise DomainError("vertices must be a 1-d sequence of points")
        if not np.all(np.isfinite(v)):
            raise DomainError("polyline vertices must be finite")
        if self.closed and len(v) > 1 and v[0] == v[-1]:
            v = v[:-1]
        need = 3 if self.closed else 2
        if len(v) < need:
            raise DomainError(f"{'closed' if self.closed else 'open'} polyline needs >= {need} vertices")
        nxt = np.roll(v, -1) if self.closed else v[1:]
        cur = v if self.closed else v[:-1]
        if np.any(cur == nxt):
            raise DomainError("consecutive vertices must be distinct")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        if self.jordan:
            if not self.closed:
                raise DomainError("a Jordan curve must be closed")
            if not self.is_simple():
                raise DomainError("curve marked Jordan is self-intersecting")

    def __len__(self):
        return len(self.vertices)

    @property
    def n_segments(self) -> int:
        return len(self.vertices) if self.closed else len(self.vertices) - 1

    def segments(self):
        v = self.vertices
        if self.closed:
            return v, np.roll(v, -1)
        return v[:-1], v[1:]

    def is_simple(self) -> bool:
        from shapely.geometry import LinearRing, LineString

        xy = np.column_stack([self.vertices.real, self.vertices.imag])
        geom = LinearRing(xy) if self.closed else LineString(xy)
        return bool(geom.is_simple)

    def signed_area(self) -> float:
        if not self.closed:
            return 0.0
        return _signed_area(self.vertices)

    def oriented(self, ccw: bool = True) -> "PolyCurve":
        if not self.closed or (self.signed_area() > 0) == ccw:
            return self
        return PolyCurve(self.vertices[::-1], closed=True, jordan=self.jordan)

    def transformed(self, a: complex = 1.0, b: complex = 0.0) -> "PolyCurve":
        """Image under the similarity ``z -> a z + b``."""
        return PolyCurve(a * self.vertices + b, closed=self.closed, jordan=self.jordan)

    def centroid(self) -> complex:
        v = self.vertices
        if self.closed:
            x, y = v.real, v.imag
            xn, yn = np.roll(x, -1), np.roll(y, -1)
            cr = x * yn - xn * y
            a = cr.sum() / 2
            if abs(a) > 1e-300:
                return complex((np.sum((x + xn) * cr) / (6 * a)), np.sum((y + yn) * cr) / (6 * a))
        return complex(v.mean())

    def contains(self, z) -> np.ndarray:
        """Point-in-polygon test (closed curves only)."""
        from matplotlib.path import Path

        if not self.closed:
            raise DomainError("containment requires a closed curve")
        z = np.asarray(z, dtype=complex)
        path = Path(np.column_stack([self.vertices.real, self.vertices.imag]))
        pts = np.column_stack([z.ravel().real, z.ravel().imag])
        return path.contains_points(pts).reshape(z.shape)

    def refine(self, factor: int) -> "PolyCurve":
        """Insert ``factor - 1`` equally spaced points in every segment."""
        a, b = self.segments()
        t = np.arange(factor) / factor
        pts = (a[:, None] + t[None, :] * (b - a)[:, None]).ravel()
        if not self.closed:
            pts = np.append(pts, self.vertices[-1])
        return PolyCurve(pts, closed=self.closed)

    def sample(self, metric=EUCLIDEAN, tol: float = REFINE_TOL) -> np.ndarray:
        """Vertices plus adaptive subdivision points.

        Each segment is split until the estimated chord error of its image
        in ``metric`` is below ``tol * diam``.  Euclidean segments are never
        split (their image is the chord).
        """
        metric = MetricKind.parse(metric)
        if metric is EUCLIDEAN:
            return self.vertices.copy()
        scale = _max_pairwise(self.vertices, metric)
        target = max(tol * scale, 1e-15)
        a, b = self.segments()
        pieces = []
        for p, q in zip(a, b):
            pieces.append(_subdivide(p, q, metric, target))
        pts = np.concatenate(pieces) if pieces else np.empty(0, complex)
        if not self.closed:
            pts = np.append(pts, self.vertices[-1])
        return pts

    def arclength_points(self, n: int) -> np.ndarray:
        """``n`` points equally spaced in Euclidean arclength, starting at vertex 0."""
        a, b = self.segments()
        seg = np.abs(b - a)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        total = cum[-1]
        s = np.arange(n) * total / (n if self.closed else max(n - 1, 1))
        idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
        t = (s - cum[idx]) / seg[idx]
        return a[idx] + t * (b[idx] - a[idx])


def _chord_error(p, q, metric) -> float:
    length = float(segment_length(p, q, metric)[0])
    chord = float(dist(p, q, metric))
    return math.sqrt(max(3.0 * length * (length - chord) / 8.0, 0.0))


def _subdivide(p, q, metric, target, depth=0) -> np.ndarray:
    """Points of [p, q) after adaptive bisection (q excluded)."""
    if depth > 40 or _chord_error(p, q, metric) <= target:
        return np.array([p], dtype=complex)
    m = 0.5 * (p + q)
    return np.concatenate([_subdivide(p, m, metric, target, depth + 1),
                           _subdivide(m, q, metric, target, depth + 1)])


def circle(center: complex = 0.0, radius: float = 1.0, n: int = 256, phase: float = 0.0) -> PolyCurve:
    """Closed regular ``n``-gon inscribed in a circle (counterclockwise)."""
    t = phase + TWO_PI * np.arange(n) / n
    return PolyCurve(center + radius * np.exp(1j * t), closed=True)


def rectangle(x0: float, y0: float, w: float, h: float) -> PolyCurve:
    """Axis-aligned rectangle with lower-left corner (x0, y0), counterclockwise."""
    c = complex(x0, y0)
    return PolyCurve(np.array([c, c + w, c + complex(w, h), c + 1j * h]), closed=True)


def path_length(gamma: PolyCurve, m) -> float:
    """Metric length of a polyline: sum of exact segment lengths."""
    a, b = gamma.segments()
    return float(np.sum(segment_length(a, b, m)))


# ---------------------------------------------------------------------------
# set functionals

class _WholeSphere:
    def __repr__(self):
        return "SPHERE"


#: marker for the whole extended plane as a point set
SPHERE = _WholeSphere()


def as_points(S, metric=EUCLIDEAN, tol: float = REFINE_TOL) -> np.ndarray:
    """Sampled point representation of a curve / region / point collection."""
    if isinstance(S, PolyCurve):
        return S.sample(metric, tol)
    if hasattr(S, "boundary_points"):
        return np.asarray(S.boundary_points(), dtype=complex)
    pts = np.atleast_1d(np.asarray(list(S) if not isinstance(S, np.ndarray) else S, dtype=complex))
    return pts


def _embed(points: np.ndarray, metric) -> np.ndarray:
    """Coordinates in which the metric is Euclidean (flat needs periodic copies)."""
    metric = MetricKind.parse(metric)
    if metric is EUCLIDEAN:
        return np.column_stack([points.real, points.imag])
    if metric is CHORDAL:
        return to_sphere(points)
    u, t = lift(points)
    return np.column_stack([u, t])


def _max_pairwise(points: np.ndarray, metric, chunk: int = 2048) -> float:
    points = np.asarray(points, dtype=complex)
    if len(points) < 2:
        return 0.0
    metric = MetricKind.parse(metric)
    if metric is EUCLIDEAN and len(points) > 64:
        from scipy.spatial import ConvexHull
        from scipy.spatial import QhullError

        try:
            hull = ConvexHull(np.column_stack([points.real, points.imag]))
            points = points[hull.vertices]
        except QhullError:
            pass
    best = 0.0
    for i in range(0, len(points), chunk):
        block = points[i:i + chunk]
        d = dist(block[:, None], points[None, :], metric)
        best = max(best, float(d.max()))
    return best


def set_diameter(S, m, tol: float = REFINE_TOL) -> float:
    """Diameter of a point set / curve (sup of sampled pairwise distances)."""
    m = MetricKind.parse(m)
    if S is SPHERE:
        if m is not CHORDAL:
            raise DomainError("the whole sphere is unbounded outside the chordal metric")
        return 2.0
    pts = as_points(S, m, tol)
    if len(pts) == 0:
        raise DomainError("diameter of an empty set")
    return _max_pairwise(pts, m)


def _seg_seg_distance(p0, p1, q0, q1) -> np.ndarray:
    """Euclidean distance between segment arrays (broadcasting)."""

    def pt_seg(z, a, b):
        d = b - a
        dd = np.abs(d) ** 2
        t = np.where(dd > 0, ((z - a) * d.conj()).real / np.where(dd > 0, dd, 1.0), 0.0)
        return np.abs(z - (a + np.clip(t, 0.0, 1.0) * d))

    def cross(u, v):
        return (u.conj() * v).imag

    d1, d2 = p1 - p0, q1 - q0
    den = cross(d1, d2)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = cross(q0 - p0, d2) / den
        t = cross(q0 - p0, d1) / den
    hit = (den != 0) & (s >= 0) & (s <= 1) & (t >= 0) & (t <= 1)
    best = np.minimum(np.minimum(pt_seg(p0, q0, q1), pt_seg(p1, q0, q1)),
                      np.minimum(pt_seg(q0, p0, p1), pt_seg(q1, p0, p1)))
    return np.where(hit, 0.0, best)


def set_distance(E, F, m, tol: float = REFINE_TOL) -> float:
    """dist(E, F): exact for Euclidean polylines, sampled otherwise."""
    m = MetricKind.parse(m)
    if m is EUCLIDEAN and isinstance(E, PolyCurve) and isinstance(F, PolyCurve):
        a0, a1 = E.segments()
        b0, b1 = F.segments()
        best = math.inf
        for i in range(0, len(a0), 512):
            d = _seg_seg_distance(a0[i:i + 512, None], a1[i:i + 512, None], b0[None, :], b1[None, :])
            best = min(best, float(d.min()))
        return best
    P = as_points(E, m, tol)
    Q = as_points(F, m, tol)
    if len(P) == 0 or len(Q) == 0:
        raise DomainError("distance to an empty set")
    X, Y = _embed(P, m), _embed(Q, m)
    if m is FLAT:
        Y = np.concatenate([Y, Y + [0, TWO_PI], Y - [0, TWO_PI]])
    d, _ = cKDTree(Y).query(X)
    return float(d.min())


def distance_to_curve(z, curve: PolyCurve, m, tol: float = REFINE_TOL) -> np.ndarray:
    """Distance from point(s) ``z`` to a curve (exact for Euclidean)."""
    m = MetricKind.parse(m)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if m is EUCLIDEAN:
        a, b = curve.segments()
        out = np.empty(z.shape)
        for i in range(0, len(z), 256):
            blk = z[i:i + 256, None]
            out[i:i + 256] = _seg_seg_distance(blk, blk, a[None, :], b[None, :]).min(axis=1)
        return out
    P = curve.sample(m, tol)
    Y = _embed(P, m)
    if m is FLAT:
        Y = np.concatenate([Y, Y + [0, TWO_PI], Y - [0, TWO_PI]])
    d, _ = cKDTree(Y).query(_embed(z, m))
    return d


def relative_distance(E, F, m, tol: float = REFINE_TOL) -> float:
    """dist(E, F) / min(diam E, diam F)."""
    dE, dF = set_diameter(E, m, tol), set_diameter(F, m, tol)
    if min(dE, dF) <= 0:
        raise DomainError("relative distance needs sets of positive diameter")
    d = set_distance(E, F, m, tol)
    if d <= 0:
        raise DomainError("relative distance needs disjoint sets")
    return d / min(dE, dF)


# ---------------------------------------------------------------------------
# cross-ratios

def _four(x1, x2, x3, x4, m):
    pts = [as_point(p) for p in (x1, x2, x3, x4)]
    for i in range(4):
        for j in range(i + 1, 4):
            if distance(pts[i], pts[j], m) == 0:
                raise DomainError("cross-ratio needs four distinct points")
    return pts


def cross_ratio(x1, x2, x3, x4, m) -> float:
    """[x1,x2,x3,x4] = d(x1,x3) d(x2,x4) / (d(x1,x4) d(x2,x3))."""
    p = _four(x1, x2, x3, x4, m)
    d = lambda i, j: distance(p[i], p[j], m)  # noqa: E731
    return d(0, 2) * d(1, 3) / (d(0, 3) * d(1, 2))


def modified_cross_ratio(x1, x2, x3, x4, m) -> float:
    """<x1,x2,x3,x4> = min(d13, d24) / min(d14, d23)."""
    p = _four(x1, x2, x3, x4, m)
    d = lambda i, j: distance(p[i], p[j], m)  # noqa: E731
    return min(d(0, 2), d(1, 3)) / min(d(0, 3), d(1, 2))


def cross_ratios(X: np.ndarray, m):
    """Vectorized (cross_ratio, modified_cross_ratio) for rows of an (n, 4) array."""
    X = np.asarray(X, dtype=complex)
    d13 = dist(X[:, 0], X[:, 2], m)
    d24 = dist(X[:, 1], X[:, 3], m)
    d14 = dist(X[:, 0], X[:, 3], m)
    d23 = dist(X[:, 1], X[:, 2], m)
    return d13 * d24 / (d14 * d23), np.minimum(d13, d24) / np.minimum(d14, d23)


def eta_lower(t):
    """t -> (1/3) min(t, sqrt t)."""
    t = np.asarray(t, dtype=float)
    return np.minimum(t, np.sqrt(t)) / 3.0


def eta_upper(t):
    """t -> 3 max(t, sqrt t)."""
    t = np.asarray(t, dtype=float)
    return 3.0 * np.maximum(t, np.sqrt(t))


# ---------------------------------------------------------------------------
# annuli

@dataclass(frozen=True)
class Annulus:
    """Metric annulus ``{y : r < d(y, center) < R}``."""

    center: complex
    r: float
    R: float
    metric: MetricKind = CHORDAL

    def __post_init__(self):
        object.__setattr__(self, "metric", MetricKind.parse(self.metric))
        if not (0 < self.r < self.R):
            raise DomainError(f"annulus needs 0 < r < R, got r={self.r}, R={self.R}")
        if self.metric is CHORDAL and not self.R < 1.0:
            raise DomainError("chordal annulus needs R < diam/2 = 1")

    @property
    def width(self) -> float:
        return math.log(self.R / self.r)

    def sub(self, r: float, R: float) -> "Annulus":
        return Annulus(self.center, r, R, self.metric)

    def contains(self, z) -> np.ndarray:
        d = dist(np.asarray(z, dtype=complex), self.center, self.metric)
        return (d > self.r) & (d < self.R)
