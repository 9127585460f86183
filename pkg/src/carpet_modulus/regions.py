"""Filled planar regions: round disks, C*-squares and polygons.

Every region offers ``contains``, a boundary polyline, sampled boundary
points and a quadrature grid (``area_samples``) in any of the metrics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import (CHORDAL, EUCLIDEAN, FLAT, TWO_PI, MetricKind, PolyCurve, circle, dist,
                       metric_area_factor, set_diameter, wrap_angle)


def _grid(x0, x1, y0, y1, n):
    xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
    ys = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
    X, Y = np.meshgrid(xs, ys)
    return X.ravel(), Y.ravel(), (x1 - x0) * (y1 - y0) / (n * n)


@dataclass(frozen=True)
class Disk:
    """Closed Euclidean disk ``|z - center| <= radius``."""

    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not self.radius > 0:
            raise DomainError("disk radius must be positive")

    def contains(self, z):
        return np.abs(np.asarray(z, dtype=complex) - self.center) <= self.radius

    def boundary(self, n: int = 512) -> PolyCurve:
        return circle(self.center, self.radius, n)

    def boundary_points(self, n: int = 1024) -> np.ndarray:
        return self.center + self.radius * np.exp(1j * TWO_PI * np.arange(n) / n)

    def diameter(self, metric=EUCLIDEAN) -> float:
        if MetricKind.parse(metric) is EUCLIDEAN:
            return 2.0 * self.radius
        return set_diameter(self.boundary_points(2048), metric)

    def meets(self, other: "Disk") -> bool:
        return abs(self.center - other.center) <= self.radius + other.radius

    def radial_extent(self, x: complex, metric=EUCLIDEAN):
        """(inf, sup) of ``d(y, x)`` over the disk."""
        metric = MetricKind.parse(metric)
        x = complex(x)
        c = abs(self.center - x)
        lo_e, hi_e = max(0.0, c - self.radius), c + self.radius
        if metric is EUCLIDEAN:
            return lo_e, hi_e
        if metric is CHORDAL and x == 0:
            f = lambda t: 2.0 * t / math.sqrt(1.0 + t * t)  # noqa: E731
            return f(lo_e), f(hi_e)
        d = dist(self.boundary_points(8192), x, metric)
        lo = 0.0 if self.contains(x) else float(d.min())
        return lo, float(d.max())

    def area_samples(self, metric=EUCLIDEAN, n: int = 400):
        c, r = self.center, self.radius
        X, Y, cell = _grid(c.real - r, c.real + r, c.imag - r, c.imag + r, n)
        z = X + 1j * Y
        keep = self.contains(z)
        z = z[keep]
        return z, cell * metric_area_factor(z, metric)


@dataclass(frozen=True)
class CStarSquare:
    """Log-polar square ``{exp(s + i t) : |s-u| <= side/2, |t-theta| <= side/2}``.

    ``u`` is the log-radius of the center and ``theta`` its angle; the flat
    side length ``side`` must lie in (0, 2 pi).
    """

    u: float
    theta: float
    side: float

    def __post_init__(self):
        if not (0 < self.side < TWO_PI):
            raise DomainError(f"C*-square side must lie in (0, 2pi), got {self.side}")
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)

    @property
    def center(self) -> complex:
        return complex(np.exp(self.u + 1j * self.theta))

    @property
    def flat_area(self) -> float:
        return self.side ** 2

    def contains_lifted(self, s, t):
        h = self.side / 2
        return (np.abs(np.asarray(s) - self.u) <= h) & (np.abs(wrap_angle(np.asarray(t) - self.theta)) <= h)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore"):
            s = np.log(np.abs(z))
        return self.contains_lifted(s, np.angle(z))

    def lifted_corners(self):
        h = self.side / 2
        return np.array([complex(self.u - h, self.theta - h), complex(self.u + h, self.theta - h),
                         complex(self.u + h, self.theta + h), complex(self.u - h, self.theta + h)])

    def boundary(self, n_side: int = 64) -> PolyCurve:
        c = self.lifted_corners()
        t = np.arange(n_side) / n_side
        lifted = np.concatenate([c[k] + t * (c[(k + 1) % 4] - c[k]) for k in range(4)])
        return PolyCurve(np.exp(lifted), closed=True)

    def boundary_points(self, n_side: int = 256) -> np.ndarray:
        return self.boundary(n_side).vertices

    def diameter(self, metric=FLAT) -> float:
        return set_diameter(self.boundary_points(128), metric)

    def area_samples(self, metric=FLAT, n: int = 400):
        h = self.side / 2
        S, T, cell = _grid(self.u - h, self.u + h, self.theta - h, self.theta + h, n)
        z = np.exp(S + 1j * T)
        # flat area element ds dt; convert to the requested metric
        factor = metric_area_factor(z, metric) * np.abs(z) ** 2
        return z, cell * factor


@dataclass(frozen=True)
class PolygonRegion:
    """Closed region bounded by a Jordan polyline."""

    curve: PolyCurve

    def __post_init__(self):
        if not self.curve.closed:
            raise DomainError("region boundary must be closed")

    def contains(self, z):
        return self.curve.contains(z)

    def boundary(self) -> PolyCurve:
        return self.curve

    def boundary_points(self) -> np.ndarray:
        return self.curve.refine(8).vertices

    def diameter(self, metric=EUCLIDEAN) -> float:
        return set_diameter(self.curve, metric)

    def area_samples(self, metric=EUCLIDEAN, n: int = 400):
        v = self.curve.vertices
        X, Y, cell = _grid(v.real.min(), v.real.max(), v.imag.min(), v.imag.max(), n)
        z = X + 1j * Y
        z = z[self.contains(z)]
        return z, cell * metric_area_factor(z, metric)


def as_region(obj):
    if isinstance(obj, (Disk, CStarSquare, PolygonRegion)):
        return obj
    if isinstance(obj, PolyCurve):
        return PolygonRegion(obj)
    raise DomainError(f"cannot interpret {type(obj).__name__} as a region")
