import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from carpet_modulus.errors import DomainError
from carpet_modulus.geometry import (CHORDAL, EUCLIDEAN, FLAT, INF, Annulus, MetricKind, PolyCurve, circle,
                                     cross_ratio, cross_ratios, dist, distance, eta_lower, eta_upper, lift,
                                     modified_cross_ratio, rectangle, set_diameter, to_sphere, wrap_angle)

coord = st.floats(-50, 50, allow_nan=False)
points = st.builds(complex, coord, coord)


def sphere(z):
    # independent inverse stereographic projection onto the unit sphere
    z = complex(z)
    d = 1 + abs(z) ** 2
    return np.array([2 * z.real / d, 2 * z.imag / d, (abs(z) ** 2 - 1) / d])


def test_metric_parse_aliases():
    assert MetricKind.parse("flat") is FLAT
    assert MetricKind.parse("chordal") is CHORDAL
    with pytest.raises(ValueError):
        MetricKind.parse("hyperbolic")


@given(points, points)
def test_chordal_is_euclidean_distance_on_the_sphere(a, b):
    assert dist(a, b, CHORDAL) == pytest.approx(np.linalg.norm(sphere(a) - sphere(b)), abs=1e-12)


def test_chordal_distance_to_infinity():
    assert distance(INF, 0, CHORDAL) == pytest.approx(2.0)
    assert distance(INF, 1, CHORDAL) == pytest.approx(math.sqrt(2))
    with pytest.raises(DomainError):
        distance(INF, 1, EUCLIDEAN)


def test_to_sphere_matches_projection():
    for z in (0.3 + 2j, -5, 1j):
        assert np.allclose(to_sphere(z), sphere(z))


@given(points, points)
def test_flat_distance_is_log_polar_hypot(a, b):
    assume(abs(a) > 1e-3 and abs(b) > 1e-3)
    du = math.log(abs(a)) - math.log(abs(b))
    dt = (math.atan2(a.imag, a.real) - math.atan2(b.imag, b.real)) % (2 * math.pi)
    dt = min(dt, 2 * math.pi - dt)
    assert dist(a, b, FLAT) == pytest.approx(math.hypot(du, dt), abs=1e-9)


@given(st.floats(-100, 100))
def test_wrap_angle_range(t):
    w = float(wrap_angle(t))
    assert -math.pi < w <= math.pi + 1e-12
    assert math.isclose(math.cos(w), math.cos(t), abs_tol=1e-9)


def test_lift_rejects_zero():
    with pytest.raises(DomainError):
        lift(0)


def test_polycurve_basics():
    sq = rectangle(0, 0, 2, 1)
    assert abs(sq.signed_area()) == pytest.approx(2.0)
    assert sq.is_simple()
    assert sq.contains(np.array([1 + 0.5j]))[0]
    assert not sq.contains(np.array([3 + 0.5j]))[0]
    assert sq.oriented(True).signed_area() > 0
    bow = PolyCurve(np.array([0, 1 + 1j, 1, 1j]), closed=True, jordan=False)
    assert not bow.is_simple()


def test_set_diameter_of_circle():
    assert set_diameter(circle(0, 1, 512), EUCLIDEAN) == pytest.approx(2.0, rel=1e-4)


@given(points, points, points, points)
def test_cross_ratio_sandwich(x1, x2, x3, x4):
    pts = [x1, x2, x3, x4]
    assume(min(abs(p - q) for i, p in enumerate(pts) for q in pts[i + 1:]) > 1e-3)
    for m in (EUCLIDEAN, CHORDAL):
        cr = cross_ratio(x1, x2, x3, x4, m)
        mcr = modified_cross_ratio(x1, x2, x3, x4, m)
        assert eta_lower(cr) <= mcr * (1 + 1e-12)
        assert mcr <= eta_upper(cr) * (1 + 1e-12)


@given(points, points, points, points,
       st.builds(complex, coord, coord).filter(lambda a: abs(a) > 1e-2), points)
def test_cross_ratio_invariant_under_similarity(x1, x2, x3, x4, a, b):
    pts = [x1, x2, x3, x4]
    assume(min(abs(p - q) for i, p in enumerate(pts) for q in pts[i + 1:]) > 1e-2)
    c0 = cross_ratio(*pts, EUCLIDEAN)
    c1 = cross_ratio(*[a * p + b for p in pts], EUCLIDEAN)
    assert c1 == pytest.approx(c0, rel=1e-7)


@given(points, points, points, points)
def test_chordal_cross_ratio_is_mobius_invariant(x1, x2, x3, x4):
    pts = [x1, x2, x3, x4]
    assume(min(abs(p - q) for i, p in enumerate(pts) for q in pts[i + 1:]) > 1e-2)
    assume(min(abs(p) for p in pts) > 1e-2)
    # chordal cross-ratio equals the Euclidean one, and inversion preserves it
    c0 = cross_ratio(*pts, CHORDAL)
    assert c0 == pytest.approx(cross_ratio(*pts, EUCLIDEAN), rel=1e-7)
    assert cross_ratio(*[1 / p for p in pts], CHORDAL) == pytest.approx(c0, rel=1e-6)


def test_vectorized_cross_ratios_agree():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 4)) + 1j * rng.normal(size=(20, 4))
    cr, mcr = cross_ratios(X, CHORDAL)
    for row, c, m in zip(X, cr, mcr):
        assert c == pytest.approx(cross_ratio(*row, CHORDAL))
        assert m == pytest.approx(modified_cross_ratio(*row, CHORDAL))


def test_annulus():
    A = Annulus(0j, 0.1, 0.5, CHORDAL)
    assert A.width == pytest.approx(math.log(5))
    with pytest.raises(DomainError):
        Annulus(0j, 0.5, 0.1)
    with pytest.raises(DomainError):
        Annulus(0j, 0.5, 1.5, CHORDAL)
    B = Annulus(0j, 1, 3, EUCLIDEAN)
    assert list(B.contains(np.array([0.5, 2, 4]))) == [False, True, False]
