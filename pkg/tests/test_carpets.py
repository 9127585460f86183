import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carpet_modulus.acceptance import random_square_domain
from carpet_modulus.carpets import (Boundary, CylinderDomain, Scene, carpet_labels, carpet_to_scene,
                                    cylinder_domain, cylinder_from_height, llc_check, llc_route,
                                    peripheral_stats, standard_carpet)
from carpet_modulus.errors import DomainError, ResourceError
from carpet_modulus.geometry import CHORDAL, TWO_PI, lift, wrap_angle
from carpet_modulus.grid import EXTERIOR, INTERIOR


@pytest.mark.parametrize("depth", [0, 1, 2, 3])
def test_standard_carpet_counts(depth):
    c = standard_carpet(depth)
    assert len(c.squares) == sum(8 ** k for k in range(depth))
    assert c.removed_area() == 1 - Fraction(8, 9) ** depth


def test_standard_carpet_depth_cap():
    with pytest.raises(ResourceError):
        standard_carpet(7)


def test_carpet_squares_disjoint_and_inside():
    c = standard_carpet(3)
    sq = c.square_tuples()
    for x, y, s in sq:
        assert 0 < x and x + s < 1 and 0 < y and y + s < 1
    scene = carpet_to_scene(c).validate()
    assert scene.labels[0] == 0 and 1 in scene.labels


def test_carpet_labels():
    assert carpet_labels(0) == []
    assert carpet_labels(3) == [0, 2, 3]


def test_peripheral_stats_depth_one():
    p = peripheral_stats(standard_carpet(1), samples=128)
    assert p.s == pytest.approx(1 / math.sqrt(2), rel=1e-6)
    assert p.k > 1.1


def test_scene_rejects_duplicates_and_overlaps():
    with pytest.raises(DomainError):
        Scene(None, (Boundary(0, "disk", (0, 0, 1)), Boundary(0, "disk", (5, 0, 1))))
    with pytest.raises(DomainError):
        Scene(None, (Boundary(0, "disk", (0, 0, 1)), Boundary(2, "disk", (0.5, 0, 1)))).validate()
    with pytest.raises(DomainError):
        Boundary(-1, "disk", (0, 0, 1))
    with pytest.raises(DomainError):
        Boundary(0, "hexagon", (0, 0, 1))


def test_scene_classify():
    s = carpet_to_scene(standard_carpet(1))
    lab = s.classify(np.array([0.5 + 0.5j, 0.1 + 0.1j, 2 + 2j]))
    assert list(lab) == [0, INTERIOR, 1]
    s2 = Scene(Boundary(None, "square", (0, 0, 1)), ())
    assert s2.classify(np.array([2 + 2j]))[0] == EXTERIOR


def test_scene_relabel_and_rotate():
    s = cylinder_from_height(1.0, [(0.4, 0.5, 0.0)]).to_scene()
    r = s.rotated(1.0)
    assert r.hole(2).params[1] == pytest.approx(1.0)
    assert set(s.relabeled({2: 5}).labels) == {0, 1, 5}


def test_cylinder_domain_validation():
    d = cylinder_from_height(1.0, [(0.4, 0.5, 0.0), (0.6, 0.5, 3.14)])
    assert d.h_A == pytest.approx(1.0)
    assert d.area_sum() == pytest.approx(0.52)
    with pytest.raises(DomainError):
        cylinder_from_height(1.0, [(0.4, 0.5, 0.0), (0.4, 0.5, 0.2)])   # overlap
    with pytest.raises(DomainError):
        cylinder_from_height(1.0, [(0.4, 0.9, 0.0)])                   # sticks out
    with pytest.raises(DomainError):
        CylinderDomain(2.0, 1.0)
    with pytest.raises(DomainError):
        cylinder_domain(1, 3, [(0, 0.1)])


def test_square_across_seam_overlap_detected():
    with pytest.raises(DomainError):
        cylinder_from_height(1.0, [(0.4, 0.5, 0.1), (0.4, 0.5, TWO_PI - 0.1)])


def test_point_in_T():
    d = cylinder_from_height(1.0, [(0.4, 0.5, 0.0)])
    z = np.exp(np.array([0.5, 0.5 + 1j, 1.5, -0.1]))
    assert list(d.point_in_T(z)) == [False, True, False, False]


@given(st.integers(0, 10_000))
def test_llc_route_factor_at_most_two(seed):
    rng = np.random.default_rng(seed)
    d = random_square_domain(rng)
    pts = []
    while len(pts) < 2:
        z = np.exp(rng.uniform(0, d.h_A) + 1j * rng.uniform(0, TWO_PI))
        if d.point_in_T(np.array([z]))[0]:
            pts.append(z)
    r = llc_route(d, *pts)
    assert r.factor <= 2 + 1e-9
    assert r.lifted[0] == pytest.approx(complex(math.log(abs(pts[0])), np.angle(pts[0])))
    # the route may run along square edges but never enters a square
    u, t = lift(r.dense_curve(1e-3).vertices)
    for q in d.squares.values():
        depth = np.minimum(q.side / 2 - np.abs(u - q.u), q.side / 2 - np.abs(wrap_angle(t - q.theta)))
        assert depth.max() <= 1e-9


def test_llc_route_rejects_points_inside_squares():
    d = cylinder_from_height(1.0, [(0.4, 0.5, 0.0)])
    with pytest.raises(DomainError):
        llc_route(d, math.exp(0.5), math.exp(0.9))


def test_llc_check_round_domain():
    s = Scene(None, (Boundary(0, "disk", (0, 0, 0.5)), Boundary(2, "disk", (3, 0, 1))), CHORDAL)
    assert llc_check(s, 1.0, trials=20, n_nodes=6000).passed
    sq = Scene(None, (Boundary(0, "square", (0, 0, 1)),), CHORDAL)
    with pytest.raises(DomainError):
        llc_check(sq, 1.0)
