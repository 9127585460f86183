import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carpet_modulus.acceptance import ROUND_TRIP_SQUARES
from carpet_modulus.carpets import CylinderDomain, cylinder_from_height
from carpet_modulus.errors import DomainError
from carpet_modulus.geometry import TWO_PI
from carpet_modulus.uniformizer import Layout, Square, layout_compare, layout_validate, uniformize


@pytest.fixture(scope="module")
def round_trip():
    d = cylinder_from_height(1.0, ROUND_TRIP_SQUARES)
    return d, uniformize(d.to_scene(), h=1 / 32, seed=1)


def test_round_trip_recovers_height_and_sides(round_trip):
    d, L = round_trip
    assert L.h_A == pytest.approx(d.h_A, rel=0.05)
    ref = Layout.from_cylinder(d)
    for k, q in ref.squares.items():
        assert L.squares[k].side == pytest.approx(q.side, rel=0.15)
    rep = layout_compare(ref, L)
    assert rep.discrepancy < 0.1
    assert layout_validate(L, tol=1e-6).ok


def test_exact_layout_satisfies_area_identity():
    d = cylinder_from_height(1.0, ROUND_TRIP_SQUARES)
    rep = layout_validate(Layout.from_cylinder(d))
    assert rep.ok and abs(rep.area_residual) < 1e-12 and rep.min_gap > 0


def test_plain_annulus_gives_log_ratio():
    L = uniformize(CylinderDomain(1.0, math.e).to_scene(), h=1 / 32)
    assert L.h_A == pytest.approx(1.0, rel=1e-6)
    assert L.squares == {} and L.residual_fraction == pytest.approx(1.0, rel=1e-6)


def test_validate_flags_overlap_and_band_exit():
    L = Layout(1.0, {2: Square(0.5, 1.0, 0.4), 3: Square(0.5, 1.2, 0.4), 4: Square(0.9, 4.0, 0.4)})
    rep = layout_validate(L)
    assert not rep.ok
    assert set(rep.witness) == {2, 3}
    assert any("band" in p for p in rep.problems)


def test_validate_sees_overlap_across_seam():
    L = Layout(1.0, {2: Square(0.5, 0.05, 0.3), 3: Square(0.5, TWO_PI - 0.05, 0.3)})
    assert not layout_validate(L).ok


@given(st.floats(0, TWO_PI), st.integers(0, 1000))
def test_compare_is_rotation_invariant(alpha, seed):
    rng = np.random.default_rng(seed)
    sq = {k: Square(rng.uniform(0.2, 0.8), rng.uniform(0, TWO_PI), rng.uniform(0.05, 0.3)) for k in range(2, 6)}
    L = Layout(1.0, sq)
    rep = layout_compare(L, L.rotated(alpha))
    assert rep.discrepancy < 1e-9
    assert float(np.cos(rep.rotation + alpha)) == pytest.approx(1.0, abs=1e-9)


def test_compare_rejects_label_mismatch():
    with pytest.raises(DomainError):
        layout_compare(Layout(1.0, {2: Square(0.5, 0, 0.1)}), Layout(1.0, {3: Square(0.5, 0, 0.1)}))


def test_radial_options(round_trip):
    d, L = round_trip
    P = uniformize(d.to_scene(), h=1 / 32, seed=1, radial="potential")
    assert P.h_A == pytest.approx(L.h_A)
    for k in L.squares:
        assert P.squares[k].side == pytest.approx(L.squares[k].side)
        assert abs(P.squares[k].u - L.squares[k].u) < 0.15
    with pytest.raises(DomainError):
        uniformize(d.to_scene(), h=1 / 32, radial="harmonic")
    with pytest.raises(DomainError):
        uniformize(d.to_scene(), inner=0, outer=0)
