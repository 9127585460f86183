import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from carpet_modulus.acceptance import random_continuum, random_fat_disk_configuration
from carpet_modulus.diagnostics import (count_large_meeting_sets, cross_ratio_separation, decay_bound,
                                        family_separation, fatness_estimate, meeting_bound, quasi_round_fit,
                                        quasicircle_constant, ring_fat_bound, select_subannulus,
                                        third_point_select)
from carpet_modulus.errors import ConvergenceError, DomainError
from carpet_modulus.geometry import CHORDAL, EUCLIDEAN, FLAT, Annulus, circle, dist, rectangle
from carpet_modulus.regions import CStarSquare, Disk


def unit_square_k():
    # worst pair sits on opposite sides at (a, 0), (1 - a, 1)
    f = lambda a: -((1 - a) ** 2 + 1) / (1 + (1 - 2 * a) ** 2)  # noqa: E731
    r = minimize_scalar(f, bounds=(0, 0.5), method="bounded", options={"xatol": 1e-12})
    return math.sqrt(-r.fun)


def test_circle_is_one_quasicircle():
    assert quasicircle_constant(circle(0, 1, 256), EUCLIDEAN).k == pytest.approx(1.0, abs=1e-3)


def test_unit_square_constant_matches_analytic_optimum():
    k = quasicircle_constant(rectangle(0, 0, 1, 1), EUCLIDEAN, 512).k
    assert k == pytest.approx(unit_square_k(), rel=2e-3)
    assert k > math.sqrt(5) / 2  # the naive corner-to-midpoint value is not the worst pair


def test_quasicircle_constant_monotone_in_samples():
    ks = [quasicircle_constant(rectangle(0, 0, 2, 1), EUCLIDEAN, n).k for n in (32, 64, 128)]
    assert ks[0] <= ks[1] + 1e-12 <= ks[2] + 2e-12


def test_quasicircle_rejects_few_samples():
    with pytest.raises(DomainError):
        quasicircle_constant(circle(), EUCLIDEAN, 4)


def test_family_separation_depth_one_carpet():
    s = family_separation([rectangle(0, 0, 1, 1), rectangle(1 / 3, 1 / 3, 1 / 3, 1 / 3)], EUCLIDEAN)
    assert s.s == pytest.approx(1 / math.sqrt(2), rel=1e-6)


def test_family_separation_rejects_intersections():
    with pytest.raises(DomainError):
        family_separation([rectangle(0, 0, 1, 1), rectangle(0.5, 0.5, 1, 1)], EUCLIDEAN)


@pytest.mark.parametrize("curve,lam", [(circle(0, 1, 4096), 1.0), (rectangle(0, 0, 1, 1), math.sqrt(2)),
                                       (rectangle(0, 0, 2, 1), math.sqrt(5))])
def test_quasi_round_fit(curve, lam):
    assert quasi_round_fit(curve, EUCLIDEAN).lam == pytest.approx(lam, rel=1e-4)


def test_fatness_estimates():
    assert fatness_estimate(Disk(0.3, 0.5), CHORDAL, trials=24).mu >= 0.23
    assert fatness_estimate(CStarSquare(0.5, 1.0, 0.5), FLAT, trials=24).mu >= 1 / 32 - 0.005
    thin = fatness_estimate(rectangle(0, 0, 1, 0.01), EUCLIDEAN, trials=24).mu
    assert thin < 0.02


@given(st.integers(0, 10_000))
def test_separation_sandwich_on_sampled_continua(seed):
    rng = np.random.default_rng(seed)
    E = random_continuum(rng, 0, 1.0, samples=16)
    F = random_continuum(rng, 6 + 2j, 1.0, samples=16)
    dEF = dist(E[:, None], F[None, :], EUCLIDEAN).min()
    delta = dEF / min(dist(E[:, None], E[None, :], EUCLIDEAN).max(), dist(F[:, None], F[None, :], EUCLIDEAN).max())
    D = cross_ratio_separation(E, F, EUCLIDEAN)
    assert delta * (1 - 1e-12) <= D <= 2 * delta * (1 + 1e-12)


def test_ring_fat_bound():
    assert ring_fat_bound(0.25) == 64
    assert ring_fat_bound(1.0) == 4


@given(st.integers(0, 10_000))
def test_subannulus_clauses_hold(seed):
    A, disks = random_fat_disk_configuration(np.random.default_rng(seed))
    res = select_subannulus(A, disks, 0.25)
    assert all(res.clauses(A, 64))
    assert set(res.removed) <= set(disks)


def test_subannulus_removes_a_wide_set():
    A = Annulus(0j, 1e-6, 0.9, CHORDAL)
    wide = Disk(0.05, 0.045)  # spans |z| in 0.005..0.095
    res = select_subannulus(A, {7: wide}, 0.25)
    chordal = lambda x: 2 * x / math.sqrt(1 + x * x)  # noqa: E731
    assert res.removed == (7,)
    assert res.annulus.r == pytest.approx(chordal(0.005), rel=1e-9)
    assert res.annulus.R == pytest.approx(chordal(0.095), rel=1e-9)
    assert all(res.clauses(A, 64))


@pytest.mark.parametrize("factor,removed", [(0.999, ()), (1.001, (0,))])
def test_subannulus_threshold(factor, removed):
    A = Annulus(0j, math.exp(-8), 1.0, EUCLIDEAN)
    v = factor * A.width ** (1 / 3)
    # points at radii 0.01 and 0.01 e^v give relative width exactly v
    K = np.array([0.01, 0.01 * math.exp(v) * 1j])
    res = select_subannulus(A, {0: K}, 0.25)
    assert res.removed == removed


def test_subannulus_needs_width_one():
    with pytest.raises(DomainError):
        select_subannulus(Annulus(0j, 0.5, 0.9, CHORDAL), {}, 0.25)


def test_meeting_and_decay_bounds():
    assert meeting_bound(0.5, 0.5) == 256
    assert meeting_bound(10, 10) == 1
    vals = [decay_bound(t, 0.25, 2.0) for t in (12, 1e3, 1e9)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[0] <= 2.0
    with pytest.raises(DomainError):
        decay_bound(4, 0.25, 1.0)


def test_count_large_meeting_sets_within_bound():
    rng = np.random.default_rng(3)
    A = Disk(0, 1.0)
    sets = {}
    while len(sets) < 40:
        c = complex(*rng.uniform(-3, 3, 2))
        d = Disk(c, float(rng.uniform(0.05, 0.6)))
        if all(abs(d.center - e.center) > d.radius + e.radius for e in sets.values()):
            sets[len(sets)] = d
    s = family_separation({k: v.boundary() for k, v in sets.items()}, EUCLIDEAN).s
    for t in (0.1, 0.3):
        assert count_large_meeting_sets(A, sets, s, t) <= meeting_bound(s, t)


def test_third_point_select():
    assert third_point_select(0, 10, [0.1, 5, 9], [20, 10.2, 30], 2, 2) == 3
    with pytest.raises(DomainError):
        third_point_select(0, 0, [0, 0.1, 5], [1, 2, 3], 2, 2)
