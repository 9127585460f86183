import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from carpet_modulus.acceptance import random_enumerable_grid
from carpet_modulus.carpets import Boundary, CylinderDomain, Scene, carpet_to_scene, cylinder_from_height, standard_carpet
from carpet_modulus.errors import DomainError, ResourceError
from carpet_modulus.geometry import TWO_PI
from carpet_modulus.grid import FamilySpec, discretize, fill_residual, left_right
from carpet_modulus.modulus import (EPS, admissibility_sum, carpet_modulus, classical_modulus, extremal_distances,
                                    loewner_profile, modulus, modulus_monotonicity_suite, transboundary_modulus)
from carpet_modulus.oracle import brute_force_modulus, ldp
from carpet_modulus.qp import ActiveSetQP, InteriorPointQP, make_qp


# -- pool QP -----------------------------------------------------------------

def random_pool(seed, m=30, n=12):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0, 1, (m, n)) * (rng.uniform(size=(m, n)) < 0.4)
    A[np.arange(m), rng.integers(0, n, m)] += 0.5  # no empty rows
    A[m // 2:] = A[: m - m // 2]  # duplicated rows make the dual degenerate
    return A


@given(st.integers(0, 10_000))
def test_pool_solvers_match_least_distance_oracle(seed):
    A = random_pool(seed)
    ref = ldp(A, np.ones(len(A)))
    for cls in (InteriorPointQP, ActiveSetQP):
        qp = cls(A.shape[1])
        qp.add_rows(sp.csr_matrix(A))
        y = qp.solve()
        assert (A @ y).min() >= 1 - 1e-9
        assert y @ y == pytest.approx(ref @ ref, rel=1e-7)


def test_pool_warm_start_and_pruning():
    A = random_pool(1, m=40)
    qp = ActiveSetQP(A.shape[1])
    qp.add_rows(sp.csr_matrix(A[:20]))
    qp.solve()
    qp.add_rows(sp.csr_matrix(A[20:]))
    y = qp.solve()
    keep = qp.passive | (A @ y - 1 < 1e-6)
    qp.keep_rows(keep)
    assert qp.solve() @ qp.solve() == pytest.approx(y @ y, rel=1e-10)


def test_pool_rejects_empty_rows():
    qp = make_qp(3)
    with pytest.raises(DomainError):
        qp.add_rows(sp.csr_matrix(np.array([[0.0, 0.0, 0.0]])))
    with pytest.raises(DomainError):
        make_qp(3, "simplex")


# -- exact formulas ------------------------------------------------------------

@pytest.mark.parametrize("W,L", [(1, 1), (1, 2), (2, 1)])
def test_rectangle_modulus_is_width_over_length(W, L):
    g = discretize(Scene(Boundary(None, "rect", (0, 0, L, W)), ()), 1 / 16)
    r = classical_modulus(g, left_right(g, (0, 0, L, W)))
    assert r.value == pytest.approx(W / L, rel=1e-6)


def test_annulus_modulus():
    g = discretize(CylinderDomain(1.0, math.e).to_scene(), 1 / 32)
    r = classical_modulus(g, FamilySpec(0, 1))
    assert r.value == pytest.approx(TWO_PI, rel=1e-6)
    assert r.gap_estimate <= EPS


def test_transboundary_cylinder_weights():
    d = cylinder_from_height(1.0, [(0.5, 0.5, 1.0)])
    r = transboundary_modulus(discretize(d.to_scene(), 1 / 32), FamilySpec(0, 1))
    assert r.value == pytest.approx(TWO_PI, rel=0.02)
    assert r.weights[2] == pytest.approx(0.5, rel=0.1)


def test_carpet_mode_zero_boundary_weights():
    d = cylinder_from_height(1.0, [(0.5, 0.5, 1.0)])
    g = fill_residual(discretize(d.to_scene(), 1 / 16))
    r = carpet_modulus(g, FamilySpec(0, 1, "closed"))
    assert r.weights[0] == 0.0 and r.weights[1] == 0.0
    assert r.value == pytest.approx(TWO_PI, rel=0.1)


def test_carpet_mode_with_residual_cells_is_infeasible():
    d = cylinder_from_height(1.0, [(0.5, 0.5, 1.0)])
    r = carpet_modulus(discretize(d.to_scene(), 1 / 16), FamilySpec(0, 1))
    assert r.infeasible and math.isinf(r.value)


def test_kept_paths_are_nearly_admissible():
    g = discretize(carpet_to_scene(standard_carpet(1)), 1 / 27)
    fam = FamilySpec(0, 1)
    r = transboundary_modulus(g, fam, keep_paths=True)
    nx = g.shape[1]
    sums = [admissibility_sum(g, r.distribution, [divmod(c, nx) for c in p], fam.convention) for p in r.paths]
    assert min(sums) >= 1 - EPS - 1e-9
    assert r.distribution.total_mass(g) == pytest.approx(r.value, rel=1e-9)


def test_extremal_distances_on_annulus():
    g = discretize(CylinderDomain(1.0, math.e).to_scene(), 1 / 32)
    fam = FamilySpec(0, 1)
    r = classical_modulus(g, fam)
    dS, dT = extremal_distances(g, fam, r.distribution)
    mid = g.labels == -1
    # every interior cell lies on a near-extremal radial path
    assert np.allclose((dS + dT)[mid], 1.0, atol=0.02)


def test_empty_family_and_bad_selectors():
    s = Scene(None, (Boundary(0, "square", (0, 0, 1)), Boundary(2, "square", (3, 0, 1))))
    g = discretize(s, 1 / 8)
    region = g.labels == 0
    r = classical_modulus(g, FamilySpec(0, 2, region=region))
    assert r.empty_family and r.value == 0.0
    with pytest.raises(DomainError):
        modulus(g, FamilySpec(0, 2), "conformal")
    with pytest.raises(DomainError):
        transboundary_modulus(g, FamilySpec(0, 2), hole_labels=[9])


# -- oracle ----------------------------------------------------------------------

@given(st.integers(0, 100_000), st.sampled_from(["classical", "transboundary", "carpet"]))
def test_solver_matches_oracle(seed, mode):
    g, fam = random_enumerable_grid(np.random.default_rng(seed), mode)
    try:
        o = brute_force_modulus(g, fam, mode)
    except ResourceError:
        return
    m = modulus(g, fam, mode, eps=1e-10)
    if math.isinf(o.value):
        assert math.isinf(m.value)
    else:
        assert m.value == pytest.approx(o.value, abs=1e-6)


def test_active_set_route_matches_oracle():
    g, fam = random_enumerable_grid(np.random.default_rng(11), "transboundary")
    o = brute_force_modulus(g, fam, "transboundary")
    m = transboundary_modulus(g, fam, eps=1e-10, qp_method="active-set")
    assert m.value == pytest.approx(o.value, abs=1e-6)


def test_oracle_size_cap():
    g = discretize(carpet_to_scene(standard_carpet(1)), 1 / 27)
    with pytest.raises(ResourceError):
        brute_force_modulus(g, FamilySpec(0, 1))


# -- structure -------------------------------------------------------------------

def test_monotonicity_suite():
    g = discretize(carpet_to_scene(standard_carpet(1)), 1 / 18)
    out = modulus_monotonicity_suite(g)
    for key in ("subfamily_le_full", "transboundary_le_classical", "more_weights_not_larger", "deterministic"):
        assert out[key], key


def test_loewner_profile_envelope():
    g = discretize(Scene(Boundary(None, "square", (0, 0, 1)), ()), 1 / 16)
    scatter, env = loewner_profile(g, trials=6, seed=2)
    assert len(scatter) == 6
    mods = [m for _, m in env]
    assert all(a >= b for a, b in zip(mods, mods[1:]))
    assert all(m > 0 for _, m in scatter)
