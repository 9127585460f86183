import math

import numpy as np
import pytest

from carpet_modulus.carpets import Boundary, Scene, carpet_to_scene, cylinder_from_height, standard_carpet
from carpet_modulus.errors import DomainError, ResolutionError
from carpet_modulus.geometry import EUCLIDEAN, TWO_PI
from carpet_modulus.grid import (EXTERIOR, INTERIOR, FamilySpec, discretize, fill_residual, left_right,
                                 select)


def test_cartesian_grid_has_pad():
    g = discretize(Scene(Boundary(None, "square", (0, 0, 1)), ()), 1 / 16)
    assert g.shape == (18, 18)
    assert (g.labels[:, 0] == EXTERIOR).all() and (g.labels[1:-1, 1:-1] == INTERIOR).all()


def test_carpet_grid_labels():
    g = discretize(carpet_to_scene(standard_carpet(2)), 1 / 54)
    counts = g.hole_cell_counts()
    assert counts[0] == 18 * 18
    assert all(counts[k] == 6 * 6 for k in range(2, 10))
    assert g.interior_components() == 1


def test_logpolar_grid():
    d = cylinder_from_height(1.0, [(0.5, 0.5, 1.0)])
    g = discretize(d.to_scene(), 1 / 32)
    assert g.coords == "logpolar" and g.periodic_y
    assert g.shape == (round(TWO_PI * 32), 34)
    assert (g.labels[:, 0] == 0).all() and (g.labels[:, -1] == 1).all()
    assert g.hole_cell_counts()[2] == pytest.approx(0.25 / (g.hx * g.hy), rel=0.1)


def test_seed_offsets_are_reproducible():
    s = carpet_to_scene(standard_carpet(1))
    a, b = discretize(s, 1 / 27, seed=4), discretize(s, 1 / 27, seed=4)
    assert np.array_equal(a.labels, b.labels) and a.x0 == b.x0
    assert discretize(s, 1 / 27, seed=5).x0 != a.x0


def test_resolution_errors():
    s = carpet_to_scene(standard_carpet(2))
    with pytest.raises(ResolutionError):
        discretize(s, 1 / 18)
    with pytest.raises(DomainError):
        discretize(s, 0)


def test_fill_residual_covers_everything():
    g = discretize(carpet_to_scene(standard_carpet(1)), 1 / 27)
    f = fill_residual(g, 3)
    assert not (f.labels == INTERIOR).any()
    assert len(f.synthetic) > 0
    sizes = np.bincount(f.labels[f.labels >= 2].ravel())
    assert sizes[sizes > 0].max() <= 9


def test_selectors():
    g = discretize(Scene(Boundary(None, "square", (0, 0, 1)), ()), 1 / 8)
    fam = left_right(g)
    assert select(g, fam.E).sum() == 8 and select(g, fam.F).sum() == 8
    assert select(g, (0, 0, 0.5, 1)).sum() == 4 * 8
    with pytest.raises(DomainError):
        select(g, 7)
    with pytest.raises(DomainError):
        select(g, "left")
    with pytest.raises(DomainError):
        FamilySpec(0, 1, "half-open")
