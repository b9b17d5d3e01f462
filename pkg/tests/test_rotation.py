from fractions import Fraction

import numpy as np
import pytest

from artifact import Grid, preset
from artifact.rotation import (NotHomotopicToIdentity, UNIT_SQUARE, asymptotic_union,
                               convex_hull, convex_hull_exact, discretized_rotation_set,
                               hausdorff_convex, hausdorff_to_unit_square, mean_rotation_vector,
                               observable_sample, orbit_rotation_vector)
from artifact.maps import Translation

import oracles


@pytest.mark.parametrize("name", ["g1", "g3", "rot-f1", "f3", "h1"])
@pytest.mark.parametrize("N", [4, 9, 16])
def test_discretized_vectors_match_oracle(name, N):
    m = preset(name)
    s = discretized_rotation_set(m, Grid(2, N))
    got = {(Fraction(int(p[0]), int(q)), Fraction(int(p[1]), int(q)))
           for p, q in zip(s.numerators, s.periods)}
    assert got == oracles.rotation_vectors(m, N)


def test_translation_rotation_vector():
    m = Translation((0.25, 0.1))
    v = orbit_rotation_vector(m, np.array([[0.3, 0.4]]), 40)
    assert np.allclose(v, [[0.25, 0.1]])
    assert np.allclose(mean_rotation_vector(m, 16), [0.25, 0.1])
    s = discretized_rotation_set(m, 20)
    assert s.distinct() == 1
    assert s.hull == [(Fraction(1, 4), Fraction(1, 10))]


def test_rejects_non_identity_homotopy():
    with pytest.raises(NotHomotopicToIdentity):
        orbit_rotation_vector(preset("cat"), np.zeros((1, 2)), 3)


def test_observable_sample_deterministic():
    m = preset("g1")
    a = observable_sample(m, 5, 50, seed=3)
    b = observable_sample(m, 5, 50, seed=3)
    assert np.array_equal(a.vectors, b.vectors) and np.array_equal(a.starts, b.starts)


def test_hulls():
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [0.2, 0.7]])
    h = convex_hull(pts)
    assert len(h) == 4
    assert hausdorff_to_unit_square(h) == 0.0
    hx = convex_hull_exact(np.array([[1, 0], [0, 1], [1, 1]]), np.array([2, 2, 2]))
    assert set(hx) == {(Fraction(1, 2), 0), (0, Fraction(1, 2)), (Fraction(1, 2), Fraction(1, 2))}
    assert hausdorff_convex([(0.0, 0.0)], UNIT_SQUARE) == pytest.approx(2**0.5)


def test_asymptotic_union_concatenates():
    m = preset("g1")
    u = asymptotic_union(m, [8, 9])
    a = discretized_rotation_set(m, 8)
    b = discretized_rotation_set(m, 9)
    assert len(u) == len(a) + len(b)
