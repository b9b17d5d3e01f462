import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from artifact.grid import Grid, round_half_down, torus_distance


@pytest.mark.parametrize("x,expected", [(0.5, 0), (1.5, 1), (-0.5, -1), (0.49, 0), (0.51, 1),
                                        (2.0, 2), (-1.5, -2)])
def test_round_half_down_ties(x, expected):
    assert round_half_down(x) == expected


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_round_half_down_window(x):
    k = round_half_down(x)
    assert k - 0.5 < x <= k + 0.5


def test_round_half_down_array_dtype():
    out = round_half_down(np.array([0.5, 1.5, 2.6]))
    assert out.dtype == np.int64
    assert out.tolist() == [0, 1, 3]


def test_grid_basics():
    g = Grid(2, 7)
    assert g.q == 49 and g.mesh == pytest.approx(1 / 7)
    idx = g.index(np.arange(g.q))
    assert np.array_equal(g.ordinal(idx), np.arange(g.q))
    assert g.ordinal(np.array([3, 2])) == 3 + 7 * 2


def test_grid_rejects_bad_args():
    with pytest.raises(ValueError):
        Grid(3, 4)
    with pytest.raises(ValueError):
        Grid(1, 0)
    with pytest.raises(IndexError):
        Grid(2, 4).index(16)


def test_projection_wraps_and_ties():
    g = Grid(1, 10)
    assert int(g.project(0.05)) == 0       # tie goes down
    assert int(g.project(0.96)) == 0       # wraps to 0
    assert int(g.project(-0.04)) == 0
    g2 = Grid(2, 4)
    assert g2.project(np.array([0.125, 0.99])).tolist() == [0, 0]


@given(st.integers(1, 64), st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_projection_is_nearest(N, x, y):
    g = Grid(2, N)
    p = g.point(g.project(np.array([x, y])))
    assert torus_distance(p, np.array([x, y])) <= 0.5 / N + 1e-12


def test_torus_distance_wraps():
    assert torus_distance(np.array([0.05, 0.0]), np.array([0.95, 0.0])) == pytest.approx(0.1)
    assert torus_distance(np.array([0.1, 0.1]), np.array([0.9, 0.9]), ord=2) == pytest.approx(
        math.hypot(0.2, 0.2))
