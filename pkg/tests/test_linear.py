import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artifact import linear as L
from artifact import preset

import oracles


def test_apply_hat_examples():
    assert L.apply_hat(L.F0_HALF, np.array([1, 0])).tolist() == [0, 0]  # tie goes down
    assert L.apply_hat(L.F0_HALF, np.array([0, 0])).tolist() == [0, 0]
    x = np.array([[3, -7], [10, 4]])
    assert np.array_equal(L.apply_hat(np.eye(2), x), x)
    assert np.array_equal(L.apply_hat([[2, 1], [1, 1]], x), x @ np.array([[2, 1], [1, 1]]).T)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=50)
def test_apply_hat_error_bound(a, b, c, d):
    A = np.array([[a, b], [c, d]])
    x = np.array([[5, -2], [0, 9], [-13, 4]])
    err = L.apply_hat(A, x) - x @ A.T
    assert np.all(err > -0.5 - 1e-12) and np.all(err <= 0.5 + 1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_pattern_counts_match_oracle(seed):
    rng = np.random.Generator(np.random.Philox(seed))
    mats = L.random_sl2(rng, 2)
    R = 6
    ref = oracles.pattern([A.tolist() for A in mats], R)
    r = L.sequence_rate(mats, R, diagnostic=False)
    assert r.counts[-1] == len(ref)
    win = L.pattern_window(mats[:1], 3)
    full = oracles.pattern([mats[0].tolist()], 40)
    assert {tuple(p) for p in win.tolist()} == {p for p in full if max(map(abs, p)) <= 3}


def test_rates_identity_and_monotone(rng):
    assert L.sequence_rate([np.eye(2)], 20).tau == 1.0
    seq = L.random_sl2(rng, 6)
    taus = L.sequence_rate(seq, 60, diagnostic=False).taus
    assert all(a >= b for a, b in zip(taus, taus[1:]))


def test_f0_rate_and_quadrants():
    assert abs(L.sequence_rate([L.F0_HALF], 300).tau - 0.5) < 0.01
    assert abs(L.sequence_rate([L.F0], 300).tau - 0.5) < 0.01
    assert abs(L.sequence_rate([(L.F0, [0.2, 0.1])], 300).tau - 0.5) < 0.01
    assert abs(L.sequence_rate([(L.F0, [0.2, 0.7])], 300).tau - 1.0) < 0.01


def test_difference_table_on_lattice():
    F = L.lattice_indicator([[3, 0], [0, 1]], 30)
    t = L.difference_table(F, 4)
    assert t.rho((0, 0)) == 1.0
    for vx in range(-4, 5):
        for vy in range(-4, 5):
            assert t.rho((vx, vy)) == (1.0 if vx % 3 == 0 else 0.0)


def test_difference_symmetry(rng):
    A = L.random_sl2(rng, 1)[0]
    R, V = 150, 6
    t = L.difference_table(L.pattern_indicator([A], R), V)
    r = t.rho()
    assert np.max(np.abs(r - r[::-1, ::-1])) <= 2 * V / R


def test_difference_counts_oracle(rng):
    A = L.random_sl2(rng, 1)[0]
    R, V = 10, 2
    F = L.pattern_indicator([A], R)
    t = L.difference_table(F, V)
    pts = {tuple(p) for p in np.argwhere(F) - R}
    inner = {p for p in pts if max(map(abs, p)) <= R - V}
    for vx in range(-V, V + 1):
        for vy in range(-V, V + 1):
            ref = sum((x + vx, y + vy) in pts for x, y in inner)
            assert t.counts[vx + V, vy + V] == ref


@pytest.mark.parametrize("k", [3, 5])
def test_minkowski_equality_case(k):
    F = L.lattice_indicator([[k, 0], [0, 1]], 40)
    t = L.difference_table(F, k)
    res = L.minkowski_check(t, Fraction(1, k), L.stripe_set(k), exact=True)
    assert res.lhs == 1 and res.rhs == 1 and res.equality
    assert len(L.half_set(L.stripe_set(k))) == k


def test_minkowski_trivial_and_asymmetric():
    t = L.difference_table(np.ones((21, 21), bool), 3)
    S = L.box_points(3)
    res = L.minkowski_check(t, 1, S, exact=True)
    assert res.lhs == 49 and res.rhs == 9
    with pytest.raises(ValueError):
        L.minkowski_check(t, 1, [(1, 0)])


def test_hajos():
    P, B = L.hajos_witness([[1, 0.5], [0, 1]])
    assert np.array_equal(B, np.eye(2))
    assert L.hajos_witness(L.rotation(math.pi / 4)) is None
    assert L.mean_rate_geometric(L.rotation(math.pi / 4), 200).value < 1
    # A = U S with U unit upper triangular and S in SL2(Z): B = S^-1 is a witness
    S = np.array([[2, 1], [1, 1]])
    A = np.array([[1, 0.3719], [0, 1]]) @ S
    P, B = L.hajos_witness(A)
    M = P @ A @ B
    assert abs(M[1, 0]) < 1e-9 and abs(M[0, 0] - 1) < 1e-9 and abs(M[1, 1] - 1) < 1e-9
    with pytest.raises(ValueError):
        L.hajos_witness([[2, 0], [0, 1]])


def test_mean_rate_geometry():
    assert L.mean_rate_geometric(np.eye(2), 50).value == 1.0
    th = math.pi / 4
    assert abs(L.mean_rate_geometric(L.rotation(th)).value - (2 * math.sqrt(2) - 2)) < 0.005
    lat = np.array([[0.8, 0.417], [0.0, 1.25]])
    assert abs(L.mean_rate_geometric(lat).value - 0.8) < 0.005


@pytest.mark.parametrize("A", [L.F0_HALF, np.diag([2.0, 0.5]), np.eye(2)])
def test_fiber_cardinality_structured(A, rng):
    rep = L.fiber_cardinality_check(A, rng.integers(-500, 500, (300, 2)))
    assert rep.passed, rep.mismatches


def test_fiber_values_f0(rng):
    A = L.F0_HALF
    pts = rng.integers(-50, 50, (100, 2))
    img = L.apply_hat(A, pts)
    resid = pts @ A.T - img
    assert set(L.psi(A, -resid, strict=False).tolist()) <= {1, 2}


def test_weighted_projection(rng):
    assert L.weighted_projection([0.25]) == {(0,): 0.75, (1,): 0.25}
    assert L.weighted_projection([0.5, 0.5]) == {(0, 0): 0.25, (1, 0): 0.25, (0, 1): 0.25,
                                                 (1, 1): 0.25}
    assert L.weighted_projection([3.0, -2.0]) == {(3, -2): 1.0}
    for u in rng.normal(0, 5, (1000, 2)):
        assert abs(sum(L.weighted_projection(u).values()) - 1) < 1e-12


def test_cube_union_trivial_cases():
    assert L.cube_union_density([np.eye(2)], 2000).value == 1.0
    assert abs(L.cube_union_density([L.F0_HALF], 4000).value - 1.0) < 0.02
    with pytest.raises(ValueError):
        L.cube_union_density([np.eye(2)] * 5, 10)


def test_predicted_variance_forms():
    assert L.predicted_variance([2, 2], printed=True)[0, 0] == pytest.approx(5 / 3)
    assert L.predicted_variance([2, 2])[0, 0] == pytest.approx(5 / 12)


def test_roundoff_identity_is_degenerate():
    r = L.roundoff_statistics([1.0], 100)
    assert r.eps_range == (0.0, 0.0)
    assert r.variance[0, 0] == 0.0
    assert r.non_generic


def test_roundoff_matches_recurrence_prediction(rng):
    lam = rng.uniform(1.1, 2.0, 3)
    r = L.roundoff_statistics(lam, 20000)
    assert not r.non_generic
    assert r.eps_range[0] >= -0.5 and r.eps_range[1] <= 0.5
    assert abs(r.variance[0, 0] / r.predicted[0, 0] - 1) < 0.05
    assert max(r.ks) < 0.02


def test_roundoff_oracle_small():
    lam = [1.37, 1.81]
    R = 50
    r = L.roundoff_statistics(lam, R, discrepancy=False)
    E = []
    for x in range(-R, R + 1):
        y = x
        for l in lam:
            y = oracles.p_round(l * y)
        E.append(y - lam[0] * lam[1] * x)
    assert r.variance[0, 0] == pytest.approx(np.var(E), rel=1e-9)


def test_roundoff_matrix_case(rng):
    seq = L.random_sl2(rng, 2)
    r = L.roundoff_statistics(seq, 150)
    assert r.variance.shape == (2, 2) and r.discrepancy is None
    assert len(r.ks) == 4


def test_localglobal_linear_is_constant():
    from artifact import Linear2

    A = np.array([[1.3127, 0.4411], [0.2259, 0.8376]])
    A = A / math.sqrt(np.linalg.det(A))
    e = L.localglobal_estimate(Linear2(A), 1, grid=2, R=40)
    assert e.value == pytest.approx(L.sequence_rate([A], 40).tau)
    assert L.localglobal_estimate(preset("identity"), 1, grid=2, R=10).value == 1.0
