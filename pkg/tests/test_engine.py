import numpy as np
import pytest

from artifact import Grid, preset
from artifact.engine import (BudgetExceeded, DiscreteMap, discretize, floyd_orbit,
                             full_sweep_analysis, image_counts, is_bijection, is_single_cycle,
                             lax_cyclic_approximation, orbit_cycle, permutation_order,
                             rate_of_injectivity, recurrence_sweep, snake_order)

import oracles

ORACLE_MAPS = ["f1", "f3", "f5", "g1", "h1", "cat", "anosov", "expanding", "shear-cos"]


@pytest.mark.parametrize("name", ORACLE_MAPS)
@pytest.mark.parametrize("N", [1, 2, 3, 5, 8, 13, 16])
def test_table_matches_scalar_oracle(name, N):
    m = preset(name)
    d = discretize(m, Grid(m.dim, N))
    assert d.table.tolist() == oracles.table_by_hand(m, N, m.dim)


@pytest.mark.parametrize("name", ORACLE_MAPS)
@pytest.mark.parametrize("N", [4, 7, 11, 16])
def test_functional_graph_matches_oracle(name, N):
    m = preset(name)
    d = discretize(m, Grid(m.dim, N))
    a = full_sweep_analysis(d)
    cycles, cyc_of, tails = oracles.functional_graph(d.table.tolist())
    got = {frozenset(c.tolist()): b for c, b in a.cycles()}
    assert got == cycles
    assert a.tail.tolist() == tails
    assert a.recurrent_count == sum(len(c) for c in cycles)
    assert a.stabilization_time == max(tails)
    for x in range(0, d.grid.q, 3):
        rec = floyd_orbit(d, x)
        assert rec.tail == tails[x]
        assert rec.cycle == len(cyc_of[x])
        assert rec.representative == min(cyc_of[x])


def test_on_the_fly_equals_table():
    m = preset("f5")
    g = Grid(2, 64)
    lazy = DiscreteMap(m, g, budget=10)
    assert not lazy.materializable
    full = discretize(m, g)
    o = np.arange(0, g.q, 37)
    assert np.array_equal(lazy.image(o), full.table[o])
    for x in (0, 100, 4000):
        assert floyd_orbit(lazy, x) == floyd_orbit(full, x)
        assert np.array_equal(orbit_cycle(lazy, x), orbit_cycle(full, x))
    with pytest.raises(BudgetExceeded):
        lazy.table


def test_permutation_order_and_bijection():
    d = discretize(preset("cat"), Grid(2, 610))
    assert is_bijection(d)
    assert permutation_order(d) == 60
    assert permutation_order(discretize(preset("expanding"), Grid(1, 100))) is None


def test_rate_of_injectivity_counts():
    d = discretize(preset("expanding"), Grid(1, 1000))
    counts = image_counts(d, 3)
    assert counts == sorted(counts, reverse=True)
    assert rate_of_injectivity(d, 1) == counts[0] / 1000
    ident = discretize(preset("identity"), Grid(2, 9))
    assert rate_of_injectivity(ident, 2) == 1.0


def test_recurrence_sweep_rows():
    rows = recurrence_sweep(preset("f3"), [8, 16])
    assert [r["N"] for r in rows] == [8, 16]
    assert all(0 < r["degree_of_recurrence"] <= 1 for r in rows)


def test_snake_order_is_adjacent():
    N = 6
    r = snake_order(N)
    assert sorted(r.tolist()) == list(range(N * N))
    i0, i1 = r % N, r // N
    steps = np.abs(np.diff(i0)) + np.abs(np.diff(i1))
    assert np.all(steps == 1)


@pytest.mark.parametrize("name,N", [("f3", 12), ("f3", 16), ("g1", 10), ("shear-cos", 16),
                                    ("cat", 9), ("identity", 8)])
def test_lax_single_cycle_contract(name, N):
    r = lax_cyclic_approximation(preset(name), Grid(2, N))
    assert is_single_cycle(r.permutation)
    assert sorted(r.permutation.tolist()) == list(range(N * N))
    assert r.max_rank_shift <= 2
    assert r.max_cell_shift <= 2 + r.matching_radius


def test_lax_rejects_dissipative():
    from artifact.engine import MatchingError

    with pytest.raises(MatchingError):
        lax_cyclic_approximation(preset("f1"), Grid(2, 8))


def test_from_table_roundtrip():
    d = DiscreteMap.from_table(np.array([1, 2, 0, 0]))
    a = full_sweep_analysis(d)
    assert a.n_cycles == 1 and a.cycle_len.tolist() == [3] and a.basin.tolist() == [4]
