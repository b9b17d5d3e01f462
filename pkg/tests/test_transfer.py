import numpy as np
import pytest

from artifact import CircleHomeo, Grid, TrigPoly, preset
from artifact.measures import uniform
from artifact.transfer import (CircleDensity, NotExpanding, TransferOperator, preimage_tree,
                               preimages, srb_density, survival_from_weights, transfer_constants,
                               tree_mean_density, wasserstein_circle)

import oracles


def test_preimages_solve_the_equation(rng):
    f = preset("expanding")
    y = rng.random(100)
    x = preimages(f, y)
    assert x.shape == (100, 2)
    assert np.allclose(np.mod(f.lift(x) - y[:, None] + 0.5, 1.0) - 0.5, 0, atol=1e-12)
    assert np.all(np.abs(np.diff(np.sort(x, axis=1), axis=1)) > 1e-6)


def test_not_expanding():
    with pytest.raises(NotExpanding):
        TransferOperator(CircleHomeo(TrigPoly.sin(0.1, 1)), 64)


def test_doubling_density_is_one():
    phi = srb_density(preset("doubling"), M=1024)
    assert np.max(np.abs(phi.values - 1)) < 1e-8


def test_transfer_preserves_integral():
    op = TransferOperator(preset("expanding"), 2048)
    phi = CircleDensity.constant(2048)
    for _ in range(5):
        phi = op.apply(phi, renormalize=False)
        assert phi.integral() == pytest.approx(1.0, abs=1e-6)


def test_srb_density_fixed_point():
    f = preset("expanding")
    op = TransferOperator(f, 4096)
    phi = srb_density(f, op=op)
    assert op.apply(phi).sup_distance(phi) < 1e-10
    assert phi.integral() == pytest.approx(1.0)
    assert phi.values.min() > 0.5


def test_transfer_constants_bound_holds():
    f = preset("expanding")
    op = TransferOperator(f, 2048)
    phi0 = srb_density(f, op=op)
    c = transfer_constants(f, phi0, samples=20_000)
    assert c.lam > 1 and 0 < c.tau < 1
    one = CircleDensity.constant(2048)
    for m, phi in enumerate(op.iterates(one, 10)):
        assert phi.sup_distance(phi0) <= c.bound(m)
    d = c.as_dict()
    assert set(d) >= {"lambda", "tau", "Delta", "C0", "one_minus_Lambda"}


def test_density_cdf():
    phi = CircleDensity(np.array([0.5, 1.5]))  # piecewise linear, periodic
    assert phi.cdf(np.array([0.0]))[0] == 0.0
    assert phi.cdf(np.array([1.0]))[0] == pytest.approx(1.0)
    t = np.linspace(0, 1, 101)
    num = np.array([np.mean(phi(np.linspace(0, s, 20001))) * s for s in t])
    assert np.allclose(phi.cdf(t), num, atol=1e-4)


def test_wasserstein_examples():
    g = Grid(1, 10)
    assert wasserstein_circle(uniform(g), "lebesgue") == pytest.approx(1 / 40, abs=1e-4)
    a = (np.array([0.1]), np.array([1.0]))
    b = (np.array([0.9]), np.array([1.0]))
    assert wasserstein_circle(a, b) == pytest.approx(0.2)
    assert wasserstein_circle(a, a) == 0.0


def _nested(ps, idx=()):
    """Nested (p, children) structure for the tree oracle."""
    level = len(idx)
    if level == len(ps):
        return []
    w = ps[level][idx] if idx else ps[level]
    return [(float(w[j]), _nested(ps, idx + (j,))) for j in range(w.shape[-1])]


@pytest.mark.parametrize("y", [0.1, 0.37, 0.8])
def test_tree_density_matches_exhaustive_oracle(y):
    f = preset("expanding")
    _, ps = preimage_tree(f, np.array(y), 2)  # 2 + 4 = 6 edges
    tree = _nested(ps)
    ref = oracles.tree_survival(tree)
    assert tree_mean_density(f, np.array(y), 2) == pytest.approx(ref, abs=1e-12)
    assert survival_from_weights(ps) == pytest.approx(ref, abs=1e-12)


def test_tree_density_doubling():
    f = preset("doubling")
    assert tree_mean_density(f, np.array([0.3]), 1)[0] == pytest.approx(0.75)
