import json
import math

import numpy as np
import pytest

from artifact import (CircleExpanding, CircleHomeo, Compose, Displace, Linear2, ShearX,
                      ShearY, Translation, TrigPoly, from_json, identity, preset)
from artifact.maps import is_measure_preserving
from artifact.presets import names
from artifact.trig import tent


def test_trig_eval_and_derivative(rng):
    p = TrigPoly.cos(0.3, 2, 0.1) + TrigPoly.sin(0.2, 5) + 0.7
    x = rng.random(200)
    ref = 0.7 + 0.3 * np.cos(2 * np.pi * 2 * (x + 0.1)) + 0.2 * np.sin(2 * np.pi * 5 * x)
    assert np.allclose(p(x), ref, atol=1e-14)
    h = 1e-6
    assert np.allclose(p.deriv(x), (p(x + h) - p(x - h)) / (2 * h), atol=1e-6)


def test_trig_product_to_sum(rng):
    a = TrigPoly.sin(1.0, 3)
    b = TrigPoly.cos(0.5, 7, 0.2) + 0.1
    x = rng.random(100)
    assert np.allclose((a * b)(x), a(x) * b(x), atol=1e-14)
    sq = a * a
    assert np.allclose(sq(x), np.sin(6 * np.pi * x) ** 2, atol=1e-14)


def test_tent_term():
    assert tent(0.0) == pytest.approx(1.0)
    assert tent(0.5) == pytest.approx(0.0)
    assert tent(0.25) == pytest.approx(0.5)
    t = TrigPoly.tent(2.0, 1)
    assert t(0.75) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        t * t


def test_trig_json_roundtrip(rng):
    p = TrigPoly.cos(0.3, 2, 0.1) + TrigPoly.sin(0.2, 5) + TrigPoly.tent(0.01, 3, 0.2) - 0.4
    q = TrigPoly.from_json(json.loads(json.dumps(p.to_json())))
    x = rng.random(50)
    assert np.allclose(p(x), q(x), atol=1e-14)
    with pytest.raises(ValueError):
        TrigPoly.from_json({"terms": [{"kind": "square", "freq": 1}]})


def test_shears_preserve_measure():
    p = TrigPoly.cos(0.2, 3)
    assert is_measure_preserving(ShearY(p))
    assert is_measure_preserving(Compose([ShearX(p), ShearY(p)]))
    D = Displace(TrigPoly.cos(0.05, 1), TrigPoly(), TrigPoly(), TrigPoly.cos(0.05, 2))
    assert not is_measure_preserving(D)


def test_compose_is_right_to_left(rng):
    a = ShearY(TrigPoly.cos(0.2, 1))
    b = Translation((0.1, 0.0))
    c = Compose([a, b])
    x = rng.random((20, 2))
    assert np.allclose(c.lift(x), a.lift(b.lift(x)))


def test_jacobian_matches_finite_differences(rng):
    m = preset("f5")
    x = rng.random((10, 2))
    h = 1e-6
    J = m.jac(x)
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fd = (m.lift(x + e) - m.lift(x - e)) / (2 * h)
        assert np.allclose(J[..., :, j], fd, atol=1e-5)


def test_homotopy_classes():
    assert np.array_equal(preset("cat").homotopy(), [[0, 1], [1, 1]])
    assert preset("g1").homotopic_to_identity()
    assert not preset("f4").homotopic_to_identity()
    assert preset("expanding").homotopy()[0, 0] == 2
    with pytest.raises(ValueError):
        Linear2(np.array([[0.5, 0.0], [0.0, 2.0]])).homotopy()


def test_every_preset_builds_and_roundtrips(rng):
    for name in names():
        m = preset(name)
        x = rng.random((8, m.dim)) if m.dim == 2 else rng.random(8)
        y = from_json(json.loads(json.dumps(m.to_json())))
        assert np.allclose(m.lift(x), y.lift(x), atol=1e-12), name
    with pytest.raises(KeyError):
        preset("no-such-map")


def test_circle_maps():
    f = CircleExpanding(2, TrigPoly.cos(0.1, 1))
    assert f.min_derivative() > 1
    with pytest.raises(ValueError):
        CircleExpanding(1, TrigPoly())
    h = CircleHomeo(TrigPoly.sin(0.05, 1))
    assert h.homotopic_to_identity()


def test_identity_and_lowering(rng):
    from artifact import _kernels as K

    m = identity(2)
    x = rng.random((5, 2))
    assert np.allclose(m(x), x)
    f = preset("f1")
    ops, params = f.program()
    got = np.array([K.lift_point(ops, params, p[0], p[1]) for p in x])
    assert np.allclose(got, f.lift(x), atol=1e-13)


def test_anosov_matrix():
    a = preset("anosov")
    assert np.allclose(a.lift(np.array([1.0, 0.0])), [2.0, 1.0])
    assert math.isclose(abs(np.linalg.det(a.jac(np.zeros((1, 2)))[0])), 1.0)
