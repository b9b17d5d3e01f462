"""Composition trees of torus and circle maps.

Every node carries an exact lift ``F : R^n -> R^n`` with
``F(x + v) = F(x) + H v`` for integer ``v`` (``H`` the homotopy matrix), and a
closed-form Jacobian.  ``Compose([A, B, C])`` means ``A o B o C``: the list is
applied right to left, like written function composition.

Points are float arrays whose trailing axis has length ``n`` (n = 2 for the
torus); circle maps take plain float arrays.

Two evaluation paths exist.  The methods on the nodes are straightforward
numpy code and serve as the reference.  :meth:`MapExpr.program` lowers a
tree into flat arrays consumed by the compiled kernels in
:mod:`artifact._kernels`, which the grid engine uses.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trig import TrigPoly

# opcodes shared with the compiled interpreter
OP_SHEAR_Y, OP_SHEAR_X, OP_LINEAR, OP_TRANSLATE = 0, 1, 2, 3
OP_CIRCLE_EXP, OP_CIRCLE_HOMEO, OP_DISPLACE = 4, 5, 6


class MapExpr:
    dim = 2

    def lift(self, p):
        raise NotImplementedError

    def jac(self, p):
        raise NotImplementedError

    def homotopy(self):
        raise NotImplementedError

    def _lower(self, ops, params):
        raise NotImplementedError

    # -- derived API -------------------------------------------------
    def __call__(self, p):
        """Torus/circle value, the lift reduced mod 1."""
        return np.mod(self.lift(p), 1.0)

    def eval(self, p):
        return self(p)

    def eval_lift(self, p):
        return self.lift(p)

    def jacobian(self, p):
        return self.jac(p)

    def program(self):
        """Lowered ``(ops, params)`` arrays for the compiled kernels."""
        ops, params = [], []
        self._lower(ops, params)
        ops_arr = np.array(ops, dtype=np.int64).reshape(-1, 2)
        par = np.concatenate(params) if params else np.zeros(0)
        return ops_arr, np.ascontiguousarray(par, dtype=float)

    def homotopic_to_identity(self):
        return bool(np.array_equal(self.homotopy(), np.eye(self.dim, dtype=np.int64)))

    def to_json(self):
        raise NotImplementedError


def _push(params, arr):
    off = sum(len(a) for a in params)
    params.append(np.asarray(arr, dtype=float))
    return off


def _as_pts(p):
    return np.asarray(p, dtype=float)


@dataclass(frozen=True, eq=False)
class ShearY(MapExpr):
    """``(x, y) -> (x, y + p(x))``."""

    p: TrigPoly

    def lift(self, p):
        p = _as_pts(p)
        return np.stack([p[..., 0], p[..., 1] + self.p(p[..., 0])], axis=-1)

    def jac(self, p):
        p = _as_pts(p)
        J = np.zeros(p.shape[:-1] + (2, 2))
        J[..., 0, 0] = J[..., 1, 1] = 1.0
        J[..., 1, 0] = self.p.deriv(p[..., 0])
        return J

    def homotopy(self):
        return np.eye(2, dtype=np.int64)

    def _lower(self, ops, params):
        ops.append((OP_SHEAR_Y, _push(params, self.p.pack())))

    def to_json(self):
        return {"type": "shear_y", "p": self.p.to_json()}


@dataclass(frozen=True, eq=False)
class ShearX(MapExpr):
    """``(x, y) -> (x + q(y), y)``."""

    q: TrigPoly

    def lift(self, p):
        p = _as_pts(p)
        return np.stack([p[..., 0] + self.q(p[..., 1]), p[..., 1]], axis=-1)

    def jac(self, p):
        p = _as_pts(p)
        J = np.zeros(p.shape[:-1] + (2, 2))
        J[..., 0, 0] = J[..., 1, 1] = 1.0
        J[..., 0, 1] = self.q.deriv(p[..., 1])
        return J

    def homotopy(self):
        return np.eye(2, dtype=np.int64)

    def _lower(self, ops, params):
        ops.append((OP_SHEAR_X, _push(params, self.q.pack())))

    def to_json(self):
        return {"type": "shear_x", "q": self.q.to_json()}


@dataclass(frozen=True, eq=False)
class Displace(MapExpr):
    """``(x, y) -> (x + a(x) + b(y), y + c(x) + d(y))``.

    A general additive perturbation of the identity; it is not a shear, so
    its determinant is not 1 in general (the dissipative presets use it).
    """

    a: TrigPoly
    b: TrigPoly
    c: TrigPoly
    d: TrigPoly

    def lift(self, p):
        p = _as_pts(p)
        x, y = p[..., 0], p[..., 1]
        return np.stack([x + self.a(x) + self.b(y), y + self.c(x) + self.d(y)], axis=-1)

    def jac(self, p):
        p = _as_pts(p)
        x, y = p[..., 0], p[..., 1]
        J = np.empty(p.shape[:-1] + (2, 2))
        J[..., 0, 0] = 1.0 + self.a.deriv(x)
        J[..., 0, 1] = self.b.deriv(y)
        J[..., 1, 0] = self.c.deriv(x)
        J[..., 1, 1] = 1.0 + self.d.deriv(y)
        return J

    def homotopy(self):
        return np.eye(2, dtype=np.int64)

    def _lower(self, ops, params):
        offs = [_push(params, t.pack()) for t in (self.a, self.b, self.c, self.d)]
        # four trig blocks, addressed through a small offset table
        ops.append((OP_DISPLACE, _push(params, np.array(offs, dtype=float))))

    def to_json(self):
        return {"type": "displace", "a": self.a.to_json(), "b": self.b.to_json(),
                "c": self.c.to_json(), "d": self.d.to_json()}


@dataclass(frozen=True, eq=False)
class Linear2(MapExpr):
    """``x -> m x``.  Integer ``m`` gives a torus map; real ``m`` only a plane map."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float).reshape(2, 2)
        object.__setattr__(self, "m", m)

    @property
    def is_integer(self):
        return bool(np.all(self.m == np.round(self.m)))

    def lift(self, p):
        return _as_pts(p) @ self.m.T

    def jac(self, p):
        p = _as_pts(p)
        return np.broadcast_to(self.m, p.shape[:-1] + (2, 2)).copy()

    def homotopy(self):
        if not self.is_integer:
            raise ValueError("non-integer linear map does not descend to the torus")
        return np.round(self.m).astype(np.int64)

    def _lower(self, ops, params):
        ops.append((OP_LINEAR, _push(params, self.m.ravel())))

    def to_json(self):
        return {"type": "linear", "m": self.m.tolist()}


@dataclass(frozen=True, eq=False)
class Translation(MapExpr):
    v: tuple

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(float(t) for t in np.atleast_1d(self.v)))

    @property
    def dim(self):
        return len(self.v)

    def lift(self, p):
        p = _as_pts(p)
        return p + (self.v[0] if self.dim == 1 else np.array(self.v))

    def jac(self, p):
        p = _as_pts(p)
        if self.dim == 1:
            return np.ones_like(p)
        return np.broadcast_to(np.eye(2), p.shape[:-1] + (2, 2)).copy()

    def homotopy(self):
        return np.eye(self.dim, dtype=np.int64)

    def _lower(self, ops, params):
        v = list(self.v) + [0.0] * (2 - self.dim)
        ops.append((OP_TRANSLATE, _push(params, v)))

    def to_json(self):
        return {"type": "translation", "v": list(self.v)}


@dataclass(frozen=True, eq=False)
class CircleExpanding(MapExpr):
    """``x -> d x + s(x)`` on the circle; requires ``d + s' > 1``."""

    d: int
    s: TrigPoly
    dim = 1

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError("expanding circle map needs integer degree >= 2")

    def lift(self, x):
        x = _as_pts(x)
        return self.d * x + self.s(x)

    def jac(self, x):
        return self.d + self.s.deriv(_as_pts(x))

    deriv = jac

    def homotopy(self):
        return np.array([[int(self.d)]], dtype=np.int64)

    def min_derivative(self, samples=10_000):
        x = (np.arange(samples) + 0.5) / samples
        return float(self.jac(x).min())

    def _lower(self, ops, params):
        ops.append((OP_CIRCLE_EXP, _push(params, np.concatenate([[self.d], self.s.pack()]))))

    def to_json(self):
        return {"type": "circle_expanding", "d": int(self.d), "s": self.s.to_json()}


@dataclass(frozen=True, eq=False)
class CircleHomeo(MapExpr):
    """``x -> x + s(x)`` on the circle."""

    s: TrigPoly
    dim = 1

    def lift(self, x):
        x = _as_pts(x)
        return x + self.s(x)

    def jac(self, x):
        return 1.0 + self.s.deriv(_as_pts(x))

    deriv = jac

    def homotopy(self):
        return np.eye(1, dtype=np.int64)

    def _lower(self, ops, params):
        ops.append((OP_CIRCLE_HOMEO, _push(params, self.s.pack())))

    def to_json(self):
        return {"type": "circle_homeo", "s": self.s.to_json()}


class Compose(MapExpr):
    """``Compose([f, g, h]) = f o g o h``."""

    def __init__(self, parts):
        flat = []
        for p in parts:
            flat.extend(p.parts if isinstance(p, Compose) else [p])
        if not flat:
            raise ValueError("empty composition")
        dims = {p.dim for p in flat}
        if len(dims) != 1:
            raise ValueError("cannot compose maps of different dimensions")
        self.parts = tuple(flat)
        self.dim = dims.pop()

    def lift(self, p):
        for part in reversed(self.parts):
            p = part.lift(p)
        return p

    def jac(self, p):
        p = _as_pts(p)
        J = None
        for part in reversed(self.parts):
            Jp = part.jac(p)
            if J is None:
                J = Jp
            elif self.dim == 1:
                J = Jp * J
            else:
                J = Jp @ J
            p = part.lift(p)
        return J

    deriv = jac

    def homotopy(self):
        H = np.eye(self.dim, dtype=np.int64)
        for part in reversed(self.parts):
            H = part.homotopy() @ H
        return H

    def _lower(self, ops, params):
        for part in reversed(self.parts):
            part._lower(ops, params)

    def to_json(self):
        return {"type": "compose", "parts": [p.to_json() for p in self.parts]}


def identity(dim=2):
    return Translation((0.0,) * dim)


# -- JSON schema ---------------------------------------------------------------

def from_json(obj) -> MapExpr:
    """Build a :class:`MapExpr` from its JSON form or a preset name."""
    if isinstance(obj, str):
        from .presets import preset
        return preset(obj)
    if not isinstance(obj, dict) or "type" not in obj:
        raise ValueError("map must be a preset name or an object with a 'type'")
    t = obj["type"]
    tp = TrigPoly.from_json
    if t == "compose":
        return Compose([from_json(p) for p in obj["parts"]])
    if t == "shear_y":
        return ShearY(tp(obj["p"]))
    if t == "shear_x":
        return ShearX(tp(obj["q"]))
    if t == "displace":
        zero = {"const": 0.0, "terms": []}
        return Displace(*(tp(obj.get(k, zero)) for k in "abcd"))
    if t == "linear":
        return Linear2(np.array(obj["m"], dtype=float))
    if t == "translation":
        return Translation(tuple(obj["v"]))
    if t == "circle_expanding":
        return CircleExpanding(int(obj["d"]), tp(obj["s"]))
    if t == "circle_homeo":
        return CircleHomeo(tp(obj["s"]))
    raise ValueError(f"unknown map type {t!r}")


def is_measure_preserving(m: MapExpr, samples=1000, seed=0, tol=1e-9):
    """``|det Df| == 1`` at random points (closed-form Jacobians)."""
    rng = np.random.Generator(np.random.Philox(seed))
    if m.dim == 1:
        return bool(np.all(np.abs(np.abs(m.jac(rng.random(samples))) - 1) < tol))
    J = m.jac(rng.random((samples, 2)))
    return bool(np.all(np.abs(np.abs(np.linalg.det(J)) - 1) < tol))
