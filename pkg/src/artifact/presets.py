"""Named maps used by the experiments.

Coefficients are transcribed as published.  ``P`` adds ``p(x)`` to ``y`` and
``Q`` adds ``q(y)`` to ``x``; a map written ``Q o P`` applies ``P`` first.
"""
from __future__ import annotations

import numpy as np

from .maps import (CircleExpanding, Compose, Displace, Linear2, MapExpr, ShearX,
                   ShearY, Translation, identity)
from .trig import TrigPoly

C, S, T = TrigPoly.cos, TrigPoly.sin, TrigPoly.tent
ZERO = TrigPoly()

ALPHA, BETA = 0.00137, 0.00159
EPS1, EPS2 = 0.12794356372, 0.00824735961

ANOSOV = np.array([[2, 1], [1, 1]])
CAT = np.array([[0, 1], [1, 1]])

# lacunary pair shared by f1..f4
_P_LAC = C(1 / 209, 187) + S(1 / 271, 253) - C(1 / 703, 775)
_Q_LAC = C(1 / 287, 241) + S(1 / 203, 197) - S(1 / 841, 811)

# C^1-small pair (f5, f6)
_P5 = C(1 / 209, 17) + S(1 / 271, 27) - C(1 / 703, 35)
_Q5 = C(1 / 287, 15) + S(1 / 203, 27) - S(1 / 841, 38)

# h1..h3
_PH = C(1 / 209, 17) + S(1 / 471, 29) - C(1 / 703, 39)
_QH = C(1 / 287, 15) + S(1 / 403, 31) - S(1 / 841, 41)


def _qp(p, q):
    return Compose([ShearX(q), ShearY(p)])


def _r1_dissipative():
    a = -S(0.00227, 95, ALPHA) - S(0.00111, 343, ALPHA)
    b = C(0.000224, 197, ALPHA)
    c = -C(0.000231, 211, BETA)
    d = -S(0.00376, 107, BETA) + C(0.00107, 331, BETA)
    return Displace(a, b, c, d)


def _r2_dissipative():
    a = -S(0.00227, 14, ALPHA)
    b = C(0.000324, 33, ALPHA)
    c = -S(0.000231, 41, BETA)
    d = -C(0.00376, 15, BETA)
    return Displace(a, b, c, d)


def _sin2_times(freq2, phase, g):
    """``sin^2(2 pi freq2 (u + phase)) * g(u)``."""
    sin2 = TrigPoly.constant(0.5) - C(0.5, 2 * freq2, phase)
    return sin2 * g


def _p1():
    bump = C(0.5, 1, ALPHA) + 0.5
    wig = _sin2_times(2, ALPHA, S(1.0, 3, ALPHA) + C(0.3754, 13, ALPHA))
    return bump + wig * 0.0234


def _q1():
    bump = C(0.5, 1, BETA) + 0.5
    wig = _sin2_times(2, BETA, S(1.0, 3, BETA) + C(0.4243, 11, BETA))
    return bump + wig * 0.0213


def _r1_rotation():
    # sin(33 pi (x + a)) and sin(41 pi y) have half-integer frequencies
    a = -S(0.0127, 4, ALPHA) + S(0.000324, 16.5, ALPHA)
    d = -S(0.0176, 6, BETA) + S(0.000231, 20.5)
    return Displace(a, ZERO, ZERO, d)


def _g2(lead):
    p = T(lead, 1, ALPHA) + T(0.0234, 2, ALPHA) + T(0.0167, 10, ALPHA)
    q = T(lead, 1, BETA) + T(0.0213, 2, BETA) + T(0.0101, 6, BETA)
    return _qp(p, q)


def _g3():
    p = S(0.3, 1, 0.34137) + S(0.2, 1.5, 0.21346) + 0.578675
    q = S(0.25, 1, 0.9734) + S(0.35, 1.5, -0.20159) + 0.551256
    return _qp(p, q)


def expanding_map():
    """``x -> 2x + eps1 cos(2 pi x) + eps2 sin(6 pi x)``."""
    return CircleExpanding(2, C(EPS1, 1) + S(EPS2, 3))


def _builders():
    f5 = _qp(_P5, _Q5)
    h1 = _qp(_PH, _QH)
    g1 = _qp(_p1(), _q1())
    return {
        "identity": lambda: identity(2),
        "cat": lambda: Linear2(CAT),
        "anosov": lambda: Linear2(ANOSOV),
        "f1": lambda: Compose([_r1_dissipative(), _qp(_P_LAC, _Q_LAC)]),
        "f2": lambda: Compose([_r2_dissipative(), _qp(_P_LAC, _Q_LAC)]),
        "f3": lambda: _qp(_P_LAC, _Q_LAC),
        "f4": lambda: Compose([_qp(_P_LAC, _Q_LAC), Linear2(ANOSOV)]),
        "f5": lambda: f5,
        "f6": lambda: Compose([f5, Linear2(ANOSOV)]),
        "h1": lambda: h1,
        "h2": lambda: Compose([h1, Translation((1 / 10, 1 / 15))]),
        "h3": lambda: Compose([h1, Linear2(ANOSOV)]),
        "g1": lambda: g1,
        "rot-f1": lambda: Compose([_r1_rotation(), g1]),
        "g2": lambda: _g2(2.0),
        # leading coefficient 1: the profile range matches 1/2 (cos + 1) of g1
        "g2-unit": lambda: _g2(1.0),
        "g3": _g3,
        "expanding": expanding_map,
        "doubling": lambda: CircleExpanding(2, ZERO),
        "shear-cos": lambda: ShearX(C(1.0, 1)),
    }


def names():
    return sorted(_builders())


def preset(name: str) -> MapExpr:
    """Build a named preset.

    Raises
    ------
    KeyError
        Unknown name.
    """
    b = _builders()
    if name not in b:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(sorted(b))}")
    return b[name]()


def presets():
    return {k: v() for k, v in _builders().items()}


def lacunary_pq():
    """The ``(p, q)`` pair shared by f1 to f4."""
    return _P_LAC, _Q_LAC
