"""1-periodic trigonometric polynomials with closed-form derivatives.

Terms are stored canonically as ``a * cos(2*pi*f*u + theta)`` with ``f > 0``;
``sin`` terms and phases are folded into ``theta``.  A second family of
"tent" terms ``a * s(f * (u + phase))`` with ``s(u) = |1 - 2 frac(u)|``
covers the piecewise-affine profile (``s(0) = 1``, ``s(1/2) = 0``).

Evaluation always uses ``u = x - floor(x)``.  For integer frequencies this
changes nothing; for non-integer frequencies it makes the function
1-periodic (and discontinuous at integers), which is how such coefficients
behave when a map is evaluated on ``[0, 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


def tent(u):
    """``s(u) = |1 - 2 frac(u)|``."""
    u = np.asarray(u, dtype=float)
    return np.abs(1.0 - 2.0 * (u - np.floor(u)))


def tent_slope(u):
    """Left-continuous derivative of :func:`tent`.

    -2 on ``(0, 1/2]`` and +2 on ``(1/2, 1]`` (mod 1).
    """
    u = np.asarray(u, dtype=float)
    fr = u - np.floor(u)
    return np.where((fr > 0.0) & (fr <= 0.5), -2.0, 2.0)


@dataclass(frozen=True)
class TrigPoly:
    """``const + sum a cos(2 pi f u + theta) + sum b s(g (u + phi))``."""

    const: float = 0.0
    freqs: tuple = ()
    thetas: tuple = ()
    amps: tuple = ()
    tent_freqs: tuple = ()
    tent_phases: tuple = ()
    tent_amps: tuple = ()
    _arrays: dict = field(default=None, init=False, repr=False, compare=False)

    # -- constructors --------------------------------------------------
    @classmethod
    def constant(cls, c):
        return cls(const=float(c))

    @classmethod
    def cos(cls, amp, freq, phase=0.0):
        """``amp * cos(2 pi freq (u + phase))``."""
        return cls._term(amp, freq, TWO_PI * freq * phase)

    @classmethod
    def sin(cls, amp, freq, phase=0.0):
        """``amp * sin(2 pi freq (u + phase))``."""
        return cls._term(amp, freq, TWO_PI * freq * phase - math.pi / 2)

    @classmethod
    def tent(cls, amp, freq, phase=0.0):
        """``amp * s(freq (u + phase))``."""
        return cls(tent_freqs=(float(freq),), tent_phases=(float(phase),),
                   tent_amps=(float(amp),))

    @classmethod
    def _term(cls, amp, freq, theta):
        freq = float(freq)
        if freq < 0:
            freq, theta = -freq, -theta
        if freq == 0:
            return cls(const=amp * math.cos(theta))
        return cls(freqs=(freq,), thetas=(float(theta),), amps=(float(amp),))

    # -- algebra -----------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, TrigPoly):
            other = TrigPoly.constant(other)
        return TrigPoly(
            self.const + other.const,
            self.freqs + other.freqs, self.thetas + other.thetas, self.amps + other.amps,
            self.tent_freqs + other.tent_freqs, self.tent_phases + other.tent_phases,
            self.tent_amps + other.tent_amps,
        )

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other if isinstance(other, TrigPoly) else -float(other))

    def __mul__(self, other):
        if not isinstance(other, TrigPoly):
            c = float(other)
            return TrigPoly(self.const * c, self.freqs, self.thetas,
                            tuple(a * c for a in self.amps), self.tent_freqs,
                            self.tent_phases, tuple(a * c for a in self.tent_amps))
        if self.tent_amps or other.tent_amps:
            raise ValueError("products involving tent terms are not supported")
        # product-to-sum on the canonical cosine form
        out = TrigPoly.constant(self.const * other.const)
        out = out + other * self.const + self * other.const - TrigPoly.constant(
            2 * self.const * other.const)
        for f1, t1, a1 in zip(self.freqs, self.thetas, self.amps):
            for f2, t2, a2 in zip(other.freqs, other.thetas, other.amps):
                out = out + TrigPoly._term(a1 * a2 / 2, f1 + f2, t1 + t2)
                out = out + TrigPoly._term(a1 * a2 / 2, f1 - f2, t1 - t2)
        return out

    __rmul__ = __mul__

    # -- evaluation ----------------------------------------------------------
    def arrays(self):
        """Packed float arrays (cached); used by the compiled kernels."""
        if self._arrays is None:
            object.__setattr__(self, "_arrays", {
                "f": np.array(self.freqs, dtype=float),
                "th": np.array(self.thetas, dtype=float),
                "a": np.array(self.amps, dtype=float),
                "tf": np.array(self.tent_freqs, dtype=float),
                "tp": np.array(self.tent_phases, dtype=float),
                "ta": np.array(self.tent_amps, dtype=float),
            })
        return self._arrays

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        u = (x - np.floor(x))[..., None]
        A = self.arrays()
        val = self.const + np.sum(A["a"] * np.cos(TWO_PI * A["f"] * u + A["th"]), axis=-1)
        if A["ta"].size:
            val = val + np.sum(A["ta"] * tent(A["tf"] * (u + A["tp"])), axis=-1)
        return val

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        u = (x - np.floor(x))[..., None]
        A = self.arrays()
        val = -np.sum(A["a"] * TWO_PI * A["f"] * np.sin(TWO_PI * A["f"] * u + A["th"]), axis=-1)
        if A["ta"].size:
            val = val + np.sum(A["ta"] * A["tf"] * tent_slope(A["tf"] * (u + A["tp"])), axis=-1)
        return val

    def pack(self):
        """Flat layout ``[const, ncos, ntent, (f, th, a)*, (f, ph, a)*]``."""
        A = self.arrays()
        body = [np.array([self.const, len(self.freqs), len(self.tent_freqs)], dtype=float)]
        if len(self.freqs):
            body.append(np.stack([A["f"], A["th"], A["a"]], axis=1).ravel())
        if len(self.tent_freqs):
            body.append(np.stack([A["tf"], A["tp"], A["ta"]], axis=1).ravel())
        return np.concatenate(body)

    # -- JSON -------------------------------------------------------------------
    def to_json(self):
        terms = []
        for f, th, a in zip(self.freqs, self.thetas, self.amps):
            terms.append({"kind": "cos", "freq": f, "phase": th / (TWO_PI * f), "amp": a})
        for f, ph, a in zip(self.tent_freqs, self.tent_phases, self.tent_amps):
            terms.append({"kind": "tent", "freq": f, "phase": ph, "amp": a})
        return {"const": self.const, "terms": terms}

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict):
            raise ValueError("trig polynomial must be a JSON object")
        out = cls.constant(float(obj.get("const", 0.0)))
        for t in obj.get("terms", []):
            kind = t.get("kind")
            maker = {"cos": cls.cos, "sin": cls.sin, "tent": cls.tent}.get(kind)
            if maker is None:
                raise ValueError(f"unknown term kind {kind!r}")
            freq = float(t["freq"])
            if freq <= 0:
                raise ValueError("term frequency must be positive")
            out = out + maker(float(t.get("amp", 1.0)), freq, float(t.get("phase", 0.0)))
        return out

    def sup_norm_bound(self):
        """Crude bound ``|const| + sum |a|``."""
        return abs(self.const) + sum(map(abs, self.amps)) + sum(map(abs, self.tent_amps))
