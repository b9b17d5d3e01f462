"""Uniform grids on the circle and the 2-torus.

A grid of order ``N`` in dimension ``n`` holds the ``N**n`` points
``i / N`` with integer coordinates ``0 <= i < N``.  Points are addressed by
integer coordinates or by a flat row-major ordinal ``i0 + N * i1``.

Rounding follows a single deterministic rule everywhere in the package:
``P(x) = ceil(x - 1/2)``, i.e. the unique integer ``k`` with
``k - 1/2 < x <= k + 1/2``.  Half-integers therefore round *down*.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ORDINAL = 2**63 - 1


def round_half_down(x):
    """Nearest integer with ties going down, ``ceil(x - 1/2)``.

    Works on scalars and arrays; returns int64 for arrays.
    """
    r = np.ceil(np.asarray(x, dtype=float) - 0.5)
    if r.ndim == 0:
        return int(r)
    return r.astype(np.int64)


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``E_N`` of order ``N`` on the ``n``-torus (n = 1 or 2)."""

    n: int
    N: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"grid dimension must be 1 or 2, got {self.n}")
        if self.N < 1:
            raise ValueError(f"grid order must be positive, got {self.N}")
        if self.N**self.n > MAX_ORDINAL:
            raise OverflowError("grid cardinality does not fit a 64-bit counter")

    @property
    def q(self) -> int:
        """Cardinality ``q_N = N**n``."""
        return self.N**self.n

    @property
    def mesh(self) -> float:
        return 1.0 / self.N

    # -- projection ----------------------------------------------------
    def project(self, p):
        """Integer coordinates of the grid point nearest to ``p``.

        ``p`` has trailing axis of length ``n`` (or is a scalar / 1-D array
        when ``n == 1``).  Coordinates are reduced mod ``N`` so that any
        real input, normalized or not, is accepted.
        """
        p = np.asarray(p, dtype=float)
        return np.mod(round_half_down(self.N * p), self.N)

    def project_ordinal(self, p):
        return self.ordinal(self.project(p))

    # -- codecs ----------------------------------------------------------
    def ordinal(self, idx):
        """Row-major ordinal of integer coordinates."""
        idx = np.asarray(idx, dtype=np.int64)
        if self.n == 1:
            # circle indices are plain integers
            return idx
        return idx[..., 0] + self.N * idx[..., 1]

    def index(self, ordinal):
        """Integer coordinates from ordinal(s); shape ``(..., n)`` for n = 2."""
        o = np.asarray(ordinal, dtype=np.int64)
        if np.any(o < 0) or np.any(o >= self.q):
            raise IndexError(f"ordinal out of range [0, {self.q})")
        if self.n == 1:
            return o
        return np.stack([o % self.N, o // self.N], axis=-1)

    def point(self, idx):
        """Torus point ``idx / N`` of integer coordinates."""
        return np.asarray(idx, dtype=float) / self.N

    def point_of_ordinal(self, ordinal):
        return self.point(self.index(ordinal))

    def all_points(self):
        """Every grid point in ordinal order, shape ``(q,)`` or ``(q, 2)``."""
        return self.point_of_ordinal(np.arange(self.q, dtype=np.int64))


def torus_distance(a, b, ord=np.inf):
    """Distance on the flat torus; the trailing axis holds coordinates.

    Scalars are circle points.  For many circle points pass shape ``(k, 1)``.
    """
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    d = np.mod(d, 1.0)
    d = np.minimum(d, 1.0 - d)
    if d.ndim == 0:
        return float(d)
    out = d.max(axis=-1) if ord == np.inf else np.linalg.norm(d, ord=ord, axis=-1)
    return float(out) if np.ndim(out) == 0 else out
