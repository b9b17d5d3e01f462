"""Rotation vectors and sampled rotation sets of torus maps homotopic to Id."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels as K
from .engine import discretize, full_sweep_analysis
from .grid import Grid
from .maps import MapExpr


class NotHomotopicToIdentity(ValueError):
    pass


def _require_identity_homotopy(m: MapExpr):
    if m.dim != 2 or not m.homotopic_to_identity():
        raise NotHomotopicToIdentity("rotation vectors need a torus map homotopic to Id")


def orbit_rotation_vector(m: MapExpr, x, T: int):
    """``(F^T(x) - x) / T`` for one or many starting points (trailing axis 2)."""
    _require_identity_homotopy(m)
    if T < 1:
        raise ValueError("T must be >= 1")
    x = np.asarray(x, dtype=float)
    pts = np.ascontiguousarray(x.reshape(-1, 2))
    ops, params = m.program()
    end = K.lift_many(ops, params, pts, T)
    return ((end - pts) / T).reshape(x.shape)


def mean_rotation_vector(m: MapExpr, sample: int = 256):
    """Average displacement ``F(x) - x`` over a ``sample x sample`` midpoint grid."""
    _require_identity_homotopy(m)
    t = (np.arange(sample) + 0.5) / sample
    X, Y = np.meshgrid(t, t, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    return (m.lift(pts) - pts).mean(axis=0)


@dataclass
class RotationSetSample:
    vectors: np.ndarray                   # (k, 2) floats
    periods: np.ndarray | None = None     # cycle lengths (discretized sets)
    numerators: np.ndarray | None = None  # integer p with vector = p / period
    starts: np.ndarray | None = None      # starting points (observable sets)
    hull: list = field(default_factory=list)

    def __len__(self):
        return len(self.vectors)

    def hull_array(self):
        return np.array([[float(a), float(b)] for a, b in self.hull], dtype=float).reshape(-1, 2)

    def distinct(self):
        if self.numerators is not None:
            keys = {(Fraction(int(p0), int(q)), Fraction(int(p1), int(q)))
                    for (p0, p1), q in zip(self.numerators, self.periods)}
            return len(keys)
        return len(np.unique(self.vectors, axis=0))


def observable_sample(m: MapExpr, K_: int, T: int, seed=0) -> RotationSetSample:
    """Rotation vectors of ``K_`` orbit segments of length ``T`` from random starts."""
    rng = np.random.Generator(np.random.Philox(seed))
    starts = rng.random((K_, 2))
    v = orbit_rotation_vector(m, starts, T)
    return RotationSetSample(v, starts=starts, hull=convex_hull(v))


def discretized_rotation_set(m: MapExpr, g: Grid | int) -> RotationSetSample:
    """One rotation vector per cycle of ``f_N``.

    The lift of ``f_N`` rounds ``F(x)`` to the ``1/N`` lattice with the same
    rule as the projection, so the summed displacement along a cycle is an
    integer vector ``p`` (in units of 1) and the rotation vector is ``p/period``.
    """
    _require_identity_homotopy(m)
    if isinstance(g, int):
        g = Grid(2, g)
    d = discretize(m, g)
    disp = d.lift_displacements()
    a = full_sweep_analysis(d)
    rec = np.flatnonzero(a.tail == 0)
    cid = a.cycle_of[rec]
    tot = np.zeros((a.n_cycles, 2), dtype=np.int64)
    np.add.at(tot, cid, disp[rec])
    if np.any(tot % g.N):
        raise ArithmeticError("cycle displacement is not a multiple of N; lift and "
                              "projection are inconsistent")
    p = tot // g.N
    v = p / a.cycle_len[:, None]
    return RotationSetSample(v, periods=a.cycle_len.copy(), numerators=p,
                             hull=convex_hull_exact(p, a.cycle_len))


def asymptotic_union(m: MapExpr, N_range) -> RotationSetSample:
    """Multiset union of discretized rotation sets over several grid orders."""
    parts = [discretized_rotation_set(m, Grid(2, int(N))) for N in N_range]
    p = np.concatenate([s.numerators for s in parts])
    q = np.concatenate([s.periods for s in parts])
    return RotationSetSample(p / q[:, None], periods=q, numerators=p,
                             hull=convex_hull_exact(p, q))


# -- hulls -----------------------------------------------------------------------------

def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _monotone_chain(pts):
    pts = sorted(set(pts))
    if len(pts) <= 2:
        return pts
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def convex_hull_exact(numerators, periods):
    """Counter-clockwise hull vertices of the rationals ``p/q`` as Fractions."""
    pts = {(Fraction(int(a), int(q)), Fraction(int(b), int(q)))
           for (a, b), q in zip(np.asarray(numerators), np.asarray(periods))}
    return _monotone_chain(pts)


def convex_hull(points):
    """Counter-clockwise hull of float points (exact arithmetic on the floats)."""
    pts = {(Fraction(float(a)), Fraction(float(b))) for a, b in np.asarray(points).reshape(-1, 2)}
    return _monotone_chain(pts)


def _point_segment_distance(p, a, b):
    ab = b - a
    L = float(ab @ ab)
    t = 0.0 if L == 0 else float(np.clip((p - a) @ ab / L, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def _inside(p, poly):
    n = len(poly)
    if n < 3:
        return False
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        if (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) < -1e-15:
            return False
    return True


def _dist_to_polygon(p, poly):
    if _inside(p, poly):
        return 0.0
    n = len(poly)
    if n == 1:
        return float(np.linalg.norm(p - poly[0]))
    return min(_point_segment_distance(p, poly[i], poly[(i + 1) % n]) for i in range(n))


def hausdorff_convex(P, Q) -> float:
    """Hausdorff distance between convex polygons given by vertex lists."""
    P = np.asarray([[float(a), float(b)] for a, b in P], dtype=float)
    Q = np.asarray([[float(a), float(b)] for a, b in Q], dtype=float)
    d1 = max(_dist_to_polygon(p, Q) for p in P)
    d2 = max(_dist_to_polygon(q, P) for q in Q)
    return max(d1, d2)


UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def hausdorff_to_unit_square(hull) -> float:
    return hausdorff_convex(hull, UNIT_SQUARE)
