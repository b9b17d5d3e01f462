"""Discretizations ``f_N = P_N o f`` and their functional-graph structure."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .grid import Grid, round_half_down, torus_distance
from .maps import MapExpr, is_measure_preserving

DEFAULT_BUDGET = 2**32


class BudgetExceeded(RuntimeError):
    """Materialization would exceed the configured point budget."""


class MatchingError(RuntimeError):
    """No perfect matching in the cell transition relation."""


class DiscreteMap:
    """``f_N`` on the grid ``E_N``; image table is materialized lazily.

    Parameters
    ----------
    m : MapExpr
    grid : Grid
    budget : int
        Largest ``q_N`` allowed for a materialized table.  Beyond it the map
        works on the fly (Floyd orbits only).
    table : ndarray, optional
        Explicit successor table; bypasses ``m`` (used for synthetic graphs).
    """

    def __init__(self, m: MapExpr | None, grid: Grid, budget=DEFAULT_BUDGET, table=None):
        if m is not None and m.dim != grid.n:
            raise ValueError(f"map dimension {m.dim} != grid dimension {grid.n}")
        self.map = m
        self.grid = grid
        self.budget = budget
        self._table = None
        self._disp = None
        if table is not None:
            table = np.ascontiguousarray(table, dtype=np.int64)
            if table.shape != (grid.q,) or table.min() < 0 or table.max() >= grid.q:
                raise ValueError("table must map [0, q) into itself")
            self._table = table
        if m is not None:
            self._ops, self._params = m.program()

    @classmethod
    def from_table(cls, table, n=1):
        table = np.asarray(table)
        N = round(len(table) ** (1 / n))
        return cls(None, Grid(n, N), table=table)

    @property
    def materializable(self):
        return self._table is not None or self.grid.q <= self.budget

    @property
    def table(self):
        if self._table is None:
            if not self.materializable:
                raise BudgetExceeded(f"q_N = {self.grid.q} exceeds budget {self.budget}")
            g = self.grid
            self._table = K.image_table(self._ops, self._params, g.N, g.n, 0, g.q)
        return self._table

    def lift_displacements(self):
        """Integer displacement ``P(N F(x)) - N x`` per ordinal, shape (q, 2)."""
        if self._disp is None:
            if self.map is None:
                raise ValueError("synthetic table has no lift")
            g = self.grid
            if g.q > self.budget:
                raise BudgetExceeded(f"q_N = {g.q} exceeds budget {self.budget}")
            tab, disp = K.image_table_with_shift(self._ops, self._params, g.N, g.n)
            if self._table is None:
                self._table = tab
            self._disp = disp
        return self._disp

    def image(self, ordinals):
        o = np.asarray(ordinals, dtype=np.int64)
        if self._table is not None:
            return self._table[o]
        g = self.grid
        flat = o.ravel()
        out = np.array([K.image_ordinal(self._ops, self._params, g.N, g.n, int(v))
                        for v in flat], dtype=np.int64)
        return out.reshape(o.shape)


def discretize(m: MapExpr, g: Grid, budget=DEFAULT_BUDGET) -> DiscreteMap:
    return DiscreteMap(m, g, budget=budget)


@dataclass
class OrbitRecord:
    tail: int
    cycle: int
    representative: int  # smallest ordinal on the cycle


@dataclass
class FunctionalGraphAnalysis:
    grid: Grid
    cycle_start: np.ndarray  # per cycle, ordinal where the sweep closed it
    cycle_len: np.ndarray
    basin: np.ndarray
    cycle_of: np.ndarray = field(repr=False)
    tail: np.ndarray = field(repr=False)
    table: np.ndarray = field(repr=False)

    @property
    def n_cycles(self) -> int:
        return len(self.cycle_len)

    @property
    def recurrent_count(self) -> int:
        return int(self.cycle_len.sum())

    @property
    def degree_of_recurrence(self) -> float:
        return self.recurrent_count / self.grid.q

    @property
    def stabilization_time(self) -> int:
        return int(self.tail.max())

    @property
    def max_cycle_len(self) -> int:
        return int(self.cycle_len.max())

    def cycle(self, c) -> np.ndarray:
        """Ordinals of cycle ``c``, starting at its smallest ordinal."""
        pts = K.walk_cycle_table(self.table, self.cycle_start[c], self.cycle_len[c])
        k = int(np.argmin(pts))
        return np.roll(pts, -k)

    def cycles(self):
        """``(ordinals, basin)`` per cycle, ordered by smallest ordinal."""
        reps = [(int(self.cycle(c)[0]), c) for c in range(self.n_cycles)]
        return [(self.cycle(c), int(self.basin[c])) for _, c in sorted(reps)]

    def recurrent_mask(self):
        return self.tail == 0

    def row(self):
        """CSV row for recurrence sweeps."""
        return {
            "N": self.grid.N, "q_N": self.grid.q,
            "recurrent_count": self.recurrent_count, "n_cycles": self.n_cycles,
            "max_cycle_len": self.max_cycle_len,
            "degree_of_recurrence": self.degree_of_recurrence,
            "stabilization_time": self.stabilization_time,
        }


RECURRENCE_COLUMNS = ("N", "q_N", "recurrent_count", "n_cycles", "max_cycle_len",
                      "degree_of_recurrence", "stabilization_time")


def full_sweep_analysis(d: DiscreteMap) -> FunctionalGraphAnalysis:
    """Complete cycle/basin decomposition by path marking."""
    table = d.table
    cycle_of, tail, cs, cl = K.sweep(table)
    basin = np.bincount(cycle_of, minlength=len(cl)).astype(np.int64)
    return FunctionalGraphAnalysis(d.grid, cs, cl, basin, cycle_of, tail, table)


def floyd_orbit(d: DiscreteMap, start) -> OrbitRecord:
    """Tail and cycle lengths of one orbit with O(1) extra memory."""
    g = d.grid
    x0 = int(np.asarray(g.ordinal(start)) if np.ndim(start) else start)
    if d._table is not None:
        mu, lam, on = K.floyd_table(d._table, x0)
        cyc = K.walk_cycle_table(d._table, on, lam)
    else:
        mu, lam, on = K.floyd_fly(d._ops, d._params, g.N, g.n, x0)
        cyc = K.walk_cycle_fly(d._ops, d._params, g.N, g.n, on, lam)
    return OrbitRecord(int(mu), int(lam), int(cyc.min()))


def orbit_cycle(d: DiscreteMap, start) -> np.ndarray:
    """Ordinals of the cycle reached from ``start`` (smallest first)."""
    rec = floyd_orbit(d, start)
    g = d.grid
    if d._table is not None:
        return K.walk_cycle_table(d._table, rec.representative, rec.cycle)
    return K.walk_cycle_fly(d._ops, d._params, g.N, g.n, rec.representative, rec.cycle)


def rate_of_injectivity(d: DiscreteMap, t: int = 1) -> float:
    """``Card(f_N^t(E_N)) / q_N`` by exact distinct-image counting."""
    if t < 1:
        raise ValueError("t must be >= 1")
    return image_counts(d, t)[-1] / d.grid.q


def image_counts(d: DiscreteMap, t: int) -> list[int]:
    """``[Card f_N^s(E_N) for s = 1..t]``."""
    table = d.table
    q = d.grid.q
    mark = np.zeros(q, dtype=bool)
    mark[table] = True
    out = [int(mark.sum())]
    for _ in range(t - 1):
        cur = np.flatnonzero(mark)
        mark = np.zeros(q, dtype=bool)
        mark[table[cur]] = True
        out.append(int(mark.sum()))
    return out


def is_bijection(d: DiscreteMap) -> bool:
    mark = np.zeros(d.grid.q, dtype=bool)
    mark[d.table] = True
    return bool(mark.all())


def permutation_order(d: DiscreteMap, limit=2**64 - 1):
    """Order of ``f_N`` as a permutation, or ``None`` if not a bijection.

    Raises
    ------
    OverflowError
        If the lcm exceeds ``limit``; the message lists the cycle lengths.
    """
    if not is_bijection(d):
        return None
    a = full_sweep_analysis(d)
    lens = sorted(set(int(v) for v in a.cycle_len))
    order = math.lcm(*lens)
    if order > limit:
        raise OverflowError(f"permutation order exceeds {limit}; cycle lengths {lens}")
    return order


def recurrence_sweep(m: MapExpr, Ns, n=None, budget=DEFAULT_BUDGET):
    """One analysis row per grid order."""
    n = m.dim if n is None else n
    return [full_sweep_analysis(discretize(m, Grid(n, int(N)), budget)).row() for N in Ns]


# -- Lax cyclic approximation ---------------------------------------------------

def snake_order(N: int) -> np.ndarray:
    """Boustrophedon enumeration of the N x N grid: consecutive cells are adjacent.

    Returns ``rank -> ordinal``.
    """
    k = np.arange(N * N, dtype=np.int64)
    row = k // N
    col = k % N
    col = np.where(row % 2 == 0, col, N - 1 - col)
    return col + N * row


@dataclass
class LaxResult:
    permutation: np.ndarray  # ordinal -> ordinal, a single cycle
    distance: float          # sup_x |f(x) - sigma(x)|, Euclidean torus metric
    matching_radius: int     # max cell distance from P_N f(x) to matched cell
    max_rank_shift: int      # max |tau(k) - k| in the snake order (<= 2)
    max_cell_shift: int      # max cell distance from P_N f(x) to sigma(x)


def _transition_edges(m: MapExpr, g: Grid, s: int, radius: int):
    N = g.N
    idx = g.index(np.arange(g.q))
    off = ((np.arange(s) + 0.5) / s - 0.5) / N
    ox, oy = np.meshgrid(off, off, indexing="ij")
    sub = np.stack([ox.ravel(), oy.ravel()], axis=-1)
    src, dst = [], []
    for o in sub:
        pts = g.point(idx) + o
        tgt = g.project(m.lift(pts))
        for dx in range(-radius, radius + 1):
            for dy in range(-radius, radius + 1):
                t = np.mod(tgt + np.array([dx, dy]), N)
                src.append(np.arange(g.q))
                dst.append(g.ordinal(t))
    return np.concatenate(src), np.concatenate(dst)


def _cell_dist(g: Grid, a, b):
    ia, ib = g.index(a), g.index(b)
    d = np.abs(ia - ib)
    d = np.minimum(d, g.N - d)
    return d.max(axis=-1)


def lax_cyclic_approximation(m: MapExpr, g: Grid, s: int = 4, max_radius: int = 3,
                             check_conservative=True) -> LaxResult:
    """Cyclic permutation of ``E_N`` close to a measure-preserving ``m``.

    Cells ``C_j`` are linked to every cell hit by an ``s x s`` supersample of
    ``f(C_j)``; a perfect matching of that relation is extracted with
    augmenting paths.  If none exists the relation is dilated by one cell and
    retried, up to ``max_radius``.  Cycles of the matching are then merged by
    two passes of disjoint adjacent transpositions along the snake order
    (even pairs, then odd pairs), which moves every point by at most two
    ranks and leaves a single cycle.
    """
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_bipartite_matching

    if g.n != 2:
        raise ValueError("Lax approximation is implemented on the 2-torus")
    if check_conservative and not is_measure_preserving(m, tol=1e-6):
        raise MatchingError("map is not measure preserving (|det Df| != 1)")
    q, N = g.q, g.N
    for radius in range(0, max_radius + 1):
        src, dst = _transition_edges(m, g, s, radius)
        A = csr_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(q, q))
        A.sum_duplicates()
        match = maximum_bipartite_matching(A, perm_type="column")
        if np.all(match >= 0):
            break
    else:
        raise MatchingError(f"no perfect matching up to dilation radius {max_radius}")
    sigma = match.astype(np.int64)  # source ordinal -> target ordinal

    pts = g.all_points()
    fx = m(pts)
    nearest = g.project_ordinal(fx)
    match_radius = int(_cell_dist(g, nearest, sigma).max())

    # merge cycles in snake-rank coordinates
    r2o = snake_order(N)
    o2r = np.empty(q, dtype=np.int64)
    o2r[r2o] = np.arange(q)
    pi = o2r[sigma[r2o]]  # rank -> rank
    a = full_sweep_analysis(DiscreteMap.from_table(pi))
    parent = np.arange(a.n_cycles)

    def find(c):
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    inv = np.empty(q, dtype=np.int64)
    inv[pi] = np.arange(q)
    cyc = a.cycle_of
    for first in (0, 1):
        for k in range(first, q - 1, 2):
            ra, rb = find(cyc[k]), find(cyc[k + 1])
            if ra != rb:
                # left-multiply by the transposition (k k+1)
                i, j = inv[k], inv[k + 1]
                pi[i], pi[j] = k + 1, k
                inv[k], inv[k + 1] = j, i
                parent[ra] = rb
    check = full_sweep_analysis(DiscreteMap.from_table(pi))
    if check.n_cycles != 1:
        raise MatchingError("cycle merging failed to produce a single cycle")
    final = r2o[pi[o2r]]  # ordinal -> ordinal
    rank_shift = int(np.abs(o2r[final] - o2r[sigma]).max())
    if rank_shift > 2:
        raise AssertionError("adjacent-transposition displacement exceeded 2")
    cell_shift = int(_cell_dist(g, nearest, final).max())
    dist = float(torus_distance(fx, g.point_of_ordinal(final), ord=2).max())
    return LaxResult(final, dist, match_radius, rank_shift, cell_shift)


def is_single_cycle(perm) -> bool:
    perm = np.asarray(perm, dtype=np.int64)
    x, n = int(perm[0]), 1
    while x != 0:
        x = int(perm[x])
        n += 1
        if n > len(perm):
            return False
    return n == len(perm) and len(np.unique(perm)) == len(perm)


__all__ = [
    "DiscreteMap", "discretize", "full_sweep_analysis", "floyd_orbit", "orbit_cycle",
    "rate_of_injectivity", "image_counts", "permutation_order", "recurrence_sweep",
    "lax_cyclic_approximation", "FunctionalGraphAnalysis", "OrbitRecord", "LaxResult",
    "BudgetExceeded", "MatchingError", "RECURRENCE_COLUMNS", "round_half_down",
]
