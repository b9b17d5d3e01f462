"""Atomic probability measures on grids, dyadic distances, rasters."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import DiscreteMap, FunctionalGraphAnalysis, orbit_cycle
from .grid import Grid


@dataclass(frozen=True)
class GridMeasure:
    """Sparse measure: sorted unique ordinals with nonnegative masses."""

    grid: Grid
    ordinals: np.ndarray
    masses: np.ndarray

    @classmethod
    def from_atoms(cls, grid: Grid, ordinals, masses):
        o = np.asarray(ordinals, dtype=np.int64)
        w = np.asarray(masses, dtype=float)
        if np.any(w < 0):
            raise ValueError("negative mass")
        uo, inv = np.unique(o, return_inverse=True)
        return cls(grid, uo, np.bincount(inv, weights=w, minlength=len(uo)))

    @classmethod
    def dense(cls, grid: Grid, weights):
        w = np.asarray(weights, dtype=float)
        nz = np.flatnonzero(w)
        return cls(grid, nz.astype(np.int64), w[nz])

    @property
    def total(self) -> float:
        return float(np.sum(self.masses))

    def to_dense(self):
        out = np.zeros(self.grid.q)
        out[self.ordinals] = self.masses
        return out

    def points(self):
        return self.grid.point_of_ordinal(self.ordinals)

    def support(self):
        return self.ordinals[self.masses > 0]


def uniform(g: Grid) -> GridMeasure:
    """``lambda_N``: mass ``1/q_N`` on every grid point."""
    return GridMeasure(g, np.arange(g.q, dtype=np.int64), np.full(g.q, 1.0 / g.q))


def dirac(g: Grid, ordinal) -> GridMeasure:
    return GridMeasure(g, np.array([int(ordinal)], dtype=np.int64), np.ones(1))


def mu_x(d: DiscreteMap, x) -> GridMeasure:
    """Uniform measure on the cycle reached from the grid point nearest ``x``."""
    g = d.grid
    start = int(np.asarray(g.project_ordinal(x)))
    cyc = orbit_cycle(d, start)
    return GridMeasure.from_atoms(g, cyc, np.full(len(cyc), 1.0 / len(cyc)))


def mu_global(a: FunctionalGraphAnalysis) -> GridMeasure:
    """Each cycle carries mass ``basin/q_N``, spread uniformly along it."""
    rec = np.flatnonzero(a.tail == 0)
    cid = a.cycle_of[rec]
    w = a.basin[cid] / (a.cycle_len[cid] * a.grid.q)
    return GridMeasure(a.grid, rec.astype(np.int64), w.astype(float))


def pushforward(d: DiscreteMap, mu: GridMeasure, k: int = 1) -> GridMeasure:
    """``(f_N^*)^k mu``: move each atom along the image table ``k`` times."""
    if k < 0:
        raise ValueError("k must be >= 0")
    q = d.grid.q
    o, w = mu.ordinals, mu.masses
    dense = q <= 4 * max(len(o), 1) and d.materializable
    if dense:
        table = d.table
        v = np.zeros(q)
        v[o] = w
        for _ in range(k):
            v = np.bincount(table, weights=v, minlength=q)
        return GridMeasure.dense(d.grid, v)
    for _ in range(k):
        o, inv = np.unique(d.image(o), return_inverse=True)
        w = np.bincount(inv, weights=w, minlength=len(o))
    return GridMeasure(d.grid, o, w)


def cesaro_average(d: DiscreteMap, mu: GridMeasure, m: int) -> GridMeasure:
    """``(1/m) sum_{i<m} (f_N^*)^i mu`` (dense)."""
    table = d.table
    q = d.grid.q
    v = mu.to_dense()
    acc = np.zeros(q)
    for _ in range(m):
        acc += v
        v = np.bincount(table, weights=v, minlength=q)
    return GridMeasure.dense(d.grid, acc / m)


# -- dyadic distance ----------------------------------------------------------

def cell_masses(mu, k: int, n: int | None = None) -> np.ndarray:
    """Masses of the half-open dyadic cells of level ``k``.

    ``mu`` may be a :class:`GridMeasure`, any object with a ``cdf`` method
    (circle densities), or the string ``"lebesgue"`` (then ``n`` is needed).
    Returns a flat array of length ``2**(k n)``, cell ``(c0, c1)`` at
    ``c0 + 2**k c1``.
    """
    m = 2**k
    if isinstance(mu, GridMeasure):
        g = mu.grid
        idx = g.index(mu.ordinals)
        cell = (idx * m) // g.N  # exact integer floor of x 2^k
        flat = cell if g.n == 1 else cell[:, 0] + m * cell[:, 1]
        return np.bincount(flat, weights=mu.masses, minlength=m**g.n)
    if isinstance(mu, str) and mu == "lebesgue":
        if n is None:
            raise ValueError("dimension needed for Lebesgue cell masses")
        return np.full(m**n, 1.0 / m**n)
    if hasattr(mu, "cdf"):
        edges = np.arange(m + 1) / m
        return np.diff(mu.cdf(edges))
    raise TypeError(f"unsupported measure type {type(mu).__name__}")


def _dim(mu):
    if isinstance(mu, GridMeasure):
        return mu.grid.n
    if hasattr(mu, "cdf"):
        return 1
    return None


def dyadic_distance(mu, nu, kmax: int = 7) -> float:
    """``sum_{k=0}^{kmax} 2^-k sum_C |mu(C) - nu(C)|`` over half-open dyadic cells."""
    n = _dim(mu) or _dim(nu)
    if n is None:
        raise ValueError("at least one measure must fix the dimension")
    if _dim(mu) and _dim(nu) and _dim(mu) != _dim(nu):
        raise ValueError("measures live in different dimensions")
    tot = 0.0
    for k in range(kmax + 1):
        tot += 2.0**-k * np.abs(cell_masses(mu, k, n) - cell_masses(nu, k, n)).sum()
    return float(tot)


# -- raster ---------------------------------------------------------------------

LOG_LO, LOG_HI = -6.0, 0.0


@dataclass
class DensityRaster:
    """Per-pixel masses, row ``py`` (second coordinate), column ``px``."""

    masses: np.ndarray  # shape (H, W)
    lo: float = LOG_LO
    hi: float = LOG_HI

    @property
    def total(self):
        return float(self.masses.sum())

    def log10(self):
        with np.errstate(divide="ignore"):
            return np.where(self.masses > 0, np.log10(np.where(self.masses > 0, self.masses, 1)), -np.inf)

    def bytes(self):
        lg = self.log10()
        v = np.clip(255.0 * (lg - self.lo) / (self.hi - self.lo), 0, 255)
        v = np.where(self.masses > 0, v, 0)
        return np.round(v).astype(np.uint8)

    def to_pgm(self) -> bytes:
        H, W = self.masses.shape
        return f"P5\n{W} {H}\n255\n".encode() + self.bytes().tobytes()

    def to_csv(self) -> str:
        H, W = self.masses.shape
        py, px = np.mgrid[0:H, 0:W]
        lines = ["px,py,mass"]
        lines += [f"{a},{b},{m:.17g}" for a, b, m in zip(px.ravel(), py.ravel(), self.masses.ravel())]
        return "\n".join(lines) + "\n"

    def write(self, stem):
        with open(f"{stem}.pgm", "wb") as fh:
            fh.write(self.to_pgm())
        with open(f"{stem}.csv", "w") as fh:
            fh.write(self.to_csv())


def raster(mu: GridMeasure, resolution: int = 128) -> DensityRaster:
    """Aggregate atom masses into ``resolution``-wide pixels (half-open)."""
    g = mu.grid
    idx = g.index(mu.ordinals)
    pix = (idx * resolution) // g.N
    if g.n == 1:
        img = np.bincount(pix, weights=mu.masses, minlength=resolution)[None, :]
    else:
        flat = pix[:, 0] + resolution * pix[:, 1]
        img = np.bincount(flat, weights=mu.masses, minlength=resolution**2)
        img = img.reshape(resolution, resolution)
    return DensityRaster(img)
