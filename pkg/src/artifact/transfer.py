"""Expanding circle maps: preimages, transfer operator, SRB density, trees."""
from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import sparse

from .engine import discretize, rate_of_injectivity
from .grid import Grid
from .maps import MapExpr


class NotExpanding(ValueError):
    pass


def _check_expanding(f: MapExpr, samples=10_000):
    if f.dim != 1 or int(f.homotopy()[0, 0]) < 2:
        raise NotExpanding("expected a circle map of degree >= 2")
    lam = float(np.min(f.jac((np.arange(samples) + 0.5) / samples)))
    if lam <= 1.0:
        raise NotExpanding(f"minimal derivative {lam:.6g} <= 1")
    return lam


def preimages(f: MapExpr, y, tol=1e-12):
    """All ``d`` preimages in ``[0, 1)`` of each ``y``; shape ``y.shape + (d,)``.

    Solves ``F(x) = y + j`` on ``[0, 1)`` for the ``d`` integers ``j`` with
    ``F(0) <= y + j < F(0) + d``: bisection on the increasing lift down to
    ``tol``, then two Newton steps.
    """
    _check_expanding(f)
    d = int(f.homotopy()[0, 0])
    y = np.mod(np.asarray(y, dtype=float), 1.0)
    F0 = float(f.lift(0.0))
    # F maps [0,1) onto [F0, F0 + d); targets y + j with F0 <= target < F0 + d
    j0 = np.ceil(F0 - y)
    target = (y[..., None] + j0[..., None] + np.arange(d))
    lo = np.zeros_like(target)
    hi = np.ones_like(target)
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        up = f.lift(mid) > target
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    x = 0.5 * (lo + hi)
    for _ in range(2):
        x = x - (f.lift(x) - target) / f.jac(x)
    return np.mod(x, 1.0)


# -- densities ------------------------------------------------------------------

@dataclass
class CircleDensity:
    """Piecewise-linear density with nodes at ``i/M`` (periodic)."""

    values: np.ndarray

    @property
    def M(self):
        return len(self.values)

    @classmethod
    def constant(cls, M):
        return cls(np.ones(M))

    def integral(self):
        # trapezoid rule on a periodic grid is the node mean
        return float(np.mean(self.values))

    def normalized(self):
        return CircleDensity(self.values / self.integral())

    def __call__(self, x):
        x = np.mod(np.asarray(x, dtype=float), 1.0) * self.M
        i = np.floor(x).astype(np.int64)
        t = x - i
        v = self.values
        return (1 - t) * v[i % self.M] + t * v[(i + 1) % self.M]

    def cdf(self, t):
        """Exact integral of the interpolant from 0 to ``t`` in ``[0, 1]``."""
        v = self.values
        M = self.M
        seg = 0.5 * (v + np.roll(v, -1)) / M
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        t = np.asarray(t, dtype=float) * M
        i = np.minimum(np.floor(t).astype(np.int64), M - 1)
        s = t - i
        a, b = v[i % M], v[(i + 1) % M]
        return cum[i] + (a * s + 0.5 * (b - a) * s * s) / M

    def sup_distance(self, other):
        return float(np.max(np.abs(self.values - other.values)))


class TransferOperator:
    """``(L phi)(y) = sum_{f(x)=y} phi(x)/f'(x)`` on ``M`` nodes.

    The preimages and interpolation weights are precomputed once, so ``L``
    is a sparse matrix with ``2 d`` entries per row.
    """

    def __init__(self, f: MapExpr, M: int = 2**14):
        _check_expanding(f)
        self.f = f
        self.M = M
        y = np.arange(M) / M
        x = preimages(f, y)  # (M, d)
        w = 1.0 / f.jac(x)
        s = x * M
        i = np.floor(s).astype(np.int64)
        t = s - i
        rows = np.repeat(np.arange(M), 2 * x.shape[1])
        cols = np.stack([i % M, (i + 1) % M], axis=-1).reshape(M, -1).ravel()
        vals = np.stack([w * (1 - t), w * t], axis=-1).reshape(M, -1).ravel()
        self.matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(M, M))

    def apply(self, phi: CircleDensity, renormalize=True) -> CircleDensity:
        out = CircleDensity(self.matrix @ phi.values)
        return out.normalized() if renormalize else out

    def iterates(self, phi: CircleDensity, m: int):
        """``[phi, L phi, ..., L^m phi]`` (renormalized)."""
        out = [phi]
        for _ in range(m):
            out.append(self.apply(out[-1]))
        return out


def transfer_apply(f, phi: CircleDensity, renormalize=True) -> CircleDensity:
    return TransferOperator(f, phi.M).apply(phi, renormalize)


class NoConvergence(RuntimeError):
    pass


def srb_density(f, M: int = 2**14, tol: float = 1e-12, max_iter: int = 10_000,
                op: TransferOperator | None = None) -> CircleDensity:
    """Fixed point of ``L`` reached by iterating on the constant 1."""
    op = op or TransferOperator(f, M)
    phi = CircleDensity.constant(op.M)
    for _ in range(max_iter):
        nxt = op.apply(phi)
        if nxt.sup_distance(phi) < tol:
            return nxt
        phi = nxt
    raise NoConvergence(f"transfer iteration did not converge in {max_iter} steps")


# -- explicit contraction constants ------------------------------------------

@dataclass
class TransferConstants:
    """Contraction constants with ``alpha = 1``; big numbers kept as mpmath."""

    lam: float
    tau: float
    lip_log_deriv: float
    sup_deriv: float
    Delta: mpmath.mpf
    one_minus_Lambda: mpmath.mpf  # Lambda = tanh(Delta/4) is 1 to ~Delta/4.6 digits
    C0: mpmath.mpf

    @property
    def Lambda(self):
        return 1 - self.one_minus_Lambda

    @property
    def log_Lambda(self):
        return mpmath.log1p(-self.one_minus_Lambda)

    def bound(self, m: int):
        """``C0 Lambda^m`` as an mpmath number."""
        return self.C0 * mpmath.exp(m * self.log_Lambda)

    def as_dict(self):
        return {"lambda": self.lam, "tau": self.tau, "lip_log_fprime": self.lip_log_deriv,
                "sup_fprime": self.sup_deriv, "Delta": mpmath.nstr(self.Delta, 17),
                "Lambda": mpmath.nstr(self.Lambda, 17),
                "one_minus_Lambda": mpmath.nstr(self.one_minus_Lambda, 17),
                "C0": mpmath.nstr(self.C0, 17)}


def transfer_constants(f: MapExpr, phi0: CircleDensity, samples: int = 100_000) -> TransferConstants:
    """Constants of the explicit ``||L^m 1 - phi0|| <= C0 Lambda^m`` bound."""
    lam = _check_expanding(f, samples)
    x = np.arange(samples) / samples
    dfx = f.jac(x)
    logd = np.log(dfx)
    # max finite-difference slope of log f' (periodic)
    lip = float(np.max(np.abs(np.diff(np.append(logd, logd[0])))) * samples)
    sup = float(np.max(dfx))
    tau = (1.0 + 1.0 / lam) / 2.0
    mp = mpmath.mpf
    with mpmath.workdps(50):
        Delta = (2 * mpmath.log((1 + mp(tau)) / (1 - mp(tau)))
                 + 2 * (3 - mp(tau) + 2 * mp(sup)) * (2 * mp(lip) / (mp(lam) - 1)) / mp(sup))
        # 1 - tanh(z) = 2 / (exp(2z) + 1), no cancellation
        one_minus = 2 / (mpmath.exp(Delta / 2) + 1)
        s = mp(float(np.max(phi0.values)))
        C0 = mpmath.exp(Delta) * s * (s + 2 / mp(float(np.min(phi0.values))))
    return TransferConstants(lam, tau, lip, sup, Delta, one_minus, C0)


# -- distances on the circle ------------------------------------------------------

def wasserstein_circle(mu, nu, refine: int = 64) -> float:
    """``W1`` on the circle: ``min_c int |F_mu - F_nu - c|``.

    ``mu``, ``nu`` are atomic ``(positions, masses)`` pairs, grid measures, or
    :class:`CircleDensity`/``"lebesgue"``.  Two atomic inputs are handled
    exactly; otherwise ``G = F_mu - F_nu`` is sampled at ``refine`` points per
    finest atom spacing (midpoint rule).
    """
    a, b = _as_circle(mu), _as_circle(nu)
    if a[0] == "atoms" and b[0] == "atoms":
        pos = np.concatenate([a[1], b[1]])
        w = np.concatenate([a[2], -b[2]])
        order = np.argsort(pos, kind="stable")
        pos, w = pos[order], w[order]
        G = np.cumsum(w)  # value on [pos_i, pos_{i+1})
        lengths = np.diff(np.append(pos, 1.0 + pos[0]))
        # G on [pos_last, 1) and [0, pos_0) is G[-1] = total difference = 0 + wrap
        return _weighted_l1_median(G, lengths)
    n_atoms = max(len(a[1]) if a[0] == "atoms" else 0, len(b[1]) if b[0] == "atoms" else 0, 1)
    K = max(refine * n_atoms, 4096)
    t = (np.arange(K) + 0.5) / K
    G = _cdf(a, t) - _cdf(b, t)
    return _weighted_l1_median(G, np.full(K, 1.0 / K))


def _weighted_l1_median(G, w):
    order = np.argsort(G)
    cw = np.cumsum(w[order])
    c = G[order][np.searchsorted(cw, 0.5 * cw[-1])]
    return float(np.sum(w * np.abs(G - c)))


def _as_circle(mu):
    from .measures import GridMeasure
    if isinstance(mu, str) and mu == "lebesgue":
        return ("cdf", lambda t: t)
    if isinstance(mu, CircleDensity):
        return ("cdf", mu.cdf)
    if isinstance(mu, GridMeasure):
        return ("atoms", mu.grid.point_of_ordinal(mu.ordinals).astype(float), mu.masses)
    pos, w = mu
    return ("atoms", np.mod(np.asarray(pos, dtype=float), 1.0), np.asarray(w, dtype=float))


def _cdf(obj, t):
    if obj[0] == "cdf":
        return obj[1](t)
    pos, w = obj[1], obj[2]
    order = np.argsort(pos)
    cw = np.concatenate([[0.0], np.cumsum(w[order])])
    return cw[np.searchsorted(pos[order], t, side="right")]


# -- preimage trees ------------------------------------------------------------------

def preimage_tree(f: MapExpr, y, k: int):
    """Nodes and edge weights ``1/f'(x)`` level by level.

    Returns lists ``xs[m]`` and ``ps[m]`` of shape ``y.shape + (d,)*(m+1)``
    for ``m = 0..k-1``.
    """
    x = np.asarray(y, dtype=float)
    xs, ps = [], []
    for _ in range(k):
        x = preimages(f, x)
        xs.append(x)
        ps.append(1.0 / f.jac(x))
    return xs, ps


def survival_from_weights(ps) -> np.ndarray:
    """Root-to-leaf survival probability from level-wise edge probabilities."""
    q = ps[-1]
    for p in reversed(ps[:-1]):
        q = p * (1.0 - np.prod(1.0 - q, axis=-1))
    return 1.0 - np.prod(1.0 - q, axis=-1)


def tree_mean_density(f: MapExpr, y, k: int):
    """Percolation probability of the depth-``k`` preimage tree of ``y``."""
    if k < 1:
        raise ValueError("depth must be >= 1")
    _, ps = preimage_tree(f, y, k)
    return survival_from_weights(ps)


@dataclass
class LocalGlobalExpanding:
    k: int
    integral: float
    stderr: float
    tau_N: float
    N: int
    tree_operator_max_rel_err: float


def localglobal_expanding(f: MapExpr, k: int, samples: int = 4096, N_check: int = 100_000,
                          M: int = 2**14, operator_check_depth: int = 5) -> LocalGlobalExpanding:
    """Compare ``int D(tree_k(y)) dy`` with ``tau^k(f_N)``.

    Also checks that the expected number of depth-``m`` children (products of
    edge weights) equals ``(L^m 1)(y)`` for ``m <= operator_check_depth``.
    """
    y = (np.arange(samples) + 0.5) / samples
    D = tree_mean_density(f, y, k)
    tau = rate_of_injectivity(discretize(f, Grid(1, N_check)), k)
    op = TransferOperator(f, M)
    _, ps = preimage_tree(f, y[:: max(1, samples // 256)], operator_check_depth)
    phi = CircleDensity.constant(M)
    rel = 0.0
    expect = None
    for m in range(operator_check_depth):
        w = ps[m] if expect is None else expect[..., None] * ps[m]
        expect = w
        phi = op.apply(phi, renormalize=False)
        em = expect.reshape(expect.shape[0], -1).sum(axis=1)
        rel = max(rel, float(np.max(np.abs(em - phi(y[:: max(1, samples // 256)])) / em)))
    return LocalGlobalExpanding(k, float(D.mean()), float(D.std(ddof=1) / np.sqrt(samples)),
                                tau, N_check, rel)


def is_expanding(f) -> bool:
    try:
        _check_expanding(f)
        return True
    except NotExpanding:
        return False


__all__ = [
    "preimages", "CircleDensity", "TransferOperator", "transfer_apply", "srb_density",
    "TransferConstants", "transfer_constants", "wasserstein_circle", "preimage_tree",
    "tree_mean_density", "survival_from_weights", "localglobal_expanding",
    "LocalGlobalExpanding",
]
