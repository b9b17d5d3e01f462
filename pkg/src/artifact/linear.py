"""Discretized linear maps on Z^n: image patterns, rates of injectivity,
difference frequencies, lattice geometry and cube unions.

``A_hat(x) = P(A x)`` with ``P`` the componentwise ``ceil(t - 1/2)`` rounding
shared with the grid module.  A sequence element is a matrix or a pair
``(A, v)`` standing for the affine map ``x -> A x + v``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import correlate

from .grid import round_half_down

_OFF = np.int64(2**31)

# two versions of the rounding-sensitive shear: the determinant-1/2 matrix whose
# only tie sits in the first coordinate, and the determinant-1 matrix sending
# (1, 0) to (1/2, 1/2), whose translates split into rate 1/2 and rate 1 quadrants
F0_HALF = np.array([[0.5, -1.0], [0.0, 1.0]])
F0 = np.array([[0.5, -1.0], [0.5, 1.0]])


# -- sequences ------------------------------------------------------------------

def _split(el):
    if isinstance(el, tuple):
        A, v = el
        return np.asarray(A, dtype=float), np.asarray(v, dtype=float)
    A = np.asarray(el, dtype=float)
    return A, np.zeros(A.shape[0])


def apply_hat(A, x, v=None):
    """``P(A x + v)`` for integer points ``x`` (trailing axis n)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    x = np.asarray(x)
    y = x @ A.T
    if v is not None:
        y = y + v
    return round_half_down(y)


def box(R: int, n: int = 2) -> np.ndarray:
    """Integer points of the L-infinity ball ``[B_R]``, shape ``((2R+1)^n, n)``."""
    t = np.arange(-R, R + 1, dtype=np.int64)
    if n == 1:
        return t[:, None]
    g = np.meshgrid(*([t] * n), indexing="ij")
    return np.stack([a.ravel() for a in g], axis=-1)


def _unique_rows(p):
    if p.shape[1] == 2 and np.abs(p).max(initial=0) < _OFF:
        key = (p[:, 0] + _OFF) * (2 * _OFF) + (p[:, 1] + _OFF)
        _, idx = np.unique(key, return_index=True)
        return p[np.sort(idx)]
    return np.unique(p, axis=0)


def image_sequence(seq, pts):
    """Distinct images after each step: list of arrays (deduplicated)."""
    out = []
    for el in seq:
        A, v = _split(el)
        pts = _unique_rows(apply_hat(A, pts, v))
        out.append(pts)
    return out


@dataclass
class RateEstimate:
    R: int
    source_count: int
    counts: list          # distinct images after 1..k steps
    tau: float            # last step
    diagnostic: float     # |tau(R) - tau(R/2)|

    @property
    def taus(self):
        return [c / self.source_count for c in self.counts]


def sequence_rate(seq, R: int, n: int = 2, diagnostic=True) -> RateEstimate:
    """``tau^k = Card((A_k^ ... A_1^)[B_R]) / Card[B_R]`` by exact counting."""
    if R < 1:
        raise ValueError("R must be >= 1")
    src = box(R, n)
    counts = [len(p) for p in image_sequence(seq, src)]
    tau = counts[-1] / len(src)
    diag = float("nan")
    if diagnostic and R >= 2:
        half = sequence_rate(seq, R // 2, n, diagnostic=False)
        diag = abs(tau - half.tau)
    return RateEstimate(R, len(src), counts, tau, diag)


def source_radius(seq, R: float) -> int:
    """Radius of a source ball whose images contain every point of ``Gamma_k`` in ``B_R``."""
    r = float(R)
    for el in reversed(list(seq)):
        A, v = _split(el)
        inv = np.linalg.inv(A)
        r = np.abs(inv).sum(axis=1).max() * (r + 0.5 + np.abs(v).max())
    return int(math.ceil(r)) + 1


def pattern_window(seq, R: int, n: int = 2) -> np.ndarray:
    """Exact ``Gamma_k ∩ [B_R]`` (images of a large enough source ball)."""
    Rs = source_radius(seq, R)
    pts = image_sequence(seq, box(Rs, n))[-1]
    return pts[np.abs(pts).max(axis=1) <= R]


def pattern_indicator(seq, R: int) -> np.ndarray:
    """Boolean ``(2R+1, 2R+1)`` array of ``Gamma_k`` on ``[-R, R]^2``."""
    pts = pattern_window(seq, R)
    F = np.zeros((2 * R + 1, 2 * R + 1), dtype=bool)
    F[pts[:, 0] + R, pts[:, 1] + R] = True
    return F


def lattice_indicator(basis, R: int) -> np.ndarray:
    """Indicator of the integer lattice spanned by the columns of ``basis``."""
    B = np.asarray(basis, dtype=float)
    pts = box(R)
    c = pts @ np.linalg.inv(B).T
    on = np.all(np.abs(c - np.round(c)) < 1e-9, axis=1)
    return on.reshape(2 * R + 1, 2 * R + 1)


def window_density(F: np.ndarray) -> Fraction:
    return Fraction(int(F.sum()), int(F.size))


# -- difference frequencies -------------------------------------------------------

@dataclass
class DifferenceTable:
    """``counts[v + V]`` = #{x in Gamma ∩ B_{R-V} : x + v in Gamma}."""

    V: int
    counts: np.ndarray

    @property
    def base(self) -> int:
        return int(self.counts[self.V, self.V])

    def rho(self, v=None):
        if v is None:
            return self.counts / self.base
        return self.counts[v[0] + self.V, v[1] + self.V] / self.base

    def rho_exact(self, v) -> Fraction:
        return Fraction(int(self.counts[v[0] + self.V, v[1] + self.V]), self.base)

    def mean(self) -> float:
        return float(self.rho().mean())

    def rows(self):
        for i in range(2 * self.V + 1):
            for j in range(2 * self.V + 1):
                yield (i - self.V, j - self.V, self.counts[i, j] / self.base)


def difference_table(F: np.ndarray, V: int) -> DifferenceTable:
    """Boundary-corrected frequencies from an indicator on ``[-R, R]^2``.

    Only points of the inner box ``B_{R-V}`` are used as base points, so
    every shifted partner lies inside the known window.
    """
    R = (F.shape[0] - 1) // 2
    if V >= R:
        raise ValueError("V must be smaller than the window radius")
    inner = F[V:2 * R + 1 - V, V:2 * R + 1 - V].astype(float)
    c = correlate(F.astype(float), inner, mode="valid", method="fft")
    return DifferenceTable(V, np.rint(c).astype(np.int64))


def difference_frequencies(seq, R: int, V: int) -> DifferenceTable:
    return difference_table(pattern_indicator(seq, R), V)


# -- Minkowski / Hajos ----------------------------------------------------------------

def half_set(S_points):
    """``[S/2]``: integer ``u`` with ``2u`` in ``S`` (for convex ``S``)."""
    S = {tuple(int(t) for t in p) for p in np.asarray(S_points)}
    return sorted({(a // 2, b // 2) for a, b in S if a % 2 == 0 and b % 2 == 0})


def box_points(a: int):
    return [tuple(p) for p in box(a)]


def stripe_set(k: int):
    """Integer points of a symmetric convex set realizing equality for ``kZ x Z`` (k odd)."""
    if k % 2 == 0 or k < 1:
        raise ValueError("k must be odd")
    pts = [(i, 0) for i in range(-(k - 1), k)]
    pts += [(s * i, s) for i in range(1, k) for s in (1, -1)]
    return pts


@dataclass
class MinkowskiResult:
    lhs: float | Fraction
    rhs: float | Fraction
    passed: bool
    equality: bool


def minkowski_check(table: DifferenceTable, density, S_points, tol=0.02, exact=False):
    """``sum_{u in [S]} rho(u) >= D * Card[S/2]`` (within ``tol`` unless exact)."""
    S = [tuple(int(t) for t in p) for p in S_points]
    if set(S) != {(-a, -b) for a, b in S}:
        raise ValueError("S must be centrally symmetric")
    h = len(half_set(S))
    if exact:
        lhs = sum((table.rho_exact(u) for u in S), Fraction(0))
        rhs = Fraction(density) * h
        return MinkowskiResult(lhs, rhs, lhs >= rhs, lhs == rhs)
    lhs = float(sum(table.rho(u) for u in S))
    rhs = float(density) * h
    return MinkowskiResult(lhs, rhs, lhs >= rhs - tol, abs(lhs - rhs) <= tol)


def hajos_witness(A, B_max: int = 20, tol=1e-9):
    """Search ``B`` in SL2(Z), entries ``<= B_max``, with ``P A B`` unit upper triangular.

    Returns ``(P, B)`` or ``None``.  The lower-left entry and the diagonal
    only involve the first column of ``B``; the second column is then fixed
    up to multiples of the first.
    """
    A = np.asarray(A, dtype=float)
    if abs(np.linalg.det(A) - 1) > tol:
        raise ValueError("A must have determinant 1")
    r = np.arange(-B_max, B_max + 1)
    b1 = np.stack(np.meshgrid(r, r, indexing="ij"), -1).reshape(-1, 2)
    for P in (np.eye(2), np.array([[0.0, 1.0], [1.0, 0.0]])):
        img = b1 @ (P @ A).T
        ok = (np.abs(img[:, 1]) <= tol) & (np.abs(img[:, 0] - 1) <= tol)
        for a, c in b1[ok]:
            g, s, t = _egcd(int(a), int(c))
            if g != 1:
                continue
            # a*s + c*t = 1 -> second column (-t, s) gives det 1
            b = np.array([-t, s])
            col1 = np.array([a, c])
            for k in sorted(range(-4 * B_max, 4 * B_max + 1), key=abs):
                cand = b + k * col1
                if np.abs(cand).max() <= B_max:
                    B = np.column_stack([col1, cand]).astype(np.int64)
                    M = P @ A @ B
                    if abs(M[1, 0]) <= tol and abs(M[0, 0] - 1) <= tol and abs(M[1, 1] - 1) <= tol:
                        return P.astype(np.int64), B
    return None


def _egcd(a, b):
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    g, s, t = _egcd(b, a % b)
    return g, t, s - (a // b) * t


# -- geometry of the mean rate ------------------------------------------------------------

def _inf_norm(M):
    return float(np.abs(M).sum(axis=1).max())


def psi(A, x, strict=True):
    """Number of ``lambda in A Z^2`` with ``|x - lambda|_inf < 1/2`` (``strict``)
    or ``lambda - x in (-1/2, 1/2]^2`` (``strict=False``, the rounding cell)."""
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float)
    Ainv = np.linalg.inv(A)
    r = math.ceil(_inf_norm(Ainv)) + 1
    c = np.rint(x @ Ainv.T)
    out = np.zeros(x.shape[:-1], dtype=np.int64)
    for i in range(-r, r + 1):
        for j in range(-r, r + 1):
            z = c + np.array([i, j])
            d = x - z @ A.T
            if strict:
                hit = np.all(np.abs(d) < 0.5, axis=-1)
            else:
                hit = np.all((d >= -0.5) & (d < 0.5), axis=-1)
            out += hit
    return out


@dataclass
class GeometricRate:
    value: float
    stderr: float


def mean_rate_geometric(A, samples: int = 600) -> GeometricRate:
    """Average of ``1/psi`` over a stratified grid of ``samples^2`` points in the unit box."""
    t = (np.arange(samples) + 0.5) / samples - 0.5
    X, Y = np.meshgrid(t, t, indexing="ij")
    x = np.stack([X.ravel(), Y.ravel()], axis=-1)
    inv = 1.0 / psi(A, x)
    return GeometricRate(float(inv.mean()), float(inv.std(ddof=1) / math.sqrt(len(inv))))


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotation_rate_closed_form(theta):
    """Mean rate of a rotation by ``theta`` in ``[0, pi/2]``."""
    return 1 - (math.cos(theta) + math.sin(theta) - 1) ** 2


@dataclass
class FiberReport:
    passed: bool
    checked: int
    mismatches: list


def fiber_cardinality_check(A, points) -> FiberReport:
    """Brute-force fiber sizes of ``A_hat`` versus ``psi`` at the rounding residue.

    Meant for generic matrices: when ``A`` has rational entries, images of
    neighbours land exactly on rounding ties and the two float computations
    may resolve a tie differently.
    """
    A = np.asarray(A, dtype=float)
    pts = np.asarray(points, dtype=np.int64)
    img = apply_hat(A, pts)
    resid = pts @ A.T - img  # in (-1/2, 1/2]^2
    predicted = psi(A, -resid, strict=False)
    r = math.ceil(_inf_norm(np.linalg.inv(A))) + 1
    brute = np.zeros(len(pts), dtype=np.int64)
    for i in range(-r, r + 1):
        for j in range(-r, r + 1):
            y = pts + np.array([i, j])
            brute += np.all(apply_hat(A, y) == img, axis=1)
    bad = np.flatnonzero(brute != predicted)
    mism = [(pts[k].tolist(), int(brute[k]), int(predicted[k])) for k in bad[:10]]
    return FiberReport(len(bad) == 0, len(pts), mism)


def weighted_projection(u):
    """Multilinear interpolation weights of ``u`` on the vertices of its unit cube."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    base = np.floor(u).astype(np.int64)
    fr = u - base
    out = {}
    n = len(u)
    for corner in range(2**n):
        bits = np.array([(corner >> i) & 1 for i in range(n)])
        w = float(np.prod(np.where(bits == 1, fr, 1 - fr)))
        if w > 0:
            out[tuple(int(t) for t in base + bits)] = w
    return out


# -- cube unions -----------------------------------------------------------------------------

def block_matrix(seq) -> np.ndarray:
    """``M`` with block rows ``A_i z_i - z_{i+1}`` (i < k) and ``A_k z_k``."""
    mats = [_split(el)[0] for el in seq]
    k, n = len(mats), mats[0].shape[0]
    M = np.zeros((n * k, n * k))
    for i, A in enumerate(mats):
        M[n * i:n * i + n, n * i:n * i + n] = A
        if i + 1 < k:
            M[n * i:n * i + n, n * (i + 1):n * (i + 2)] = -np.eye(n)
    return M


@dataclass
class CubeUnionEstimate:
    value: float
    stderr: float
    samples: int
    max_candidates: int


class WindowExhausted(RuntimeError):
    pass


def cube_union_density(seq, samples: int = 20_000, seed=0, chunk: int = 4096) -> CubeUnionEstimate:
    """Monte Carlo covered fraction of ``W^k + M Z^{nk}`` in a fundamental domain.

    ``u`` is uniform in ``M [0,1)^{nk}``; membership asks for ``z`` with
    ``|u - M z|_inf <= 1/2`` and is decided block by block from the last
    row upward, branching over every admissible ``z_i`` in a window around
    ``A_i^{-1}(target)``.
    """
    mats = [_split(el)[0] for el in seq]
    k, n = len(mats), mats[0].shape[0]
    if n != 2 or k > 4:
        raise ValueError("cube unions are implemented for n = 2, k <= 4")
    M = block_matrix(seq)
    invs = [np.linalg.inv(A) for A in mats]
    radii = [math.ceil(_inf_norm(iv) * (0.5 + 0.5) + 1) for iv in invs]
    rng = np.random.Generator(np.random.Philox(seed))
    hits = 0
    max_c = 0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        w = rng.random((m, n * k))
        u = w @ M.T
        covered, mc = _covered(u, mats, invs, radii)
        hits += int(covered.sum())
        max_c = max(max_c, mc)
        done += m
    p = hits / samples
    return CubeUnionEstimate(p, math.sqrt(p * (1 - p) / samples), samples, max_c)


def _covered(u, mats, invs, radii, eps=1e-12):
    k = len(mats)
    m = len(u)
    # chains: (sample index, z of the block below)
    sid = np.arange(m)
    znext = np.zeros((m, 2))
    max_c = 0
    for i in range(k - 1, -1, -1):
        tgt = u[sid, 2 * i:2 * i + 2] + (znext if i < k - 1 else 0.0)
        c = np.rint(tgt @ invs[i].T)
        r = radii[i]
        offs = box(r).astype(float)
        cand = c[:, None, :] + offs[None, :, :]
        resid = tgt[:, None, :] - cand @ mats[i].T
        ok = np.all(np.abs(resid) <= 0.5 + eps, axis=-1)
        # an admissible z on the window boundary means the window may be too small
        edge = np.any(np.abs(offs) == r, axis=-1)
        if np.any(ok[:, edge]):
            raise WindowExhausted("admissible candidate on the search-window boundary")
        a, b = np.nonzero(ok)
        max_c = max(max_c, int(ok.sum(axis=1).max(initial=0)))
        sid = sid[a]
        znext = cand[a, b]
    covered = np.zeros(m, dtype=bool)
    covered[sid] = True
    return covered, max_c


# -- random sequences ------------------------------------------------------------------------

def random_sl2(rng, k):
    """``R_theta diag(e^t, e^-t) R_theta'``, theta uniform, t uniform in [-1/2, 1/2]."""
    out = []
    for _ in range(k):
        a, b = rng.uniform(0, 2 * math.pi, 2)
        t = rng.uniform(-0.5, 0.5)
        out.append(rotation(a) @ np.diag([math.exp(t), math.exp(-t)]) @ rotation(b))
    return out


def random_rotations(rng, k):
    return [rotation(t) for t in rng.uniform(0, 2 * math.pi, k)]


# -- local-global ------------------------------------------------------------------------------

@dataclass
class LocalGlobalEstimate:
    value: float
    stderr: float
    samples: int


def localglobal_estimate(m, t: int = 1, grid: int = 16, R: int = 100) -> LocalGlobalEstimate:
    """Average of ``tau^t(Df_x, ..., Df_{f^{t-1}x})`` over a ``grid x grid`` sample."""
    s = (np.arange(grid) + 0.5) / grid
    X, Y = np.meshgrid(s, s, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    mats = []
    x = pts
    for _ in range(t):
        mats.append(m.jac(x))
        x = m(x)
    vals = np.array([sequence_rate([mats[j][i] for j in range(t)], R, diagnostic=False).tau
                     for i in range(len(pts))])
    return LocalGlobalEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals))),
                               len(vals))


# -- roundoff statistics ------------------------------------------------------------------

@dataclass
class RoundoffReport:
    k: int
    count: int
    ks: list                  # per step (and coordinate) KS distance to uniform
    eps_range: tuple
    variance: np.ndarray      # empirical covariance of the cumulative error
    predicted: np.ndarray     # (1/12) sum_m B_m B_m^T, B_m = A_k ... A_{m+1}
    predicted_printed: np.ndarray  # same with B_m = A_k ... A_m
    non_generic: bool
    discrepancy: float | None = None
    histograms: list | None = None

    def as_dict(self):
        def f(a):
            a = np.asarray(a, dtype=float)
            return a.item() if a.size == 1 else a.tolist()
        return {
            "k": self.k, "count": self.count, "ks": [float(t) for t in self.ks],
            "eps_range": [float(t) for t in self.eps_range],
            "variance": f(self.variance), "predicted": f(self.predicted),
            "predicted_printed": f(self.predicted_printed),
            "non_generic": self.non_generic, "discrepancy": self.discrepancy,
            "std_error": float(np.sqrt(np.trace(np.atleast_2d(self.variance)))),
        }


def _as_matrices(seq):
    out = []
    for el in seq:
        a = np.asarray(el, dtype=float)
        out.append(a.reshape(1, 1) if a.ndim == 0 else a)
    return out


def partial_products(mats):
    """``[A_k ... A_{m+1} for m = 1..k]`` (last entry the identity)."""
    k = len(mats)
    n = mats[0].shape[0]
    out = [None] * k
    P = np.eye(n)
    for m in range(k - 1, -1, -1):
        out[m] = P.copy()
        P = P @ mats[m]
    return out


def predicted_variance(seq, printed=False):
    """Covariance of the cumulative error for independent uniform roundoffs.

    ``printed=True`` uses the products ``A_k ... A_m`` (one factor more),
    which for ``lambda = (2, 2)`` gives 5/3 instead of 5/12.
    """
    mats = _as_matrices(seq)
    B = partial_products(mats)
    if printed:
        B = [b @ mats[m] for m, b in enumerate(B)]
    return sum(b @ b.T for b in B) / 12.0


def is_non_generic(seq, q_max=100, tol=1e-6) -> bool:
    """Crude rationality screen on every scalar partial product (and every entry)."""
    mats = _as_matrices(seq)
    k = len(mats)
    for m in range(k):
        P = np.eye(mats[0].shape[0])
        for j in range(m, k):
            P = mats[j] @ P
        for v in P.ravel():
            if v == 0:
                continue
            fr = Fraction(float(v)).limit_denominator(q_max)
            if abs(float(fr) - v) < tol:
                return True
    return False


def roundoff_statistics(seq, R: int, bins: int = 0, discrepancy=True) -> RoundoffReport:
    """Per-step roundoff errors over ``x in [-R, R]^n`` and their cumulative effect."""
    from scipy.stats import kstest

    mats = _as_matrices(seq)
    k, n = len(mats), mats[0].shape[0]
    x = box(R, n).astype(float)
    y = x.copy()
    exact = x.copy()
    ks, hists = [], []
    lo, hi = 0.0, 0.0
    for A in mats:
        t = y @ A.T
        yh = round_half_down(t).astype(float)
        eps = yh - t
        lo, hi = min(lo, eps.min()), max(hi, eps.max())
        for c in range(n):
            ks.append(kstest(eps[:, c], "uniform", args=(-0.5, 1.0)).statistic)
            if bins:
                hists.append(np.histogram(eps[:, c], bins=bins, range=(-0.5, 0.5))[0].tolist())
        y = yh
        exact = exact @ A.T
    E = y - exact
    var = np.atleast_2d(np.cov(E.T, bias=True)) if n > 1 else np.array([[E[:, 0].var()]])
    disc = None
    if discrepancy and n == 1:
        disc = discrepancy_1d([float(A[0, 0]) for A in mats], R)
    return RoundoffReport(k, len(x), ks, (lo, hi), var, predicted_variance(mats),
                          predicted_variance(mats, printed=True), is_non_generic(mats),
                          disc, hists or None)


def discrepancy_1d(lams, R: int, samples_per_unit: int = 4) -> float:
    """RMS of ``Card([-x, x] ∩ E) - 2x / prod(lambda)`` over ``x in [0, X]``.

    ``E`` is the image of ``[-R, R] ∩ Z`` and ``X`` stays well inside its
    span so that the truncation does not enter.  Midpoint sampling with
    ``samples_per_unit`` points per unit length of ``x``.
    """
    z = np.arange(-R, R + 1, dtype=float)
    L = 1.0
    for lam in lams:
        z = round_half_down(lam * z).astype(float)
        L *= lam
    if L < 1:
        raise ValueError("discrepancy is implemented for expanding sequences")
    E = np.sort(np.unique(z))
    X = 0.9 * R * L
    m = int(X * samples_per_unit)
    xs = (np.arange(m) + 0.5) / samples_per_unit
    card = np.searchsorted(E, xs, side="right") - np.searchsorted(E, -xs, side="left")
    dev = card - 2 * xs / L
    return float(np.sqrt(np.mean(dev**2)))
