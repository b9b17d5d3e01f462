"""Compiled kernels: map interpreter, image tables, functional-graph sweeps.

The interpreter walks the flat ``(ops, params)`` program produced by
:meth:`artifact.maps.MapExpr.program`.  Trig blocks are laid out as
``[const, ncos, ntent, (f, theta, a)*, (f, phase, a)*]``.
"""
import math

import numpy as np
from numba import njit, prange

TWO_PI = 2.0 * math.pi


@njit(cache=True)
def _trig(params, off, x):
    u = x - math.floor(x)
    val = params[off]
    nc = int(params[off + 1])
    nt = int(params[off + 2])
    j = off + 3
    for _ in range(nc):
        val += params[j + 2] * math.cos(TWO_PI * params[j] * u + params[j + 1])
        j += 3
    for _ in range(nt):
        w = params[j] * (u + params[j + 1])
        val += params[j + 2] * abs(1.0 - 2.0 * (w - math.floor(w)))
        j += 3
    return val


@njit(cache=True)
def lift_point(ops, params, x, y):
    for k in range(ops.shape[0]):
        code = ops[k, 0]
        off = ops[k, 1]
        if code == 0:
            y = y + _trig(params, off, x)
        elif code == 1:
            x = x + _trig(params, off, y)
        elif code == 2:
            nx = params[off] * x + params[off + 1] * y
            y = params[off + 2] * x + params[off + 3] * y
            x = nx
        elif code == 3:
            x = x + params[off]
            y = y + params[off + 1]
        elif code == 4:
            x = params[off] * x + _trig(params, off + 1, x)
        elif code == 5:
            x = x + _trig(params, off, x)
        else:
            oa = int(params[off])
            ob = int(params[off + 1])
            oc = int(params[off + 2])
            od = int(params[off + 3])
            nx = x + _trig(params, oa, x) + _trig(params, ob, y)
            y = y + _trig(params, oc, x) + _trig(params, od, y)
            x = nx
    return x, y


@njit(cache=True)
def _round_hd(v):
    # ceil(v - 1/2): ties go down
    return math.ceil(v - 0.5)


@njit(cache=True)
def image_ordinal(ops, params, N, n, o):
    """Ordinal of ``f_N`` applied to grid ordinal ``o``."""
    if n == 1:
        fx, _ = lift_point(ops, params, o / N, 0.0)
        return int(_round_hd(N * fx)) % N
    i0 = o % N
    i1 = o // N
    fx, fy = lift_point(ops, params, i0 / N, i1 / N)
    j0 = int(_round_hd(N * fx)) % N
    j1 = int(_round_hd(N * fy)) % N
    return j0 + N * j1


@njit(parallel=True, cache=True)
def image_table(ops, params, N, n, start, stop):
    out = np.empty(stop - start, dtype=np.int64)
    for k in prange(stop - start):
        out[k] = image_ordinal(ops, params, N, n, start + k)
    return out


@njit(parallel=True, cache=True)
def image_table_with_shift(ops, params, N, n):
    """Image ordinals and the integer lift displacement ``round(N F(x)) - N x``."""
    q = N**n
    out = np.empty(q, dtype=np.int64)
    disp = np.empty((q, 2), dtype=np.int64)
    for o in prange(q):
        if n == 1:
            fx, _ = lift_point(ops, params, o / N, 0.0)
            k0 = int(_round_hd(N * fx))
            disp[o, 0] = k0 - o
            disp[o, 1] = 0
            out[o] = k0 % N
        else:
            i0 = o % N
            i1 = o // N
            fx, fy = lift_point(ops, params, i0 / N, i1 / N)
            k0 = int(_round_hd(N * fx))
            k1 = int(_round_hd(N * fy))
            disp[o, 0] = k0 - i0
            disp[o, 1] = k1 - i1
            out[o] = (k0 % N) + N * (k1 % N)
    return out, disp


@njit(parallel=True, cache=True)
def lift_many(ops, params, pts, steps):
    """Iterate the lift ``steps`` times from each row of ``pts`` (shape (K, 2))."""
    out = np.empty_like(pts)
    for k in prange(pts.shape[0]):
        x = pts[k, 0]
        y = pts[k, 1]
        for _ in range(steps):
            x, y = lift_point(ops, params, x, y)
        out[k, 0] = x
        out[k, 1] = y
    return out


@njit(cache=True)
def sweep(table):
    """Path-marking cycle decomposition of a functional graph.

    Visits ordinals in ascending order; each successor is read once.  Colors:
    0 unvisited, 1 on the current path, 2 finished.  Returns
    ``(cycle_of, tail, cycle_start, cycle_len)`` where ``cycle_start`` is the
    point at which the cycle was first closed.
    """
    q = table.shape[0]
    color = np.zeros(q, dtype=np.uint8)
    cycle_of = np.empty(q, dtype=np.int64)
    tail = np.empty(q, dtype=np.int64)
    path = np.empty(q, dtype=np.int64)
    starts = []
    lens = []
    for s in range(q):
        if color[s] != 0:
            continue
        m = 0
        x = s
        while color[x] == 0:
            color[x] = 1
            path[m] = x
            m += 1
            x = table[x]
        if color[x] == 1:
            # closed a new cycle at x
            cid = len(starts)
            j = m - 1
            clen = 0
            while True:
                y = path[j]
                cycle_of[y] = cid
                tail[y] = 0
                color[y] = 2
                clen += 1
                j -= 1
                if y == x:
                    break
            starts.append(x)
            lens.append(clen)
            cid_t = cid
            base = 0
        else:
            cid_t = cycle_of[x]
            base = tail[x]
            j = m - 1
        d = base
        while j >= 0:
            y = path[j]
            d += 1
            cycle_of[y] = cid_t
            tail[y] = d
            color[y] = 2
            j -= 1
    cs = np.empty(len(starts), dtype=np.int64)
    cl = np.empty(len(lens), dtype=np.int64)
    for i in range(len(starts)):
        cs[i] = starts[i]
        cl[i] = lens[i]
    return cycle_of, tail, cs, cl


@njit(cache=True)
def floyd_table(table, x0):
    """Tortoise and hare on a materialized table: (tail, cycle length)."""
    t = table[x0]
    h = table[table[x0]]
    while t != h:
        t = table[t]
        h = table[table[h]]
    mu = 0
    t = x0
    while t != h:
        t = table[t]
        h = table[h]
        mu += 1
    lam = 1
    h = table[t]
    while t != h:
        h = table[h]
        lam += 1
    return mu, lam, t


@njit(cache=True)
def floyd_fly(ops, params, N, n, x0):
    """Tortoise and hare evaluating the map on the fly, O(1) memory."""
    t = image_ordinal(ops, params, N, n, x0)
    h = image_ordinal(ops, params, N, n, t)
    while t != h:
        t = image_ordinal(ops, params, N, n, t)
        h = image_ordinal(ops, params, N, n, image_ordinal(ops, params, N, n, h))
    mu = 0
    t = x0
    while t != h:
        t = image_ordinal(ops, params, N, n, t)
        h = image_ordinal(ops, params, N, n, h)
        mu += 1
    lam = 1
    h = image_ordinal(ops, params, N, n, t)
    while t != h:
        h = image_ordinal(ops, params, N, n, h)
        lam += 1
    return mu, lam, t


@njit(cache=True)
def walk_cycle_fly(ops, params, N, n, x, lam):
    out = np.empty(lam, dtype=np.int64)
    for i in range(lam):
        out[i] = x
        x = image_ordinal(ops, params, N, n, x)
    return out


@njit(cache=True)
def walk_cycle_table(table, x, lam):
    out = np.empty(lam, dtype=np.int64)
    for i in range(lam):
        out[i] = x
        x = table[x]
    return out
