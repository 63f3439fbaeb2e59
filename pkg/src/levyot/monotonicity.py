"""Cyclical monotonicity of a finite support for the cost ``0.5 |x - y|^2``.

A set of pairs ``(x_k, y_k)`` is cyclically monotone when no cyclic
reassignment ``y_k -> x_{s(k)}`` lowers the total cost. Expanding the squares,
the cost change of a cycle is::

    sum_k <y_k, x_k - x_{s(k)}>        (must be >= 0)

so with edge weights ``W[a, b] = <y_a, x_a - x_b>`` a violation is exactly a
negative cycle in the complete digraph. Cycles of length up to ``k`` are
covered exhaustively by min-plus powers of ``W``: the zero diagonal lets a
closed walk of ``k`` steps stand for every shorter one, and any negative
closed walk contains a negative simple cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_EXHAUSTIVE = 6
N_RANDOM = 10_000


@dataclass(frozen=True)
class MonotonicityReport:
    passed: bool
    n_points: int
    max_exhaustive: int
    n_random: int
    worst_value: float  # most negative cycle value found (0 if none)
    cycle: tuple | None = None  # point indices; y of each point is reassigned to x of the next
    cycle_points: tuple | None = None
    tolerance: float = 0.0

    @property
    def cycle_length(self):
        return 0 if self.cycle is None else len(self.cycle)


def _weights(xs, ys):
    inner = ys @ xs.T  # inner[a, b] = <y_a, x_b>
    return np.diag(inner)[:, None] - inner


def _min_plus(a, b, block_bytes=32 * 2**20):
    # out[i, j] = min_k a[i, k] + b[k, j], with the minimising k
    n = a.shape[0]
    rows = max(1, block_bytes // (8 * n * n))
    out = np.empty_like(a)
    arg = np.empty(a.shape, dtype=np.intp)
    for r in range(0, n, rows):
        s = a[r : r + rows, :, None] + b[None, :, :]
        k = np.argmin(s, axis=1)
        arg[r : r + rows] = k
        out[r : r + rows] = np.take_along_axis(s, k[:, None, :], axis=1)[:, 0, :]
    return out, arg


def _walk_to_cycle(walk, w):
    """Split a closed walk into simple cycles and return the most negative one."""
    best, best_val = None, np.inf
    stack, pos = [], {}
    for v in walk + [walk[0]]:
        if v in pos:
            i = pos[v]
            cyc = stack[i:]
            for u in cyc:
                del pos[u]
            del stack[i:]
            if len(cyc) > 1:
                val = sum(w[cyc[t], cyc[(t + 1) % len(cyc)]] for t in range(len(cyc)))
                if val < best_val:
                    best, best_val = cyc, val
        pos[v] = len(stack)
        stack.append(v)
    return best, best_val


def _exhaustive(w, k):
    """Most negative closed walk of length <= k; returns (value, walk)."""
    args = []
    cur = w
    best_val, best = 0.0, None
    for step in range(2, k + 1):
        cur, arg = _min_plus(cur, w)
        args.append(arg)
        diag = np.diag(cur)
        i = int(np.argmin(diag))
        if diag[i] < best_val:
            best_val, best = diag[i], (i, step)
    if best is None:
        return 0.0, None
    start, length = best
    # the L-step walk value at (s, v) was reached through args[L-2][s, v] as last hop
    walk = [start]
    v = start
    for L in range(length, 1, -1):
        prev = int(args[L - 2][start, v])
        walk.append(prev)
        v = prev
    return best_val, walk[::-1]


def _random_cycles(w, n_random, rng):
    n = w.shape[0]
    if n < 2 or n_random <= 0:
        return 0.0, None
    lengths = rng.integers(2, n + 1, size=n_random)
    perms = np.argsort(rng.random((n_random, n)), axis=1)
    # a cycle of length L follows the first L entries of its row, then closes
    path = np.cumsum(w[perms[:, :-1], perms[:, 1:]], axis=1)
    rows = np.arange(n_random)
    vals = path[rows, lengths - 2] + w[perms[rows, lengths - 1], perms[:, 0]]
    i = int(np.argmin(vals))
    if vals[i] < 0.0:
        return float(vals[i]), perms[i, : lengths[i]].tolist()
    return 0.0, None


def check_cyclical_monotonicity(
    sources,
    targets,
    max_cycle=4,
    n_random=N_RANDOM,
    seed=0,
    adjoin_origin=True,
    tol=None,
):
    """Certify that the support ``{(x_k, y_k)}`` (plus ``(0, 0)``) is cyclically monotone.

    All cycles of length ``<= min(max_cycle, 6)`` are checked exhaustively;
    ``n_random`` further cycles of random length are sampled when the point
    set is larger than the exhaustive limit. Returns the worst violating
    cycle found, if any.
    """
    if max_cycle < 2:
        raise ValueError("max_cycle must be at least 2")
    xs = np.atleast_2d(np.asarray(sources, dtype=float))
    ys = np.atleast_2d(np.asarray(targets, dtype=float))
    if xs.shape != ys.shape:
        raise ValueError("sources and targets must have the same shape")
    if adjoin_origin:
        zero = np.zeros((1, xs.shape[1]))
        at_origin = np.all(xs == 0, axis=1) & np.all(ys == 0, axis=1)
        xs = np.vstack([xs[~at_origin], zero])
        ys = np.vstack([ys[~at_origin], zero])
    n = xs.shape[0]
    k = min(max_cycle, MAX_EXHAUSTIVE, n)
    w = _weights(xs, ys)
    if tol is None:
        scale = float(np.max(np.einsum("ij,ij->i", xs, xs) + np.einsum("ij,ij->i", ys, ys), initial=0.0))
        tol = 1e-9 * (1.0 + scale)

    worst, cycle = 0.0, None
    if n >= 2:
        val, walk = _exhaustive(w, k)
        if walk is not None and val < -tol:
            cyc, cval = _walk_to_cycle(walk, w)
            worst, cycle = cval, cyc
    n_rand = n_random if n > k else 0
    if cycle is None and n_rand:
        rng = np.random.default_rng(seed)
        val, cyc = _random_cycles(w, n_rand, rng)
        if val < -tol:
            worst, cycle = val, cyc
    points = None
    if cycle is not None:
        points = tuple((tuple(xs[i].tolist()), tuple(ys[i].tolist())) for i in cycle)
    return MonotonicityReport(
        passed=cycle is None,
        n_points=n,
        max_exhaustive=k,
        n_random=n_rand,
        worst_value=float(worst),
        cycle=None if cycle is None else tuple(int(i) for i in cycle),
        cycle_points=points,
        tolerance=tol,
    )
