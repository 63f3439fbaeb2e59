"""Independent reference computations used by the test suite.

None of these share code with the package solvers.
"""

from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.optimize import linprog


@lru_cache(maxsize=None)
def _vertex_table(m, n):
    """All bases of the (m x n) transportation polytope and their inverse matrices."""
    arcs = [(i, j) for i in range(m) for j in range(n)]
    # Equality rows: m source rows and n sink rows; the last sink row is redundant.
    eq = np.zeros((m + n - 1, m * n))
    for k, (i, j) in enumerate(arcs):
        eq[i, k] = 1.0
        if j < n - 1:
            eq[m + j, k] = 1.0
    size = m + n - 1
    subsets = np.array(list(combinations(range(m * n), size)), dtype=int)
    mats = eq[:, subsets].transpose(1, 0, 2)  # (n_subsets, size, size)
    dets = np.linalg.det(mats)
    keep = np.abs(dets) > 0.5  # incidence matrices are totally unimodular
    return subsets[keep], np.linalg.inv(mats[keep])


def brute_force_transport(cost, a, b):
    """Minimum of ``<cost, F>`` over all vertices of the transportation polytope."""
    cost = np.asarray(cost, dtype=float)
    m, n = cost.shape
    subsets, inv = _vertex_table(m, n)
    rhs = np.concatenate([a, b[:-1]])
    flows = inv @ rhs
    feasible = np.all(flows >= -1e-9, axis=1)
    vals = np.sum(flows * cost.ravel()[subsets], axis=1)
    return float(np.min(vals[feasible]))


def plain_levy_network(xs, wx, ys, wy):
    """The origin-augmented network with supplies (wx, |wy|) and demands (wy, |wx|)."""
    m, n = len(wx), len(wy)
    c = np.zeros((m + 1, n + 1))
    for i in range(m):
        for j in range(n):
            c[i, j] = 0.5 * float(np.sum((np.asarray(xs[i], float) - np.asarray(ys[j], float)) ** 2))
        c[i, n] = 0.5 * float(np.sum(np.asarray(xs[i], float) ** 2))
    for j in range(n):
        c[m, j] = 0.5 * float(np.sum(np.asarray(ys[j], float) ** 2))
    a = np.append(np.asarray(wx, dtype=float), float(np.sum(wy)))
    b = np.append(np.asarray(wy, dtype=float), float(np.sum(wx)))
    return c, a, b


def brute_force_levy_cost(xs, wx, ys, wy):
    c, a, b = plain_levy_network(xs, wx, ys, wy)
    if a.sum() == 0:
        return 0.0
    return brute_force_transport(c, a, b)


def linprog_levy_cost(xs, wx, ys, wy):
    """The Lévy problem as an LP with slack to the origin, solved by HiGHS.

    Variables: pair flows g_ij, then a_i (x_i absorbed at 0), then b_j
    (y_j created at 0).
    """
    m, n = len(wx), len(wy)
    if m + n == 0:
        return 0.0
    d = np.asarray(xs).shape[-1] if m else np.asarray(ys).shape[-1]
    xs = np.asarray(xs, dtype=float).reshape(m, d)
    ys = np.asarray(ys, dtype=float).reshape(n, d)
    pair = 0.5 * ((xs[:, None, :] - ys[None, :, :]) ** 2).sum(-1).ravel()
    c = np.concatenate([pair, 0.5 * (xs**2).sum(1), 0.5 * (ys**2).sum(1)])
    nv = m * n + m + n
    a_eq = np.zeros((m + n, nv))
    for i in range(m):
        a_eq[i, i * n : (i + 1) * n] = 1.0
        a_eq[i, m * n + i] = 1.0
    for j in range(n):
        a_eq[m + j, j : m * n : n] = 1.0
        a_eq[m + j, m * n + m + j] = 1.0
    res = linprog(c, A_eq=a_eq, b_eq=np.concatenate([wx, wy]), bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


def linprog_transport(cost, a, b):
    m, n = cost.shape
    a_eq = np.zeros((m + n, m * n))
    for i in range(m):
        a_eq[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        a_eq[m + j, j::n] = 1.0
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=np.concatenate([a, b]), bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


def scalar_dual_grid(alpha, beta, n=4001, span=4.0):
    """Best ``alpha*A + beta*B`` over scalar pairs with [[A,0],[0,B]] <= 0.5[[1,-1],[-1,1]].

    For each A < 1/2 on a grid, the largest feasible B is 1/2 - 1/(4(1/2 - A)).
    """
    a = np.linspace(0.5 - span, 0.5 - 1e-6, n)
    b = 0.5 - 0.25 / (0.5 - a)
    vals = alpha * a + beta * b
    k = int(np.argmax(vals))
    return float(vals[k]), float(a[k]), float(b[k])


def all_cycles_min(xs, ys, max_len):
    """Most negative value of sum <y_k, x_k - x_next(k)> over simple cycles, by enumeration."""
    from itertools import permutations

    n = len(xs)
    best = 0.0
    for L in range(2, min(max_len, n) + 1):
        for subset in combinations(range(n), L):
            first = subset[0]
            for rest in permutations(subset[1:]):
                cyc = (first,) + rest
                val = sum(float(np.dot(ys[cyc[t]], xs[cyc[t]] - xs[cyc[(t + 1) % L]])) for t in range(L))
                best = min(best, val)
    return best


def random_psd(rng, d, min_eig=0.0, rank=None):
    r = d if rank is None else rank
    g = rng.normal(size=(d, r))
    m = g @ g.T / max(r, 1)
    if min_eig > 0:
        m = m + min_eig * np.eye(d)
    return 0.5 * (m + m.T)
