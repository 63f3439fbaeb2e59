"""Network simplex for the balanced transportation problem.

Sources ``0..m-1`` ship to sinks ``0..n-1``; the basis is a spanning tree of
``m + n - 1`` arcs of the complete bipartite graph. Entering arcs are chosen
by the most negative reduced cost; after a run of degenerate pivots the
solver switches to Bland's rule (smallest index for both the entering and the
leaving arc) until the objective moves again, which rules out cycling.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


class SolverError(RuntimeError):
    """The simplex failed on a valid instance; this indicates a bug."""


@dataclass
class SimplexResult:
    flow: np.ndarray  # (m, n)
    u: np.ndarray  # source potentials
    v: np.ndarray  # sink potentials, c_ij >= u_i + v_j at optimality
    basis: np.ndarray  # (m, n) bool
    objective: float
    iterations: int


DEGENERATE_RUN = 20


def northwest_corner(a, b):
    """Initial basic feasible solution along a staircase; always a spanning tree."""
    m, n = len(a), len(b)
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    flow = np.zeros((m, n))
    basis = np.zeros((m, n), dtype=bool)
    i = j = 0
    while True:
        if i == m - 1 and j == n - 1:
            f = max(a[i], 0.0)
        else:
            f = min(a[i], b[j])
        flow[i, j] = f
        basis[i, j] = True
        a[i] -= f
        b[j] -= f
        if i == m - 1 and j == n - 1:
            break
        if (a[i] <= b[j] and i < m - 1) or j == n - 1:
            i += 1
        else:
            j += 1
    return flow, basis


def _tree(basis, m, n, root):
    """BFS over the basis tree. Nodes: sources 0..m-1, sinks m..m+n-1."""
    rows, cols = np.nonzero(basis)
    adj = [[] for _ in range(m + n)]
    for i, j in zip(rows.tolist(), cols.tolist()):
        adj[i].append(m + j)
        adj[m + j].append(i)
    parent = [-1] * (m + n)
    depth = [-1] * (m + n)
    depth[root] = 0
    order = [root]
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if depth[y] < 0:
                depth[y] = depth[x] + 1
                parent[y] = x
                order.append(y)
                queue.append(y)
    if len(order) != m + n:
        raise SolverError("basis is not a spanning tree")
    return parent, depth, order


def _potentials(cost, parent, order, m, root):
    pot = np.zeros(len(parent))
    for x in order[1:]:
        p = parent[x]
        if x >= m:  # sink reached from source p: v_j = c_pj - u_p
            pot[x] = cost[p, x - m] - pot[p]
        else:  # source reached from sink p: u_i = c_ip - v_p
            pot[x] = cost[x, p - m] - pot[p]
    return pot[:m], pot[m:]


def _cycle(p, q, parent, depth, m):
    """Tree path from sink q to source p, as a list of arcs with alternating signs."""
    a, b = m + q, p
    left, right = [], []
    while depth[a] > depth[b]:
        left.append((a, parent[a]))
        a = parent[a]
    while depth[b] > depth[a]:
        right.append((parent[b], b))
        b = parent[b]
    while a != b:
        left.append((a, parent[a]))
        a = parent[a]
        right.append((parent[b], b))
        b = parent[b]
    path = left + right[::-1]
    arcs = []
    for x, y in path:
        i, j = (x, y - m) if x < m else (y, x - m)
        arcs.append((i, j))
    return arcs


def transport_simplex(cost, a, b, flow=None, basis=None, root=0, max_iter=None):
    """Solve ``min <cost, F>`` over ``F >= 0`` with row sums ``a`` and column sums ``b``.

    ``flow``/``basis`` give an initial basic feasible solution (defaults to
    the northwest corner rule). Potentials are normalised so that the
    potential of source ``root`` is zero.
    """
    cost = np.asarray(cost, dtype=float)
    m, n = cost.shape
    if flow is None:
        flow, basis = northwest_corner(a, b)
    else:
        flow = np.array(flow, dtype=float)
        basis = np.array(basis, dtype=bool)
    if basis.sum() != m + n - 1:
        raise SolverError(f"initial basis has {basis.sum()} arcs, expected {m + n - 1}")

    scale = 1.0 + float(np.max(np.abs(cost))) if cost.size else 1.0
    rc_tol = 1e-12 * scale
    flow_tol = 1e-15 * (1.0 + float(np.sum(a)))
    if max_iter is None:
        max_iter = 50 * (m + n) ** 2 + 1000

    bland = False
    degenerate_run = 0
    for it in range(max_iter):
        parent, depth, order = _tree(basis, m, n, root)
        u, v = _potentials(cost, parent, order, m, root)
        reduced = cost - u[:, None] - v[None, :]
        if bland:
            cand = np.flatnonzero(reduced.ravel() < -rc_tol)
            if cand.size == 0:
                break
            k = int(cand[0])
        else:
            k = int(np.argmin(reduced))
            if reduced.flat[k] >= -rc_tol:
                break
        p, q = divmod(k, n)

        arcs = _cycle(p, q, parent, depth, m)
        minus = arcs[0::2]
        plus = arcs[1::2]
        theta = min(flow[i, j] for i, j in minus)
        ties = [(i, j) for i, j in minus if flow[i, j] <= theta + flow_tol]
        if bland:
            leave = min(ties, key=lambda ij: ij[0] * n + ij[1])
        else:
            leave = ties[0]
        theta = flow[leave]

        for i, j in minus:
            flow[i, j] = max(flow[i, j] - theta, 0.0)
        for i, j in plus:
            flow[i, j] += theta
        flow[p, q] += theta
        flow[leave] = 0.0
        basis[p, q] = True
        basis[leave] = False

        if theta <= flow_tol:
            degenerate_run += 1
            if degenerate_run >= DEGENERATE_RUN:
                bland = True
        else:
            degenerate_run = 0
            bland = False
    else:
        raise SolverError(f"no convergence after {max_iter} pivots")

    objective = float(np.sum(flow * cost))
    return SimplexResult(flow, u, v, basis, objective, it)
