"""Exact optimal transport between discrete Lévy measures.

A Lévy coupling may create mass at, or absorb mass into, the origin. The
problem therefore reduces to a balanced transportation problem on an
origin-augmented network::

    sources: atoms of mu  (supply w_i)   + ORIGIN  (supply |nu| + s)
    sinks:   atoms of nu  (demand w_j)   + ORIGIN  (demand |mu| + s)

with arc costs ``0.5|x_i - y_j|^2``, ``0.5|x_i|^2`` (atom to origin),
``0.5|y_j|^2`` (origin to atom) and 0 between the two origins. The surplus
``s > 0`` only ever travels origin-to-origin at zero cost, so the optimum is
unchanged, but that arc then carries positive flow in every basis and
complementary slackness pins ``phi(0) + psi(0) = 0``. Normalising the origin
source potential to 0 gives ``phi(0) = psi(0) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._simplex import SolverError, transport_simplex
from .core import (
    DimensionError,
    DiscreteLevyMeasure,
    LevyCoupling,
    ValidationError,
    marginal_tolerance,
    validate_coupling,
)
from .monotonicity import check_cyclical_monotonicity

__all__ = [
    "TransportSolution",
    "levy_ot_solve",
    "classical_ot_solve",
    "extract_duals",
    "levy_cost_matrix",
    "DualCheckError",
    "SolverError",
]

TOL_NUM = 1e-8


class DualCheckError(SolverError):
    """Dual potentials failed feasibility or complementary slackness."""


@dataclass(frozen=True)
class TransportSolution:
    """Optimal cost, plan and normalised dual potentials.

    ``phi[i]`` is the potential at ``mu.locations[i]``, ``psi[j]`` at
    ``nu.locations[j]``. For Lévy problems both potentials vanish at the
    origin; for classical problems ``phi`` at the first atom is 0.
    """

    cost: float
    plan: LevyCoupling
    phi: np.ndarray
    psi: np.ndarray
    duality_gap: float
    monotone_certified: bool | None
    mu: DiscreteLevyMeasure
    nu: DiscreteLevyMeasure
    kind: str = "levy"
    iterations: int = 0

    @property
    def distance(self):
        return float(np.sqrt(self.cost))

    def tol_gap(self):
        return 1e-8 * (1.0 + abs(self.cost))


def _sq_dists(x, y):
    diff = x[:, None, :] - y[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def levy_cost_matrix(mu, nu):
    """Cost matrix of the origin-augmented network (origin is the last row/column)."""
    m, n = mu.n_atoms, nu.n_atoms
    c = np.zeros((m + 1, n + 1))
    c[:m, :n] = 0.5 * _sq_dists(mu.locations, nu.locations)
    c[:m, n] = 0.5 * np.einsum("ij,ij->i", mu.locations, mu.locations)
    c[m, :n] = 0.5 * np.einsum("ij,ij->i", nu.locations, nu.locations)
    return c


def _check_pair(mu, nu):
    if not isinstance(mu, DiscreteLevyMeasure) or not isinstance(nu, DiscreteLevyMeasure):
        raise TypeError("expected DiscreteLevyMeasure inputs")
    if mu.d != nu.d:
        raise DimensionError(f"dimension mismatch: {mu.d} vs {nu.d}")


def _plan_from_flow(flow, mu, nu, with_origin):
    m, n = mu.n_atoms, nu.n_atoms
    d = mu.d
    tiny = 1e-15 * (1.0 + mu.total_mass + nu.total_mass)
    rows, cols = np.nonzero(flow > tiny)
    xs = np.zeros((rows.size, d))
    ys = np.zeros((rows.size, d))
    real_r = rows < m
    real_c = cols < n
    xs[real_r] = mu.locations[rows[real_r]]
    ys[real_c] = nu.locations[cols[real_c]]
    w = flow[rows, cols]
    if with_origin:
        keep = real_r | real_c
        xs, ys, w = xs[keep], ys[keep], w[keep]
    return LevyCoupling(xs, ys, w, d=d)


def _solve_levy(mu, nu):
    m, n = mu.n_atoms, nu.n_atoms
    cost = levy_cost_matrix(mu, nu)
    mass_mu, mass_nu = mu.total_mass, nu.total_mass
    surplus = mass_mu + mass_nu if mass_mu + mass_nu > 0 else 1.0
    a = np.concatenate([mu.weights, [mass_nu + surplus]])
    b = np.concatenate([nu.weights, [mass_mu + surplus]])

    # Start from the trivial coupling: every atom paired with the origin.
    flow = np.zeros((m + 1, n + 1))
    basis = np.zeros((m + 1, n + 1), dtype=bool)
    flow[:m, n] = mu.weights
    flow[m, :n] = nu.weights
    flow[m, n] = surplus
    basis[:, n] = True
    basis[m, :] = True

    res = transport_simplex(cost, a, b, flow, basis, root=m)
    if not res.basis[m, n]:
        raise SolverError("origin-origin arc left the basis")
    # root=m fixes u_origin = 0; the positive origin-origin flow forces v_origin = 0.
    phi = res.u[:m].copy()
    psi = res.v[:n].copy()
    plan = _plan_from_flow(res.flow, mu, nu, with_origin=True)
    return plan, phi, psi, res.iterations


def _ordered(mu, nu):
    # Fixed order on the pair so solve(mu, nu) and solve(nu, mu) do identical arithmetic.
    return mu.key() > nu.key()


def levy_ot_solve(mu, nu, certify=True, max_cycle=4, n_random=10_000, seed=0):
    """Exact 2-optimal Lévy transport between two discrete Lévy measures.

    Returns the optimal cost ``C(mu, nu) = W_Lambda(mu, nu)^2``, an optimal
    plan (vertex of the transportation polytope; ties are broken by pivot
    order and are not canonical), origin-normalised dual potentials and the
    duality gap. With ``certify`` the plan support, with (0, 0) adjoined, is
    also checked for cyclical monotonicity.
    """
    _check_pair(mu, nu)
    swap = _ordered(mu, nu)
    first, second = (nu, mu) if swap else (mu, nu)
    plan, phi, psi, iters = _solve_levy(first, second)
    cost = plan.cost()
    if swap:
        plan = plan.swapped()
        phi, psi = psi, phi
    gap = float(np.dot(mu.weights, phi) + np.dot(nu.weights, psi)) - cost
    monotone = None
    if certify:
        report = check_cyclical_monotonicity(
            plan.sources, plan.targets, max_cycle=max_cycle, n_random=n_random, seed=seed
        )
        monotone = report.passed
    return TransportSolution(cost, plan, phi, psi, gap, monotone, mu, nu, "levy", iters)


def classical_ot_solve(mu, nu, certify=True, max_cycle=4, n_random=10_000, seed=0):
    """Classical optimal transport between measures of equal total mass.

    Same network as the Lévy solver with both origin nodes removed; mass can
    no longer be created or destroyed at the origin.
    """
    _check_pair(mu, nu)
    if abs(mu.total_mass - nu.total_mass) > marginal_tolerance(mu, nu):
        raise ValidationError(
            f"unbalanced masses: {mu.total_mass!r} vs {nu.total_mass!r}"
        )
    if mu.n_atoms == 0:
        empty = LevyCoupling(np.zeros((0, mu.d)), np.zeros((0, mu.d)), [], d=mu.d)
        return TransportSolution(0.0, empty, np.zeros(0), np.zeros(0), 0.0, True, mu, nu, "classical")
    swap = _ordered(mu, nu)
    first, second = (nu, mu) if swap else (mu, nu)
    cost = 0.5 * _sq_dists(first.locations, second.locations)
    b = second.weights * (first.total_mass / second.total_mass)
    res = transport_simplex(cost, first.weights, b, root=0)
    plan = _plan_from_flow(res.flow, first, second, with_origin=False)
    total = plan.cost()
    phi, psi = res.u, res.v
    if swap:
        plan = plan.swapped()
        phi, psi = psi, phi
    shift = phi[0]
    phi, psi = phi - shift, psi + shift
    gap = float(np.dot(mu.weights, phi) + np.dot(nu.weights, psi)) - total
    monotone = None
    if certify:
        # classical optimality: monotone support without the origin adjoined
        report = check_cyclical_monotonicity(
            plan.sources, plan.targets, max_cycle=max_cycle, n_random=n_random, seed=seed,
            adjoin_origin=False,
        )
        monotone = report.passed
    return TransportSolution(total, plan, phi, psi, gap, monotone, mu, nu, "classical", res.iterations)


def extract_duals(sol, mu=None, nu=None, tol=None):
    """Return the origin-normalised potentials ``(phi, psi)`` after verifying them.

    Checks, on the grid of atom locations plus the origin, that
    ``phi(x) + psi(y) <= 0.5|x - y|^2``, that equality holds on every plan
    atom, and that ``<mu, phi> + <nu, psi>`` matches the cost. Raises
    :class:`DualCheckError` on failure.
    """
    mu = sol.mu if mu is None else mu
    nu = sol.nu if nu is None else nu
    if tol is None:
        tol = TOL_NUM * (1.0 + abs(sol.cost))
    phi, psi = np.asarray(sol.phi), np.asarray(sol.psi)
    if phi.shape != (mu.n_atoms,) or psi.shape != (nu.n_atoms,):
        raise DualCheckError("potentials do not match the measures")

    if sol.kind == "levy":
        xs = np.vstack([mu.locations, np.zeros((1, mu.d))])
        ys = np.vstack([nu.locations, np.zeros((1, nu.d))])
        ph = np.append(phi, 0.0)
        ps = np.append(psi, 0.0)
    else:
        xs, ys, ph, ps = mu.locations, nu.locations, phi, psi
    slack = 0.5 * _sq_dists(xs, ys) - ph[:, None] - ps[None, :]
    if slack.size and slack.min() < -tol:
        i, j = np.unravel_index(np.argmin(slack), slack.shape)
        raise DualCheckError(f"dual infeasible at grid pair ({i}, {j}): slack {slack[i, j]:.3g}")

    lookup_x = {tuple(x): p for x, p in zip(xs.tolist(), ph)}
    lookup_y = {tuple(y): p for y, p in zip(ys.tolist(), ps)}
    for x, y in zip(sol.plan.sources.tolist(), sol.plan.targets.tolist()):
        c = 0.5 * sum((a - b) ** 2 for a, b in zip(x, y))
        resid = c - lookup_x[tuple(x)] - lookup_y[tuple(y)]
        if abs(resid) > tol:
            raise DualCheckError(f"complementary slackness fails on plan atom {x} -> {y}: {resid:.3g}")

    dual_value = float(np.dot(mu.weights, phi) + np.dot(nu.weights, psi))
    if abs(dual_value - sol.cost) > sol.tol_gap():
        raise DualCheckError(f"duality gap {dual_value - sol.cost:.3g}")
    return phi.copy(), psi.copy()


def plan_is_valid(sol):
    return validate_coupling(sol.plan, sol.mu, sol.nu).passed
