"""Generator distance between Lévy triplets and optimal coupled triplets.

For triplets ``A = (kappa, alpha, mu)`` and ``B = (zeta, beta, nu)`` the
squared distance splits into three independent transport problems::

    W_G(A, B)^2 = 0.5 |kappa - zeta|^2 + W_S(alpha, beta)^2 + W_Lambda(mu, nu)^2

and the rate at which the expected cost ``0.5 |X_t - Y_t|^2`` of the best
Markovian coupling grows from ``(x, y)`` is affine in ``x - y``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.stats import qmc

from .core import (
    DimensionError,
    DiscreteLevyMeasure,
    LevyCoupling,
    LevyTriplet,
    ValidationError,
    as_psd,
    as_vector,
    second_moment,
)
from .levy_ot import levy_ot_solve
from .psd import bures_wasserstein_sq, optimal_cross_block

N_BATTERY = 32


@dataclass(frozen=True)
class GeneratorDistance:
    drift_sq: float
    diffusion_sq: float
    jump_sq: float

    @property
    def total_sq(self):
        return self.drift_sq + self.diffusion_sq + self.jump_sq

    @property
    def distance(self):
        return float(np.sqrt(self.total_sq))

    @property
    def theta0(self):
        """Drift-free growth rate at ``x = y``."""
        return self.diffusion_sq + self.jump_sq

    def to_dict(self):
        return {
            "total_sq": self.total_sq,
            "drift_sq": self.drift_sq,
            "diffusion_sq": self.diffusion_sq,
            "jump_sq": self.jump_sq,
        }


def _check(a, b):
    if not isinstance(a, LevyTriplet) or not isinstance(b, LevyTriplet):
        raise TypeError("expected LevyTriplet inputs")
    if a.d != b.d:
        raise DimensionError(f"dimension mismatch: {a.d} vs {b.d}")


def generator_distance(a, b):
    """Drift, diffusion and jump parts of the squared generator distance."""
    _check(a, b)
    dm = a.drift - b.drift
    drift_sq = 0.5 * float(np.dot(dm, dm))
    diffusion_sq = bures_wasserstein_sq(a.diffusion, b.diffusion)
    jump_sq = levy_ot_solve(a.jumps, b.jumps, certify=False).cost
    return GeneratorDistance(drift_sq, diffusion_sq, jump_sq)


def jump_distance(mu, nu):
    return levy_ot_solve(mu, nu, certify=False).distance


def theta2(a, b, x, y, dist=None):
    """Optimal initial growth rate of ``E 0.5|X_t - Y_t|^2`` started at ``(x, y)``."""
    _check(a, b)
    x = as_vector(x, a.d, "x")
    y = as_vector(y, a.d, "y")
    if dist is None:
        dist = generator_distance(a, b)
    return dist.theta0 + float(np.dot(a.drift - b.drift, x - y))


def triplets_equal(a, b, tol=1e-9):
    """Componentwise comparison of canonical forms, ``tol`` per entry."""
    _check(a, b)
    if np.max(np.abs(a.drift - b.drift)) > tol:
        return False
    if np.max(np.abs(a.diffusion - b.diffusion)) > tol:
        return False
    mu, nu = a.jumps, b.jumps
    if mu.n_atoms != nu.n_atoms:
        return False
    if mu.n_atoms == 0:
        return True
    return bool(
        np.max(np.abs(mu.locations - nu.locations)) <= tol
        and np.max(np.abs(mu.weights - nu.weights)) <= tol
    )


@dataclass(frozen=True, eq=False)
class CoupledTriplet:
    """Triplet on ``R^{2d}``: drift, joint diffusion and a Lévy coupling of the jumps."""

    drift: np.ndarray
    diffusion: np.ndarray
    jumps: LevyCoupling

    def __init__(self, drift, diffusion, jumps):
        eta = as_vector(drift, name="drift")
        if eta.size % 2:
            raise DimensionError("coupled drift must have even length")
        sigma = as_psd(diffusion, eta.size, name="diffusion")
        if not isinstance(jumps, LevyCoupling):
            raise TypeError("jumps must be a LevyCoupling")
        if 2 * jumps.d != eta.size:
            raise DimensionError(f"coupling has dimension {jumps.d}, drift has {eta.size}")
        object.__setattr__(self, "drift", eta)
        object.__setattr__(self, "diffusion", sigma)
        object.__setattr__(self, "jumps", jumps)

    @property
    def d(self):
        return self.drift.size // 2

    @property
    def cross_block(self):
        d = self.d
        return self.diffusion[:d, d:]

    def marginal_triplets(self):
        """The two triplets this coupling couples."""
        d = self.d
        mu, nu = self.jumps.marginals()
        a = LevyTriplet(self.drift[:d], self.diffusion[:d, :d], mu)
        b = LevyTriplet(self.drift[d:], self.diffusion[d:, d:], nu)
        return a, b

    def drift_gap(self):
        d = self.d
        return self.drift[:d] - self.drift[d:]

    def growth_rate0(self):
        """``d/dt E 0.5|X_t - Y_t|^2`` at ``t = 0`` from a diagonal start."""
        d = self.d
        s = self.diffusion
        diff_part = 0.5 * float(np.trace(s[:d, :d]) + np.trace(s[d:, d:]) - 2.0 * np.trace(s[:d, d:]))
        return diff_part + self.jumps.cost()

    def predicted_growth(self, x, y, t):
        """Exact ``E 0.5|X_t - Y_t|^2`` for the process started at ``(x, y)``.

        The difference ``X - Y`` is itself a Lévy process, so its second
        moment is quadratic in ``t``.
        """
        d = self.d
        x = as_vector(x, d, "x")
        y = as_vector(y, d, "y")
        t = np.asarray(t, dtype=float)
        dm = self.drift_gap()
        gap = x - y
        c2 = 0.5 * float(np.dot(gap, gap))
        return c2 + t * (float(np.dot(dm, gap)) + self.growth_rate0()) + 0.5 * t**2 * float(np.dot(dm, dm))

    def is_zero_mean(self):
        return bool(np.all(self.drift == 0.0))

    def key(self):
        return (tuple(self.drift.tolist()), tuple(self.diffusion.ravel().tolist()), self.jumps.key())


def _joint_diffusion(alpha, beta, k):
    d = alpha.shape[0]
    s = np.empty((2 * d, 2 * d))
    s[:d, :d] = alpha
    s[d:, d:] = beta
    s[:d, d:] = k
    s[d:, :d] = k.T
    return s


def build_optimal_coupling(a, b):
    """Coupled triplet realising the generator distance between ``a`` and ``b``."""
    _check(a, b)
    diff = optimal_cross_block(a.diffusion, b.diffusion)
    plan = levy_ot_solve(a.jumps, b.jumps, certify=False).plan
    eta = np.concatenate([a.drift, b.drift])
    return CoupledTriplet(eta, _joint_diffusion(a.diffusion, b.diffusion, diff.cross_block), plan)


def trivial_coupling(a, b):
    """Independent diffusions and jumps that never occur together."""
    _check(a, b)
    eta = np.concatenate([a.drift, b.drift])
    zero = np.zeros((a.d, a.d))
    return CoupledTriplet(eta, _joint_diffusion(a.diffusion, b.diffusion, zero),
                          LevyCoupling.trivial(a.jumps, b.jumps))


def truncate_measure(mu, delta, delta_prime=0.0):
    """Drop atoms with ``|x| < delta`` and scale the rest by ``1 - delta_prime``.

    Returns the truncated measure and an upper bound on its squared jump
    distance to ``mu``: dropped atoms go to the origin and a fraction
    ``delta_prime`` of every kept atom does too.
    """
    if not delta > 0:
        raise ValidationError("delta must be positive")
    if not 0.0 <= delta_prime < 1.0:
        raise ValidationError("delta_prime must lie in [0, 1)")
    norms2 = np.einsum("ij,ij->i", mu.locations, mu.locations)
    keep = np.linalg.norm(mu.locations, axis=1) >= delta
    w = mu.weights
    bound = 0.5 * (float(np.dot(w[~keep], norms2[~keep])) + delta_prime * float(np.dot(w[keep], norms2[keep])))
    kept = DiscreteLevyMeasure(mu.locations[keep], (1.0 - delta_prime) * w[keep], d=mu.d)
    return kept, bound


def battery_centers(measures, m=N_BATTERY):
    """Fixed test-function centres on a Halton sequence over the atoms' bounding box."""
    d = measures[0].d
    pts = [mu.locations for mu in measures] + [np.zeros((1, d))]
    allp = np.vstack(pts)
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    hi = np.where(hi > lo, hi, lo + 1.0)
    sampler = qmc.Halton(d, scramble=False)
    sampler.fast_forward(1)  # skip the corner point
    return qmc.scale(sampler.random(m), lo, hi)


def battery_integrals(mu, centers):
    """``sum_i w_i phi_c(x_i)`` with ``phi_c(x) = min(1,|x|^2) min(1,|x - c|^2)``."""
    if mu.n_atoms == 0:
        return np.zeros(len(centers))
    x = mu.locations
    near0 = np.minimum(1.0, np.einsum("ij,ij->i", x, x))
    diff = x[None, :, :] - centers[:, None, :]
    nearc = np.minimum(1.0, np.einsum("kij,kij->ki", diff, diff))
    return (nearc * near0[None, :]) @ mu.weights


@dataclass(frozen=True)
class ConvergenceReport:
    w_lambda: np.ndarray
    moment_gap: np.ndarray
    battery_defect: np.ndarray
    correlations: tuple
    co_trend: bool

    def final(self):
        return float(self.w_lambda[-1]), float(self.moment_gap[-1]), float(self.battery_defect[-1])

    def to_dict(self):
        return {
            "w_lambda": self.w_lambda.tolist(),
            "moment_gap": self.moment_gap.tolist(),
            "battery_defect": self.battery_defect.tolist(),
            "correlations": [None if c is None else float(c) for c in self.correlations],
            "co_trend": self.co_trend,
        }


def _trend(values):
    if len(values) < 2 or np.ptp(values) == 0.0:
        return None
    return float(stats.spearmanr(np.arange(len(values)), values).statistic)


def lambda_convergence_report(seq, target, n_battery=N_BATTERY):
    """Distance, second-moment gap and test-function defect along a sequence.

    ``co_trend`` is true when the three diagnostics do not move in opposite
    directions along the sequence (rank correlation signs agree; constant
    diagnostics are neutral).
    """
    seq = list(seq)
    if not seq:
        raise ValidationError("empty sequence")
    for mu in seq:
        if mu.d != target.d:
            raise DimensionError(f"dimension mismatch: {mu.d} vs {target.d}")
    centers = battery_centers(seq + [target], n_battery)
    ref = battery_integrals(target, centers)
    m_ref = second_moment(target)
    w = np.array([jump_distance(mu, target) for mu in seq])
    gap = np.array([abs(second_moment(mu) - m_ref) for mu in seq])
    defect = np.array([float(np.max(np.abs(battery_integrals(mu, centers) - ref))) for mu in seq])
    corr = tuple(_trend(v) for v in (w, gap, defect))
    signs = {np.sign(c) for c in corr if c is not None and c != 0}
    return ConvergenceReport(w, gap, defect, corr, len(signs) <= 1)
