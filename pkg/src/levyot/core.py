"""Domain types for Lévy triplets with finitely supported jump measures.

Every object here is immutable: arrays are copied on construction and marked
read-only. Triplets are always in the global (fully compensated) form, so the
drift is also the mean vector of the process.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TOL_PSD = 1e-9
TOL_SYM = 1e-12


class ValidationError(ValueError):
    """Raised when an input object violates a domain invariant."""


class DimensionError(ValidationError):
    pass


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def as_vector(x, d=None, name="vector"):
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.size == 0:
        raise ValidationError(f"{name}: empty vector")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name}: non-finite entry")
    if d is not None and v.size != d:
        raise DimensionError(f"{name}: expected length {d}, got {v.size}")
    return _frozen(v)


def psd_defects(a):
    """Return ``(asymmetry, negativity)`` of a square matrix, both relative to 1+trace."""
    a = np.asarray(a, dtype=float)
    scale = 1.0 + abs(np.trace(a))
    asym = float(np.max(np.abs(a - a.T))) / scale if a.size else 0.0
    if a.size == 0:
        return asym, 0.0
    lam_min = float(np.linalg.eigvalsh(0.5 * (a + a.T))[0])
    return asym, max(0.0, -lam_min) / scale


def is_psd(a, tol_psd=TOL_PSD, tol_sym=TOL_SYM):
    asym, neg = psd_defects(a)
    return asym <= tol_sym and neg <= tol_psd


def as_psd(a, d=None, name="matrix", tol_psd=TOL_PSD, tol_sym=TOL_SYM):
    """Validate a symmetric PSD matrix and return a frozen, exactly symmetric copy."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"{name}: expected a square matrix, got shape {m.shape}")
    if d is not None and m.shape[0] != d:
        raise DimensionError(f"{name}: expected {d}x{d}, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name}: non-finite entry")
    asym, neg = psd_defects(m)
    if asym > tol_sym:
        raise ValidationError(f"{name}: not symmetric (relative defect {asym:.3g})")
    if neg > tol_psd:
        raise ValidationError(f"{name}: not positive semidefinite (relative defect {neg:.3g})")
    return _frozen(0.5 * (m + m.T))


def _lex_order(points):
    # np.lexsort sorts by the last key first
    if len(points) == 0:
        return np.arange(0)
    return np.lexsort(points.T[::-1])


@dataclass(frozen=True, eq=False)
class DiscreteLevyMeasure:
    """A finite sum of weighted atoms in R^d, none of them at the origin.

    Atoms are stored in lexicographic order of their coordinates, and atoms
    with bitwise-equal locations are merged by summing their weights, so two
    measures built from the same atoms in any order compare equal.
    """

    locations: np.ndarray
    weights: np.ndarray

    def __init__(self, locations, weights, d=None):
        w = np.asarray(weights, dtype=float).reshape(-1)
        loc = np.asarray(locations, dtype=float)
        if loc.size == 0:
            if d is None:
                d = loc.shape[1] if loc.ndim == 2 else None
            if d is None or d < 1:
                raise ValidationError("empty measure needs an explicit dimension d")
            loc = np.zeros((0, d))
        if loc.ndim == 1:
            loc = loc.reshape(1, -1)
        if loc.ndim != 2 or loc.shape[0] != w.size:
            raise ValidationError(
                f"locations/weights mismatch: {loc.shape} vs {w.size} weights"
            )
        if d is not None and loc.shape[1] != d:
            raise DimensionError(f"expected dimension {d}, got {loc.shape[1]}")
        if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(w))):
            raise ValidationError("non-finite location or weight")
        if np.any(w <= 0):
            i = int(np.argmin(w))
            raise ValidationError(f"atom {i}: weight must be positive, got {w[i]!r}")
        if loc.shape[0] and np.any(np.all(loc == 0.0, axis=1)):
            i = int(np.nonzero(np.all(loc == 0.0, axis=1))[0][0])
            raise ValidationError(f"atom {i}: a Lévy measure cannot charge the origin")

        order = _lex_order(loc)
        loc, w = loc[order], w[order]
        if loc.shape[0] > 1:
            new = np.ones(loc.shape[0], dtype=bool)
            new[1:] = np.any(loc[1:] != loc[:-1], axis=1)
            groups = np.cumsum(new) - 1
            w = np.bincount(groups, weights=w)
            loc = loc[new]
        object.__setattr__(self, "locations", _frozen(loc))
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def empty(cls, d):
        return cls(np.zeros((0, d)), np.zeros(0), d=d)

    @classmethod
    def from_atoms(cls, atoms, d=None):
        """Build from an iterable of ``(location, weight)`` pairs."""
        atoms = list(atoms)
        if not atoms:
            return cls.empty(d)
        loc = np.array([np.asarray(x, dtype=float).reshape(-1) for x, _ in atoms])
        return cls(loc, [w for _, w in atoms], d=d)

    @property
    def d(self):
        return self.locations.shape[1]

    @property
    def n_atoms(self):
        return self.weights.size

    @property
    def total_mass(self):
        return float(self.weights.sum())

    def __len__(self):
        return self.n_atoms

    def __iter__(self):
        return iter(zip(self.locations, self.weights))

    def scaled(self, lam):
        if lam <= 0:
            raise ValidationError("scale factor must be positive")
        return DiscreteLevyMeasure(self.locations, lam * self.weights, d=self.d)

    def __add__(self, other):
        _check_dims(self.d, other.d)
        return DiscreteLevyMeasure(
            np.vstack([self.locations, other.locations]),
            np.concatenate([self.weights, other.weights]),
            d=self.d,
        )

    def translated(self, h):
        """Shift every atom by ``h``; atoms landing on the origin are dropped."""
        h = as_vector(h, self.d, "shift")
        loc = self.locations + h
        keep = np.any(loc != 0.0, axis=1)
        return DiscreteLevyMeasure(loc[keep], self.weights[keep], d=self.d)

    def key(self):
        """Canonical hashable form, used for exact comparison and ordering."""
        return (self.d, tuple(map(tuple, self.locations.tolist())), tuple(self.weights.tolist()))

    def __eq__(self, other):
        if not isinstance(other, DiscreteLevyMeasure):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"DiscreteLevyMeasure(d={self.d}, n_atoms={self.n_atoms}, mass={self.total_mass:.6g})"


@dataclass(frozen=True, eq=False)
class LevyTriplet:
    """Global-form triplet ``(drift, diffusion, jumps)``."""

    drift: np.ndarray
    diffusion: np.ndarray
    jumps: DiscreteLevyMeasure

    def __init__(self, drift, diffusion, jumps=None):
        kappa = as_vector(drift, name="drift")
        d = kappa.size
        alpha = as_psd(diffusion, d, name="diffusion")
        if jumps is None:
            jumps = DiscreteLevyMeasure.empty(d)
        elif not isinstance(jumps, DiscreteLevyMeasure):
            jumps = DiscreteLevyMeasure.from_atoms(jumps, d=d)
        if jumps.d != d:
            raise DimensionError(f"jump measure has dimension {jumps.d}, drift has {d}")
        object.__setattr__(self, "drift", kappa)
        object.__setattr__(self, "diffusion", alpha)
        object.__setattr__(self, "jumps", jumps)

    @classmethod
    def pure_jump(cls, mu):
        return cls(np.zeros(mu.d), np.zeros((mu.d, mu.d)), mu)

    @property
    def d(self):
        return self.drift.size

    def key(self):
        return (tuple(self.drift.tolist()), tuple(self.diffusion.ravel().tolist()), self.jumps.key())

    def __eq__(self, other):
        if not isinstance(other, LevyTriplet):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


@dataclass(frozen=True, eq=False)
class LevyCoupling:
    """Weighted atoms ``(source, target)`` in R^{2d}.

    Atoms at the joint origin are dropped: they carry no cost and are invisible
    to the marginal conditions. Either coordinate alone may be zero, which is how
    mass is created at or absorbed into the origin.
    """

    sources: np.ndarray
    targets: np.ndarray
    weights: np.ndarray

    def __init__(self, sources, targets, weights, d=None):
        w = np.asarray(weights, dtype=float).reshape(-1)
        xs = np.asarray(sources, dtype=float)
        ys = np.asarray(targets, dtype=float)
        if w.size == 0:
            if d is None:
                d = xs.shape[1] if xs.ndim == 2 else None
            if d is None or d < 1:
                raise ValidationError("empty coupling needs an explicit dimension d")
            xs = np.zeros((0, d))
            ys = np.zeros((0, d))
        else:
            xs = xs.reshape(w.size, -1)
            ys = ys.reshape(w.size, -1)
        if xs.shape != ys.shape:
            raise DimensionError(f"source/target shapes differ: {xs.shape} vs {ys.shape}")
        if d is not None and xs.shape[1] != d:
            raise DimensionError(f"expected dimension {d}, got {xs.shape[1]}")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys)) and np.all(np.isfinite(w))):
            raise ValidationError("non-finite coupling entry")
        if np.any(w <= 0):
            i = int(np.argmin(w))
            raise ValidationError(f"atom {i}: weight must be positive, got {w[i]!r}")
        joint = np.hstack([xs, ys])
        keep = np.any(joint != 0.0, axis=1)
        joint, w = joint[keep], w[keep]
        order = _lex_order(joint)
        joint, w = joint[order], w[order]
        if joint.shape[0] > 1:
            new = np.ones(joint.shape[0], dtype=bool)
            new[1:] = np.any(joint[1:] != joint[:-1], axis=1)
            w = np.bincount(np.cumsum(new) - 1, weights=w)
            joint = joint[new]
        k = xs.shape[1]
        object.__setattr__(self, "sources", _frozen(joint[:, :k]))
        object.__setattr__(self, "targets", _frozen(joint[:, k:]))
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def trivial(cls, mu, nu):
        """The coupling ``mu ⊗ δ0 + δ0 ⊗ nu``: every atom paired with the origin."""
        _check_dims(mu.d, nu.d)
        d = mu.d
        xs = np.vstack([mu.locations, np.zeros((nu.n_atoms, d))])
        ys = np.vstack([np.zeros((mu.n_atoms, d)), nu.locations])
        return cls(xs, ys, np.concatenate([mu.weights, nu.weights]), d=d)

    @classmethod
    def diagonal(cls, mu):
        return cls(mu.locations, mu.locations, mu.weights, d=mu.d)

    @property
    def d(self):
        return self.sources.shape[1]

    @property
    def n_atoms(self):
        return self.weights.size

    def cost(self):
        """Total quadratic cost ``sum w * 0.5 |x - y|^2``."""
        diff = self.sources - self.targets
        return float(np.dot(self.weights, 0.5 * np.einsum("ij,ij->i", diff, diff)))

    def swapped(self):
        return LevyCoupling(self.targets, self.sources, self.weights, d=self.d)

    def scaled(self, lam):
        return LevyCoupling(self.sources, self.targets, lam * self.weights, d=self.d)

    def __add__(self, other):
        _check_dims(self.d, other.d)
        return LevyCoupling(
            np.vstack([self.sources, other.sources]),
            np.vstack([self.targets, other.targets]),
            np.concatenate([self.weights, other.weights]),
            d=self.d,
        )

    def marginals(self):
        """Away-from-origin marginals ``(mu, nu)`` of the coupling."""
        xs_keep = np.any(self.sources != 0.0, axis=1)
        ys_keep = np.any(self.targets != 0.0, axis=1)
        mu = DiscreteLevyMeasure(self.sources[xs_keep], self.weights[xs_keep], d=self.d)
        nu = DiscreteLevyMeasure(self.targets[ys_keep], self.weights[ys_keep], d=self.d)
        return mu, nu

    def joint_atoms(self):
        return np.hstack([self.sources, self.targets])

    def key(self):
        return (self.d, tuple(map(tuple, self.joint_atoms().tolist())), tuple(self.weights.tolist()))

    def __eq__(self, other):
        if not isinstance(other, LevyCoupling):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def _check_dims(d1, d2):
    if d1 != d2:
        raise DimensionError(f"dimension mismatch: {d1} vs {d2}")


def mean_vector(t):
    """Mean vector of a global-form triplet, which is its drift."""
    return t.drift


def covariance_matrix(t):
    """``alpha + sum_i w_i x_i x_i^T``."""
    mu = t.jumps
    jump_cov = (mu.locations * mu.weights[:, None]).T @ mu.locations
    q = t.diffusion + jump_cov
    return 0.5 * (q + q.T)


def second_moment(mu):
    return float(np.dot(mu.weights, np.einsum("ij,ij->i", mu.locations, mu.locations)))


@dataclass(frozen=True)
class CouplingCertificate:
    passed: bool
    worst_defect: float
    worst_side: str | None = None
    worst_location: tuple | None = None
    tolerance: float = 0.0
    defects: dict = field(default_factory=dict, repr=False)


def marginal_tolerance(mu, nu):
    return 1e-9 * (1.0 + mu.total_mass + nu.total_mass)


def _side_defects(locs, weights, ref):
    # Group coupling mass by nonzero location and compare with the reference measure.
    out = {}
    nz = np.any(locs != 0.0, axis=1)
    for x, w in zip(map(tuple, locs[nz].tolist()), weights[nz]):
        out[x] = out.get(x, 0.0) + w
    for x, w in zip(map(tuple, ref.locations.tolist()), ref.weights):
        out[x] = out.get(x, 0.0) - w
    return out


def validate_coupling(gamma, mu, nu, tol=None):
    """Check the away-from-origin marginal conditions of a Lévy coupling.

    For every nonzero location, the coupling mass with that source (target)
    must equal the mass the first (second) measure puts there. The result
    records the worst per-location defect and where it occurred.
    """
    _check_dims(gamma.d, mu.d)
    _check_dims(mu.d, nu.d)
    if tol is None:
        tol = marginal_tolerance(mu, nu)
    worst, side, where = 0.0, None, None
    defects = {}
    for name, locs, ref in (("source", gamma.sources, mu), ("target", gamma.targets, nu)):
        for x, delta in _side_defects(locs, gamma.weights, ref).items():
            defects[(name, x)] = delta
            if abs(delta) > worst:
                worst, side, where = abs(delta), name, x
    return CouplingCertificate(worst <= tol, worst, side, where, tol, defects)
