"""Exact simulation of a coupled Lévy process ``Z = (X, Y)``.

The process generated by a :class:`CoupledTriplet` with drift ``eta``, joint
diffusion ``sigma`` and coupling atoms ``(x', y')`` of rate ``w`` is::

    Z_t = z_0 + t (eta - sum_k w_k (x'_k, y'_k)) + sigma^1/2 W_t + sum of jumps

Jumps form a compound Poisson process with total rate ``sum_k w_k``. Paths are
sampled exactly at jump epochs and on a uniform monitoring grid. Every path
draws from its own counter-based stream keyed by ``(seed, path_index)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ValidationError, as_vector
from .psd import psd_sqrt

DEFAULT_GRID = 65
BLOCK = 4096

_JUMPS = 0
_BROWNIAN = 1


def stream(seed, *key):
    """Philox generator for the substream ``key`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class PathSample:
    times: np.ndarray
    states: np.ndarray  # (n_times, 2d)

    @property
    def d(self):
        return self.states.shape[1] // 2

    def gaps(self):
        """``|X_t - Y_t|^2`` at every recorded epoch."""
        d = self.d
        diff = self.states[:, :d] - self.states[:, d:]
        return np.einsum("ij,ij->i", diff, diff)

    def rows(self):
        return [[t, *s] for t, s in zip(self.times.tolist(), self.states.tolist())]


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int

    @classmethod
    def from_samples(cls, values):
        values = np.asarray(values, dtype=float)
        n = values.size
        if n < 2:
            raise ValidationError("need at least two samples")
        # np.sum reduces pairwise, in a fixed order
        mean = float(np.sum(values) / n)
        var = float(np.sum((values - mean) ** 2) / (n - 1))
        return cls(mean, float(np.sqrt(var / n)), n)

    def brackets(self, value, k=4.0):
        return abs(self.mean - value) <= k * self.std_error


def _parts(j):
    """Compensated drift, diffusion root and jump table of a coupled triplet."""
    atoms = j.jumps.joint_atoms()
    w = j.jumps.weights
    drift = j.drift - w @ atoms if w.size else j.drift.copy()
    root = psd_sqrt(j.diffusion)
    return drift, root, atoms, w


def _dyadic_levels(n_grid):
    """Insertion level of each interior grid point; nested grids share levels."""
    m = n_grid - 1
    idx = np.arange(1, m)
    if m & (m - 1):  # not a power of two: a single level
        return idx, np.ones(idx.size, dtype=int)
    k = m.bit_length() - 1
    tz = np.array([(i & -i).bit_length() - 1 for i in idx.tolist()], dtype=int)
    return idx, k - tz


def _brownian(times_backbone, grid, levels, dim, seed, path_index):
    """Standard Brownian motion at the backbone, then bridged into the grid.

    Grid points are inserted level by level, each level from its own stream,
    so refining a dyadic grid keeps every previously sampled value.
    """
    rng = stream(seed, path_index, _BROWNIAN, 0)
    dt = np.diff(np.concatenate([[0.0], times_backbone]))
    inc = rng.standard_normal((dt.size, dim)) * np.sqrt(dt)[:, None]
    t = np.concatenate([[0.0], times_backbone])
    w = np.vstack([np.zeros((1, dim)), np.cumsum(inc, axis=0)])
    for lev in np.unique(levels):
        pts = grid[levels == lev]
        pos = np.searchsorted(t, pts)
        fresh = t[np.minimum(pos, t.size - 1)] != pts
        pts, pos = pts[fresh], pos[fresh]
        z = stream(seed, path_index, _BROWNIAN, int(lev)).standard_normal((pts.size, dim))
        tl, tr = t[pos - 1], t[pos]
        wl, wr = w[pos - 1], w[pos]
        frac = ((pts - tl) / (tr - tl))[:, None]
        sd = np.sqrt((pts - tl) * (tr - pts) / (tr - tl))[:, None]
        new = wl + frac * (wr - wl) + sd * z
        t = np.insert(t, pos, pts)
        w = np.insert(w, pos, new, axis=0)
    return t, w


def simulate_path(j, start, T, seed, n_grid=DEFAULT_GRID, path_index=0):
    """Sample one path on jump epochs plus ``n_grid`` evenly spaced times.

    Refining ``n_grid`` from ``2^k + 1`` to ``2^(k+1) + 1`` points under the
    same seed adds epochs without changing any state already recorded.
    """
    if not T > 0:
        raise ValidationError("T must be positive")
    if n_grid < 2:
        raise ValidationError("n_grid must be at least 2")
    dim = 2 * j.d
    z0 = as_vector(start, dim, "start")
    drift, root, atoms, w = _parts(j)

    rng = stream(seed, path_index, _JUMPS)
    rate = float(w.sum())
    n_jumps = rng.poisson(rate * T) if rate > 0 else 0
    epochs = np.sort(rng.uniform(0.0, T, n_jumps))
    which = rng.choice(w.size, size=n_jumps, p=w / rate) if n_jumps else np.zeros(0, dtype=int)

    backbone = np.append(epochs, T)
    grid = np.linspace(0.0, T, n_grid)
    idx, levels = _dyadic_levels(n_grid)
    times, bm = _brownian(backbone, grid[idx], levels, dim, seed, path_index)

    jump_path = np.zeros((times.size, dim))
    if n_jumps:
        hit = np.searchsorted(times, epochs)
        np.add.at(jump_path, hit, atoms[which])
        jump_path = np.cumsum(jump_path, axis=0)
    states = z0 + times[:, None] * drift + bm @ root.T + jump_path
    return PathSample(times, states)


def _difference_parts(j):
    d = j.d
    drift, root, atoms, w = _parts(j)
    proj = root[:d] - root[d:]  # X - Y picks up (I, -I) sigma^1/2 W
    return drift[:d] - drift[d:], proj, atoms[:, :d] - atoms[:, d:], w


def estimate_cost_growth(j, x, y, t_list, n_paths=20_000, seed=0, block=BLOCK):
    """Monte Carlo ``E 0.5|X_t - Y_t|^2`` from ``(x, y)`` at every ``t`` in ``t_list``.

    Only ``X - Y`` is simulated, at the requested times only. Paths are drawn
    in blocks; block ``b`` uses the stream ``(seed, b)``.
    """
    if n_paths < 2:
        raise ValidationError("n_paths must be at least 2")
    d = j.d
    x = as_vector(x, d, "x")
    y = as_vector(y, d, "y")
    ts = np.asarray(t_list, dtype=float)
    if np.any(ts < 0):
        raise ValidationError("times must be nonnegative")
    order = np.argsort(ts, kind="stable")
    dts = np.diff(np.concatenate([[0.0], ts[order]]))
    drift, proj, jumps, w = _difference_parts(j)
    dim = proj.shape[1]

    vals = np.empty((n_paths, ts.size))
    for b, lo in enumerate(range(0, n_paths, block)):
        n = min(block, n_paths - lo)
        rng = stream(seed, b)
        dw = rng.standard_normal((n, ts.size, dim)) * np.sqrt(dts)[None, :, None]
        bm = np.cumsum(dw, axis=1) @ proj.T
        if w.size:
            counts = rng.poisson(w[None, None, :] * dts[None, :, None], size=(n, ts.size, w.size))
            jp = np.cumsum(counts, axis=1) @ jumps
        else:
            jp = 0.0
        gap = (x - y) + ts[order][None, :, None] * drift + bm + jp
        vals[lo : lo + n][:, order] = 0.5 * np.einsum("ptk,ptk->pt", gap, gap)
    return [McEstimate.from_samples(vals[:, i]) for i in range(ts.size)]


def estimate_sup_distance(j, T, n_paths=2000, n_grid=DEFAULT_GRID, seed=0):
    """Monte Carlo ``E sup_{t <= T} |X_t - Y_t|^2`` from ``(0, 0)`` on the sampled skeleton.

    The skeleton sup never exceeds the true sup, so the estimate is biased low.
    """
    if n_paths < 2:
        raise ValidationError("n_paths must be at least 2")
    start = np.zeros(2 * j.d)
    sups = np.empty(n_paths)
    for i in range(n_paths):
        path = simulate_path(j, start, T, seed, n_grid=n_grid, path_index=i)
        sups[i] = path.gaps().max()
    return McEstimate.from_samples(sups)


def sup_bound(dist_total_sq, T, zero_mean):
    """Maximal-inequality bound on ``E sup |X_t - Y_t|^2``."""
    if zero_mean:
        return 4.0 * T * dist_total_sq
    return 8.0 * max(T, T * T) * dist_total_sq
