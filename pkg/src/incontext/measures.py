"""Discrete probability measures over token space and space-time.

A context of tokens is stored as weighted particles.  Uniform empirical
measures are the special case built by :func:`from_tokens`; masking and
disintegration produce general weights, so every operation here accepts
arbitrary nonnegative weights summing to one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .validation import (
    TIME_TOL,
    as_float_matrix,
    as_float_vector,
    check_times,
    check_weights,
    frozen,
)

__all__ = [
    "ParticleMeasure",
    "SpaceTimeMeasure",
    "TimeMarginal",
    "Disintegration",
    "from_tokens",
    "from_spacetime_tokens",
    "pushforward",
    "pushforward_space",
    "mask",
    "time_marginal",
    "end_point",
    "disintegrate",
    "recombine",
    "lipschitz_estimate",
    "sigma_mass",
    "same_particles",
]


@dataclass(frozen=True, eq=False)
class ParticleMeasure:
    """Weighted point cloud ``sum_i w_i delta_{x_i}`` in R^d.

    Arrays are copied and made read-only on construction.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = as_float_matrix(self.points, "points")
        if pts.shape[0] == 0:
            raise ValueError("empty context")
        w = check_weights(self.weights, pts.shape[0])
        object.__setattr__(self, "points", frozen(pts))
        object.__setattr__(self, "weights", frozen(w))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.size

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """Integral of a vectorised test function ``f(points) -> (n,)``."""
        vals = np.asarray(f(self.points), dtype=np.float64).reshape(self.size)
        return float(np.dot(self.weights, vals))

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def __repr__(self) -> str:
        return f"ParticleMeasure(n={self.size}, d={self.dim})"


@dataclass(frozen=True, eq=False)
class SpaceTimeMeasure:
    """Weighted particles ``(x_i, t_i)`` with positions in R^d and times in [0, 1]."""

    points: np.ndarray
    times: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = as_float_matrix(self.points, "points")
        n = pts.shape[0]
        if n == 0:
            raise ValueError("empty context")
        t = check_times(self.times, n)
        w = check_weights(self.weights, n)
        object.__setattr__(self, "points", frozen(pts))
        object.__setattr__(self, "times", frozen(t))
        object.__setattr__(self, "weights", frozen(w))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.size

    def space_marginal(self) -> ParticleMeasure:
        """Forget the time coordinate."""
        return ParticleMeasure(self.points, self.weights)

    def lifted(self) -> ParticleMeasure:
        """The same measure seen as a point cloud in R^{d+1} (time appended last)."""
        return ParticleMeasure(np.column_stack([self.points, self.times]), self.weights)

    def integrate(self, f: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> float:
        vals = np.asarray(f(self.points, self.times), dtype=np.float64).reshape(self.size)
        return float(np.dot(self.weights, vals))

    def __repr__(self) -> str:
        return f"SpaceTimeMeasure(n={self.size}, d={self.dim})"


@dataclass(frozen=True)
class TimeMarginal:
    """Atoms ``(time, mass)`` of the time marginal, times strictly increasing."""

    times: tuple[float, ...]
    masses: tuple[float, ...]

    def __post_init__(self):
        if len(self.times) != len(self.masses) or not self.times:
            raise ValueError("time marginal needs matching, nonempty times and masses")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("marginal times must be strictly increasing")
        if any(m <= 0 for m in self.masses):
            raise ValueError("marginal masses must be positive")
        if abs(sum(self.masses) - 1.0) > 1e-12:
            raise ValueError("marginal masses must sum to 1")

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.times, self.masses))

    def mass_up_to(self, t: float) -> float:
        return float(sum(m for s, m in zip(self.times, self.masses) if s <= t + TIME_TOL))


@dataclass(frozen=True)
class Disintegration:
    """Per-time conditional measures together with the time marginal."""

    groups: tuple[tuple[float, ParticleMeasure], ...]
    marginal: TimeMarginal
    # particle indices of the source measure in each group, in source order
    members: tuple[tuple[int, ...], ...] = field(default=(), repr=False)


def from_tokens(tokens) -> ParticleMeasure:
    """Uniform empirical measure ``(1/n) sum_i delta_{x_i}``; row order is kept."""
    X = np.asarray(tokens, dtype=np.float64)
    if X.size == 0:
        raise ValueError("empty context")
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    n = X.shape[0]
    return ParticleMeasure(X, np.full(n, 1.0 / n))


def from_spacetime_tokens(tokens, times=None) -> SpaceTimeMeasure:
    """Uniform space-time measure; default times are ``i/n`` for ``i = 1..n``."""
    X = np.asarray(tokens, dtype=np.float64)
    if X.size == 0:
        raise ValueError("empty context")
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    n = X.shape[0]
    if times is None:
        times = np.arange(1, n + 1) / n
    return SpaceTimeMeasure(X, times, np.full(n, 1.0 / n))


def _apply_pointwise(T, points: np.ndarray, *extra) -> np.ndarray:
    rows = [np.atleast_1d(np.asarray(T(p, *(e[i] for e in extra)), dtype=np.float64))
            for i, p in enumerate(points)]
    return np.vstack(rows)


def pushforward(mu: ParticleMeasure, T: Callable[[np.ndarray], np.ndarray]) -> ParticleMeasure:
    """Displace every particle through ``T``; weights are unchanged."""
    return ParticleMeasure(_apply_pointwise(T, mu.points), mu.weights)


def pushforward_space(mu: SpaceTimeMeasure, T: Callable[[np.ndarray, float], np.ndarray]) -> SpaceTimeMeasure:
    """Apply ``(x, t) -> (T(x, t), t)``: points move, times and weights stay."""
    return SpaceTimeMeasure(_apply_pointwise(T, mu.points, mu.times), mu.times, mu.weights)


def _window(mu: SpaceTimeMeasure, t: float) -> np.ndarray:
    return mu.times <= t + TIME_TOL


def mask(mu: SpaceTimeMeasure, t: float) -> SpaceTimeMeasure:
    """Restrict to times ``<= t`` and renormalise.

    At ``t = 0`` this is the conditional at the time-0 atom, which is the
    weak* limit of the masked measures as ``t`` decreases to 0.
    """
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"mask time {t} outside [0, 1]")
    keep = _window(mu, t)
    total = float(mu.weights[keep].sum())
    if total <= 0.0:
        raise ValueError("mask of null time interval")
    if keep.all() and total == 1.0:
        return mu
    return SpaceTimeMeasure(mu.points[keep], mu.times[keep], mu.weights[keep] / total)


def _group_times(times: np.ndarray) -> list[np.ndarray]:
    """Indices grouped by time equality (|s - t| <= TIME_TOL against the group's first time)."""
    order = np.argsort(times, kind="stable")
    groups: list[list[int]] = []
    start = None
    for idx in order:
        if start is None or times[idx] - start > TIME_TOL:
            groups.append([int(idx)])
            start = times[idx]
        else:
            groups[-1].append(int(idx))
    return [np.array(sorted(g), dtype=int) for g in groups]


def time_marginal(mu: SpaceTimeMeasure) -> TimeMarginal:
    """Marginal of ``mu`` on the time axis, masses aggregated over equal times."""
    times, masses = [], []
    for g in _group_times(mu.times):
        m = float(mu.weights[g].sum())
        if m > 0.0:
            times.append(float(mu.times[g].min()))
            masses.append(m)
    return TimeMarginal(tuple(times), tuple(masses))


def end_point(marginal: TimeMarginal | SpaceTimeMeasure) -> float:
    """Last atom time of the time marginal."""
    if isinstance(marginal, SpaceTimeMeasure):
        marginal = time_marginal(marginal)
    return float(marginal.times[-1])


def disintegrate(mu: SpaceTimeMeasure) -> Disintegration:
    groups, members, times, masses = [], [], [], []
    for g in _group_times(mu.times):
        m = float(mu.weights[g].sum())
        if m <= 0.0:
            continue
        tau = float(mu.times[g].min())
        groups.append((tau, ParticleMeasure(mu.points[g], mu.weights[g] / m)))
        members.append(tuple(int(i) for i in g))
        times.append(tau)
        masses.append(m)
    return Disintegration(tuple(groups), TimeMarginal(tuple(times), tuple(masses)), tuple(members))


def recombine(dis: Disintegration) -> SpaceTimeMeasure:
    """Inverse of :func:`disintegrate`: weight each conditional by its marginal mass."""
    pts, ts, ws = [], [], []
    for (tau, cond), mass in zip(dis.groups, dis.marginal.masses):
        pts.append(cond.points)
        ts.append(np.full(cond.size, tau))
        ws.append(cond.weights * mass)
    w = np.concatenate(ws)
    return SpaceTimeMeasure(np.vstack(pts), np.concatenate(ts), w / w.sum())


def lipschitz_estimate(mu: SpaceTimeMeasure, p: int = 2) -> float:
    """Largest W_p speed between consecutive time conditionals.

    Any ``C`` at least this large certifies the Lipschitz-context condition
    on the sampled times (not a proof for unsampled ones).
    """
    from .transport import wasserstein

    dis = disintegrate(mu)
    if len(dis.groups) < 2:
        raise ValueError("lipschitz_estimate needs at least 2 distinct times")
    best = 0.0
    for (s, a), (t, b) in zip(dis.groups, dis.groups[1:]):
        dist, _ = wasserstein(a, b, p)
        best = max(best, dist / (t - s))
    return best


def sigma_mass(mu: SpaceTimeMeasure) -> float:
    """Mass of the time marginal at 0."""
    return float(mu.weights[mu.times <= TIME_TOL].sum())


def _sorted_rows(*cols: np.ndarray) -> np.ndarray:
    table = np.column_stack(cols)
    order = np.lexsort(table.T[::-1])
    return table[order]


def same_particles(a, b, tol: float = 1e-12) -> bool:
    """Multiset equality of weighted particles (positions, times, weights) within ``tol``."""
    if type(a) is not type(b) or a.size != b.size or a.dim != b.dim:
        return False
    if isinstance(a, SpaceTimeMeasure):
        ta = _sorted_rows(a.points, a.times, a.weights)
        tb = _sorted_rows(b.points, b.times, b.weights)
    else:
        ta = _sorted_rows(a.points, a.weights)
        tb = _sorted_rows(b.points, b.weights)
    return bool(np.all(np.abs(ta - tb) <= tol))


def as_vector(x, dim: int) -> np.ndarray:
    return as_float_vector(x, "query", size=dim)
