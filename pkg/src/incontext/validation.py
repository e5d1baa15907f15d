"""Input validation helpers shared by the measure, attention and estimator code."""

from __future__ import annotations

import numpy as np

WEIGHT_SUM_TOL = 1e-12
TIME_TOL = 1e-12


def as_float_matrix(values, name: str = "array", ndim_hint: int | None = None) -> np.ndarray:
    """Convert `values` to a finite 2-D float64 array (one row per item)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1 and ndim_hint is not None:
        arr = arr.reshape(-1, ndim_hint)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_float_vector(values, name: str = "vector", size: int | None = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=np.float64))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ValueError(f"{name} has dimension {arr.shape[0]}, expected {size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_weights(weights, n: int) -> np.ndarray:
    w = as_float_vector(weights, "weights")
    if w.shape[0] != n:
        raise ValueError(f"got {w.shape[0]} weights for {n} points")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = w.sum()
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights sum to {total!r}, expected 1 within {WEIGHT_SUM_TOL}")
    return w


def check_times(times, n: int) -> np.ndarray:
    t = as_float_vector(times, "times")
    if t.shape[0] != n:
        raise ValueError(f"got {t.shape[0]} times for {n} points")
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("times must lie in [0, 1]")
    return t


def check_matrix_shape(mat: np.ndarray, shape: tuple[int, int], name: str) -> None:
    if mat.shape != shape:
        raise ValueError(f"{name} has shape {mat.shape}, expected {shape}")


def frozen(arr: np.ndarray) -> np.ndarray:
    """Return a read-only copy of `arr`."""
    out = np.array(arr, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


def check_context_pairs(X):
    """Validate a sequence of ``(measure, query)`` pairs for the estimators.

    Returns a list of ``(measure, query_vector)`` tuples with queries converted
    to float vectors of the measure's dimension.
    """
    from .measures import ParticleMeasure

    pairs = list(X)
    if not pairs:
        raise ValueError("empty training set")
    out = []
    for i, item in enumerate(pairs):
        try:
            mu, x = item
        except (TypeError, ValueError):
            raise ValueError(f"sample {i} is not a (measure, query) pair") from None
        if not isinstance(mu, ParticleMeasure):
            raise TypeError(f"sample {i}: expected ParticleMeasure, got {type(mu).__name__}")
        out.append((mu, as_float_vector(x, f"query {i}", size=mu.dim)))
    return out


def check_spacetime_triples(X):
    """Validate a sequence of ``(space-time measure, query, time)`` triples."""
    from .measures import SpaceTimeMeasure

    triples = list(X)
    if not triples:
        raise ValueError("empty training set")
    out = []
    for i, item in enumerate(triples):
        try:
            mu, x, t = item
        except (TypeError, ValueError):
            raise ValueError(f"sample {i} is not a (measure, query, time) triple") from None
        if not isinstance(mu, SpaceTimeMeasure):
            raise TypeError(f"sample {i}: expected SpaceTimeMeasure, got {type(mu).__name__}")
        t = float(t)
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"sample {i}: time {t} outside [0, 1]")
        out.append((mu, as_float_vector(x, f"query {i}", size=mu.dim), t))
    return out
