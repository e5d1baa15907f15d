"""Exact optimal transport between discrete measures and a weak* gap probe."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog

from .measures import ParticleMeasure, SpaceTimeMeasure

__all__ = [
    "TransportPlan",
    "wasserstein",
    "wasserstein_1d",
    "spacetime_wasserstein",
    "weakstar_gap",
    "default_dictionary",
    "lipschitz_dictionary",
]

PLAN_TOL = 1e-9


@dataclass(frozen=True)
class TransportPlan:
    """Sparse coupling: ``flows[k] = (i, j, mass)``; ``cost`` is the p-th power cost."""

    flows: tuple[tuple[int, int, float], ...]
    cost: float
    shape: tuple[int, int]

    def dense(self) -> np.ndarray:
        P = np.zeros(self.shape)
        for i, j, m in self.flows:
            P[i, j] += m
        return P

    def marginal_errors(self, mu: ParticleMeasure, nu: ParticleMeasure) -> tuple[float, float]:
        P = self.dense()
        return (float(np.abs(P.sum(axis=1) - mu.weights).max()),
                float(np.abs(P.sum(axis=0) - nu.weights).max()))


def _cost_matrix(x: np.ndarray, y: np.ndarray, p: int) -> np.ndarray:
    diff = x[:, None, :] - y[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    return sq if p == 2 else np.sqrt(sq)


def _is_uniform(w: np.ndarray) -> bool:
    return bool(np.all(w == w[0]))


def _solve_assignment(C: np.ndarray, n: int):
    rows, cols = linear_sum_assignment(C)
    flows = tuple((int(i), int(j), 1.0 / n) for i, j in zip(rows, cols))
    return float(C[rows, cols].sum() / n), flows


def _solve_lp(C: np.ndarray, a: np.ndarray, b: np.ndarray):
    n, m = C.shape
    row_sums = sparse.kron(sparse.eye(n), np.ones((1, m)))
    col_sums = sparse.kron(np.ones((1, n)), sparse.eye(m))
    A_eq = sparse.vstack([row_sums, col_sums]).tocsr()
    # one redundant equality (total mass) is fine for HiGHS
    res = linprog(
        C.ravel(),
        A_eq=A_eq,
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    P = np.maximum(res.x.reshape(n, m), 0.0)
    idx = np.argwhere(P > 0.0)
    flows = tuple((int(i), int(j), float(P[i, j])) for i, j in idx)
    return float(np.sum(C * P)), flows


def wasserstein(mu: ParticleMeasure, nu: ParticleMeasure, p: int = 2, method: str = "auto"):
    """Exact ``W_p(mu, nu)`` for ``p`` in {1, 2} with its optimal plan.

    ``method="auto"`` uses an assignment solver when both measures are uniform
    with the same number of atoms and the transport LP otherwise; ``"lp"`` forces
    the LP.
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if method not in ("auto", "lp", "assignment"):
        raise ValueError(f"unknown method {method!r}")
    C = _cost_matrix(mu.points, nu.points, p)
    square_uniform = mu.size == nu.size and _is_uniform(mu.weights) and _is_uniform(nu.weights)
    if method == "assignment" and not square_uniform:
        raise ValueError("assignment solver needs equal-size uniform measures")
    if method != "lp" and square_uniform:
        cost, flows = _solve_assignment(C, mu.size)
    else:
        cost, flows = _solve_lp(C, mu.weights, nu.weights)
    cost = max(cost, 0.0)
    return cost ** (1.0 / p), TransportPlan(flows, cost, (mu.size, nu.size))


def wasserstein_1d(x, y, p: int = 2) -> float:
    """``W_p`` between uniform empirical measures on the line via quantile functions.

    Integrates ``|F^{-1}(s) - G^{-1}(s)|^p`` exactly over the merged breakpoints
    ``{i/n} U {j/m}``; no LP involved.
    """
    xs = np.sort(np.asarray(x, dtype=np.float64).ravel())
    ys = np.sort(np.asarray(y, dtype=np.float64).ravel())
    n, m = xs.size, ys.size
    # breakpoints as exact fractions k/(n*m) to avoid float merging issues
    cuts = np.union1d(np.arange(0, n + 1) * m, np.arange(0, m + 1) * n)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = lo + hi  # twice the midpoint, in units of 1/(n*m)
        i = mid // (2 * m)
        j = mid // (2 * n)
        total += (hi - lo) / (n * m) * abs(xs[i] - ys[j]) ** p
    return total ** (1.0 / p)


def spacetime_wasserstein(mu: SpaceTimeMeasure, nu: SpaceTimeMeasure, p: int = 2, method: str = "auto") -> float:
    """``W_p`` on R^{d+1} with ``(x, t)`` treated as one Euclidean point."""
    value, _ = wasserstein(mu.lifted(), nu.lifted(), p, method=method)
    return value


TestFunction = Callable[[np.ndarray], np.ndarray]


def default_dictionary(dim: int) -> list[tuple[str, TestFunction]]:
    """Coordinates, pairwise products of coordinates, and a few exponentials."""
    funcs: list[tuple[str, TestFunction]] = [("one", lambda z: np.ones(z.shape[0]))]
    for i in range(dim):
        funcs.append((f"x{i}", lambda z, i=i: z[:, i]))
    for i in range(dim):
        for j in range(i, dim):
            funcs.append((f"x{i}*x{j}", lambda z, i=i, j=j: z[:, i] * z[:, j]))
    dirs = [np.ones(dim) / np.sqrt(dim), -np.ones(dim) / np.sqrt(dim)]
    dirs += [np.eye(dim)[i] for i in range(dim)]
    for k, a in enumerate(dirs):
        funcs.append((f"exp{k}", lambda z, a=a: np.exp(z @ a)))
    return funcs


def lipschitz_dictionary(dim: int, anchors: np.ndarray | None = None) -> list[tuple[str, TestFunction]]:
    """1-Lipschitz test functions: coordinates and distances to anchor points."""
    funcs: list[tuple[str, TestFunction]] = [(f"x{i}", lambda z, i=i: z[:, i]) for i in range(dim)]
    if anchors is None:
        anchors = np.vstack([np.zeros(dim), np.eye(dim), -np.eye(dim)])
    for k, c in enumerate(np.atleast_2d(anchors)):
        funcs.append((f"dist{k}", lambda z, c=c: np.linalg.norm(z - c, axis=1)))
    return funcs


def _as_cloud(m) -> ParticleMeasure:
    return m.lifted() if isinstance(m, SpaceTimeMeasure) else m


def weakstar_gap(mu, nu, dictionary: Sequence[tuple[str, TestFunction]] | None = None) -> float:
    """``max_f |int f dmu - int f dnu|`` over a finite test-function dictionary.

    Space-time measures are compared on their lifted (x, t) points.
    """
    a, b = _as_cloud(mu), _as_cloud(nu)
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if dictionary is None:
        dictionary = default_dictionary(a.dim)
    if len(dictionary) == 0:
        raise ValueError("empty test-function dictionary")
    return max(abs(a.integrate(f) - b.integrate(f)) for _, f in dictionary)
