"""Greedy random-feature fitter over the cylindrical algebra.

Each output coordinate gets its own sequence of terms.  A term is a product of
``n_factors`` elementary maps chosen one factor at a time from a candidate
pool by orthogonal least squares; the term count actually kept (at most
``n_terms``) is picked on a held-back validation split, and the kept terms
are refit by ridge regression on all samples.  Coefficients are folded into
the last factor of each term, so the result is a plain :class:`AlgebraElement`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_is_fitted

from ..measures import ParticleMeasure, mask
from ..validation import check_context_pairs, check_spacetime_triples
from .algebra import AlgebraElement, eval_algebra
from .elementary import elementary_batch

__all__ = [
    "CandidatePool",
    "make_pool",
    "CylindricalRegressor",
    "MaskedCylindricalRegressor",
    "FitConfig",
    "sample_contexts",
    "fit",
    "SingularFitError",
]

_CONDITION_LIMIT = 1e14


class SingularFitError(np.linalg.LinAlgError):
    """Raised when the ridge normal equations cannot be solved reliably."""


@dataclass(frozen=True)
class CandidatePool:
    A: np.ndarray  # (P, d)
    b: np.ndarray
    c: np.ndarray
    v: np.ndarray

    @property
    def size(self) -> int:
        return self.b.shape[0]

    def features(self, pairs) -> np.ndarray:
        """Matrix of candidate values, shape ``(n_samples, P)``."""
        return np.vstack([elementary_batch(self.A, self.b, self.c, self.v, mu, x) for mu, x in pairs])


def make_pool(dim: int, pool_size: int, rng, norm_grid=(0.5, 1.0, 2.0), b_grid=(-1.0, 0.0, 1.0),
              c_grid=(-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0), v_grid=(0.0, 1.0)) -> CandidatePool:
    """Constant, coordinate and mean-type candidates first, then random draws.

    Random candidates take ``a`` on the unit sphere times a norm from
    ``norm_grid`` and ``b, c, v`` from their grids.
    """
    A, b, c, v = [np.zeros(dim)], [1.0], [0.0], [0.0]   # the constant 1
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = 1.0
        for vv in (0.0, 1.0):
            A.append(e)
            b.append(0.0)
            c.append(0.0)
            v.append(vv)
    n_random = max(0, pool_size - len(b))
    if n_random:
        dirs = rng.normal(size=(n_random, dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        norms = rng.choice(np.asarray(norm_grid, dtype=float), size=n_random)
        A.extend(dirs * norms[:, None])
        b.extend(rng.choice(np.asarray(b_grid, dtype=float), size=n_random))
        c.extend(rng.choice(np.asarray(c_grid, dtype=float), size=n_random))
        v.extend(rng.choice(np.asarray(v_grid, dtype=float), size=n_random))
    return CandidatePool(np.array(A), np.array(b, dtype=float), np.array(c, dtype=float),
                         np.array(v, dtype=float))


def _ols_scores(columns: np.ndarray, basis: np.ndarray, residual: np.ndarray) -> np.ndarray:
    """Squared residual reduction of adding each column to the orthonormal ``basis``."""
    if basis.shape[1]:
        columns = columns - basis @ (basis.T @ columns)
    norms2 = np.einsum("ij,ij->j", columns, columns)
    proj = columns.T @ residual
    scores = np.zeros(columns.shape[1])
    ok = norms2 > 1e-12 * max(1.0, float(norms2.max(initial=0.0)))
    scores[ok] = proj[ok] ** 2 / norms2[ok]
    return scores


def _greedy_terms(F: np.ndarray, y: np.ndarray, n_terms: int, n_factors: int):
    """Select up to ``n_terms`` products of ``n_factors`` pool columns for one output.

    Returns the list of factor-index tuples in selection order.  Ties go to the
    lowest candidate index.
    """
    n = F.shape[0]
    basis = np.zeros((n, 0))
    residual = y.copy()
    scale = max(float(np.linalg.norm(y)), 1e-300)
    terms = []
    for _ in range(n_terms):
        if np.linalg.norm(residual) <= 1e-13 * scale:
            break
        partial = np.ones(n)
        chosen = []
        for _ in range(n_factors):
            scores = _ols_scores(partial[:, None] * F, basis, residual)
            j = int(np.argmax(scores))
            chosen.append(j)
            partial = partial * F[:, j]
        col = partial - basis @ (basis.T @ partial)
        nrm = np.linalg.norm(col)
        if nrm <= 1e-10 * max(1.0, np.linalg.norm(partial)):
            break
        q = col / nrm
        basis = np.column_stack([basis, q])
        residual = residual - q * (q @ residual)
        terms.append(tuple(chosen))
    return terms


def _term_matrix(F: np.ndarray, terms) -> np.ndarray:
    if not terms:
        return np.zeros((F.shape[0], 0))
    return np.column_stack([F[:, list(t)].prod(axis=1) for t in terms])


def _ridge(M: np.ndarray, y: np.ndarray, ridge: float) -> np.ndarray:
    if M.shape[1] == 0:
        return np.zeros(0)
    G = M.T @ M
    G[np.diag_indices_from(G)] += ridge * M.shape[0]
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > _CONDITION_LIMIT:
        raise SingularFitError(
            f"normal equations are singular (condition number {cond:.3e}); increase ridge (currently {ridge:g})")
    return np.linalg.solve(G, M.T @ y)


class CylindricalRegressor(BaseEstimator, RegressorMixin):
    """Least-squares fit of an in-context map by an element of the cylindrical algebra.

    Parameters
    ----------
    n_terms : int
        Maximum number of terms ``N`` per output coordinate.
    n_factors : int
        Factors ``T`` per term.
    pool_size : int
        Candidate elementary maps (including the deterministic ones).
    ridge : float
        Ridge weight, scaled by the number of samples.
    validation_fraction : float
        Share of samples held back to choose how many terms to keep.
    norm_grid, b_grid, c_grid, v_grid : tuple of float
        Grids for the random candidates.
    random_state : int, RandomState or None
        Seed for the candidate pool and the validation split.

    Attributes
    ----------
    algebra_ : AlgebraElement
        Fitted map with folded coefficients.
    terms_ : list of list of tuple
        Selected factor indices per output coordinate.
    coef_ : list of ndarray
        Ridge coefficients per output coordinate.
    pool_ : CandidatePool
    """

    def __init__(self, n_terms=4, n_factors=1, pool_size=256, ridge=1e-10, validation_fraction=0.25,
                 norm_grid=(0.5, 1.0, 2.0), b_grid=(-1.0, 0.0, 1.0),
                 c_grid=(-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0), v_grid=(0.0, 1.0), random_state=0):
        self.n_terms = n_terms
        self.n_factors = n_factors
        self.pool_size = pool_size
        self.ridge = ridge
        self.validation_fraction = validation_fraction
        self.norm_grid = norm_grid
        self.b_grid = b_grid
        self.c_grid = c_grid
        self.v_grid = v_grid
        self.random_state = random_state

    def _check_params(self):
        if int(self.n_terms) < 1 or int(self.n_factors) < 1:
            raise ValueError("n_terms and n_factors must be at least 1")
        if self.ridge < 0:
            raise ValueError("ridge must be nonnegative")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in [0, 1)")

    def fit(self, X, y):
        """Fit on ``X``, a sequence of ``(ParticleMeasure, query)`` pairs, and targets ``y``."""
        self._check_params()
        pairs = check_context_pairs(X)
        Y = np.asarray(y, dtype=np.float64)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.shape[0] != len(pairs):
            raise ValueError(f"got {Y.shape[0]} targets for {len(pairs)} samples")
        if not np.all(np.isfinite(Y)):
            raise ValueError("targets contain non-finite entries")
        dim = pairs[0][0].dim
        if any(mu.dim != dim for mu, _ in pairs):
            raise ValueError("all contexts must share one dimension")
        rng = check_random_state(self.random_state)
        pool = make_pool(dim, int(self.pool_size), rng, self.norm_grid, self.b_grid, self.c_grid, self.v_grid)
        F = pool.features(pairs)
        n = F.shape[0]
        n_val = int(round(self.validation_fraction * n))
        perm = rng.permutation(n)
        val, train = np.sort(perm[:n_val]), np.sort(perm[n_val:])
        if train.size == 0:
            raise ValueError("no training samples left after the validation split")
        T, N = int(self.n_factors), int(self.n_terms)
        all_terms, all_coef = [], []
        for h in range(Y.shape[1]):
            terms = _greedy_terms(F[train], Y[train, h], N, T)
            keep = len(terms)
            if val.size and terms:
                errs = []
                for k in range(len(terms) + 1):
                    beta = _ridge(_term_matrix(F[train], terms[:k]), Y[train, h], self.ridge)
                    pred = _term_matrix(F[val], terms[:k]) @ beta
                    errs.append(float(np.abs(pred - Y[val, h]).max()))
                keep = int(np.argmin(errs))  # ties: fewest terms
            terms = terms[:keep]
            all_terms.append(terms)
            all_coef.append(_ridge(_term_matrix(F, terms), Y[:, h], self.ridge))
        self.pool_ = pool
        self.terms_ = all_terms
        self.coef_ = all_coef
        self.n_outputs_ = Y.shape[1]
        self.n_features_in_ = dim
        self.algebra_ = self._assemble(pool, all_terms, all_coef, dim, T, N)
        return self

    @staticmethod
    def _assemble(pool: CandidatePool, terms, coefs, dim: int, T: int, N: int) -> AlgebraElement:
        dp = len(terms)
        a = np.zeros((dp, T, N, dim))
        b = np.zeros((dp, T, N))
        c = np.zeros((dp, T, N))
        v = np.zeros((dp, T, N))
        # unused slots are zero terms: constant-one factors with a zero last factor
        b[:, :-1, :] = 1.0
        for h in range(dp):
            for n, (term, alpha) in enumerate(zip(terms[h], coefs[h])):
                for t, j in enumerate(term):
                    a[h, t, n], b[h, t, n], c[h, t, n], v[h, t, n] = pool.A[j], pool.b[j], pool.c[j], pool.v[j]
                if alpha == 0.0:
                    a[h, -1, n], b[h, -1, n], c[h, -1, n], v[h, -1, n] = 0.0, 0.0, 0.0, 0.0
                else:
                    # alpha * gamma_(a,b,c,v) = gamma_(alpha a, alpha b, c / alpha^2, v)
                    a[h, -1, n] *= alpha
                    b[h, -1, n] *= alpha
                    c[h, -1, n] /= alpha * alpha
        return AlgebraElement(a, b, c, v)

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "algebra_")
        pairs = check_context_pairs(X)
        out = np.vstack([eval_algebra(self.algebra_, mu, x) for mu, x in pairs])
        return out[:, 0] if self.n_outputs_ == 1 else out


class MaskedCylindricalRegressor(CylindricalRegressor):
    """Fit a causal space-time map on the reduced space of masked contexts.

    ``X`` holds ``(SpaceTimeMeasure, query, time)`` triples; each becomes the
    pair ``(space marginal of mask(mu, t), query)`` for the underlying fit.
    """

    @staticmethod
    def reduce(X):
        return [(mask(mu, t).space_marginal(), x) for mu, x, t in check_spacetime_triples(X)]

    def fit(self, X, y):
        return super().fit(self.reduce(X), y)

    def predict(self, X) -> np.ndarray:
        return super().predict(self.reduce(X))


@dataclass(frozen=True)
class FitConfig:
    """Settings for :func:`fit`; sampling fields describe the training contexts."""

    n_terms: int = 4
    n_factors: int = 1
    pool_size: int = 256
    ridge: float = 1e-10
    validation_fraction: float = 0.25
    norm_grid: tuple = (0.5, 1.0, 2.0)
    b_grid: tuple = (-1.0, 0.0, 1.0)
    c_grid: tuple = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)
    v_grid: tuple = (0.0, 1.0)
    dim: int = 2
    n_samples: int = 400
    n_particles: tuple = (4, 16)
    domain_radius: float = 1.0

    def estimator_params(self) -> dict:
        keys = ("n_terms", "n_factors", "pool_size", "ridge", "validation_fraction",
                "norm_grid", "b_grid", "c_grid", "v_grid")
        return {k: getattr(self, k) for k in keys}


def _ball(rng, n: int, dim: int, radius: float) -> np.ndarray:
    g = rng.normal(size=(n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * radius * rng.uniform(size=(n, 1)) ** (1.0 / dim)


def sample_contexts(config: FitConfig, n_samples: int, rng) -> list:
    """Random ``(mu, x)`` pairs: uniform empirical measures and queries in the domain ball."""
    lo, hi = config.n_particles
    out = []
    for _ in range(n_samples):
        k = int(rng.integers(lo, hi + 1))
        mu = ParticleMeasure(_ball(rng, k, config.dim, config.domain_radius), np.full(k, 1.0 / k))
        out.append((mu, _ball(rng, 1, config.dim, config.domain_radius)[0]))
    return out


def fit(target, config: FitConfig | None = None, seed=0) -> AlgebraElement:
    """Fit ``target(mu, x) -> R^{d'}`` on sampled contexts and return the algebra element."""
    config = config or FitConfig()
    rng = np.random.default_rng(seed)
    pairs = sample_contexts(config, config.n_samples, rng)
    Y = np.array([np.atleast_1d(np.asarray(target(mu, x), dtype=float)) for mu, x in pairs])
    est = CylindricalRegressor(random_state=seed, **config.estimator_params())
    return est.fit(pairs, Y).algebra_
