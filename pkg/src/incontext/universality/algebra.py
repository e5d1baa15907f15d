"""Cylindrical functions: sums of coordinatewise products of elementary maps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..attention import Attention, ContextFree, HeadParams, LayerStack, MlpParams, MultiHeadParams, compose_unmasked
from ..measures import ParticleMeasure
from ..validation import as_float_vector, frozen
from .elementary import ElementaryParams, elementary_batch

__all__ = ["AlgebraElement", "eval_algebra", "LiftedFactor", "lift_to_vector", "lifted_value", "gamma_bar"]


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """Elementary parameters on a ``(d', T, N)`` grid.

    Output coordinate ``h`` is ``sum_n prod_t gamma_{lambda[h, t, n]}(mu, x)``.
    ``a`` has shape ``(d', T, N, d)``; ``b``, ``c``, ``v`` have shape ``(d', T, N)``.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        if a.ndim != 4:
            raise ValueError(f"a must have shape (d', T, N, d), got {a.shape}")
        grid = a.shape[:3]
        if min(a.shape) < 1:
            raise ValueError("algebra grid must be nonempty")
        for name in ("b", "c", "v"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != grid:
                raise ValueError(f"{name} has shape {arr.shape}, expected {grid}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, frozen(arr))
        if not np.all(np.isfinite(a)):
            raise ValueError("a contains non-finite entries")
        object.__setattr__(self, "a", frozen(a))

    @property
    def dprime(self) -> int:
        return self.a.shape[0]

    @property
    def T(self) -> int:
        return self.a.shape[1]

    @property
    def N(self) -> int:
        return self.a.shape[2]

    @property
    def dim(self) -> int:
        return self.a.shape[3]

    def param(self, h: int, t: int, n: int) -> ElementaryParams:
        return ElementaryParams(self.a[h, t, n], self.b[h, t, n], self.c[h, t, n], self.v[h, t, n])

    @classmethod
    def from_params(cls, grid) -> "AlgebraElement":
        """Build from a nested list ``grid[h][t][n]`` of :class:`ElementaryParams`."""
        dp, T, N = len(grid), len(grid[0]), len(grid[0][0])
        d = grid[0][0][0].dim
        a = np.zeros((dp, T, N, d))
        b, c, v = (np.zeros((dp, T, N)) for _ in range(3))
        for h in range(dp):
            for t in range(T):
                for n in range(N):
                    lam = grid[h][t][n]
                    a[h, t, n], b[h, t, n], c[h, t, n], v[h, t, n] = lam.a, lam.b, lam.c, lam.v
        return cls(a, b, c, v)

    @classmethod
    def constant(cls, value, dim: int, T: int = 1) -> "AlgebraElement":
        """The constant map ``value`` (one entry per output coordinate)."""
        value = np.atleast_1d(np.asarray(value, dtype=np.float64))
        dp = value.shape[0]
        a = np.zeros((dp, T, 1, dim))
        b = np.ones((dp, T, 1))
        b[:, -1, 0] = value
        return cls(a, b, np.zeros((dp, T, 1)), np.zeros((dp, T, 1)))

    def factor_values(self, mu: ParticleMeasure, x) -> np.ndarray:
        """All elementary values, shape ``(d', T, N)``."""
        x = as_float_vector(x, "query", size=self.dim)
        flat = elementary_batch(self.a.reshape(-1, self.dim), self.b.ravel(), self.c.ravel(),
                                self.v.ravel(), mu, x)
        return flat.reshape(self.b.shape)

    def __call__(self, mu: ParticleMeasure, x) -> np.ndarray:
        return eval_algebra(self, mu, x)

    def _pad_T(self, T: int) -> "AlgebraElement":
        extra = T - self.T
        if extra == 0:
            return self
        dp, N, d = self.dprime, self.N, self.dim
        # constant-one factors: a = 0, b = 1, v = 0
        a = np.concatenate([self.a, np.zeros((dp, extra, N, d))], axis=1)
        b = np.concatenate([self.b, np.ones((dp, extra, N))], axis=1)
        c = np.concatenate([self.c, np.zeros((dp, extra, N))], axis=1)
        v = np.concatenate([self.v, np.zeros((dp, extra, N))], axis=1)
        return AlgebraElement(a, b, c, v)

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        if (self.dprime, self.dim) != (other.dprime, other.dim):
            raise ValueError("algebra elements must share d and d'")
        T = max(self.T, other.T)
        p, q = self._pad_T(T), other._pad_T(T)
        return AlgebraElement(*(np.concatenate([getattr(p, f), getattr(q, f)], axis=2) for f in "abcv"))

    def __mul__(self, other):
        if np.isscalar(other):
            return self.scale(float(other))
        if (self.dprime, self.dim) != (other.dprime, other.dim):
            raise ValueError("algebra elements must share d and d'")
        # (sum_n P_n)(sum_m Q_m) = sum_{n,m} P_n Q_m : T adds, N multiplies
        n1, n2 = self.N, other.N
        fields = []
        for f in "abcv":
            x, y = getattr(self, f), getattr(other, f)
            xr = np.repeat(x, n2, axis=2)
            yr = np.tile(y, (1, 1, n1) + (1,) * (y.ndim - 3))
            fields.append(np.concatenate([xr, yr], axis=1))
        return AlgebraElement(*fields)

    __rmul__ = __mul__

    def scale(self, alpha) -> "AlgebraElement":
        """Multiply output coordinates by ``alpha`` (scalar or per-coordinate) via the last factor.

        Uses ``alpha * gamma_(a,b,c,v) = gamma_(alpha a, alpha b, c / alpha^2, v)``;
        terms with ``alpha == 0`` are turned into the zero function.
        """
        alpha = np.broadcast_to(np.asarray(alpha, dtype=np.float64), (self.dprime,))
        a, b, c, v = (np.array(getattr(self, f)) for f in "abcv")
        for h, s in enumerate(alpha):
            if s == 0.0:
                a[h, -1], b[h, -1], c[h, -1], v[h, -1] = 0.0, 0.0, 0.0, 0.0
            else:
                a[h, -1] *= s
                b[h, -1] *= s
                c[h, -1] /= s * s
        return AlgebraElement(a, b, c, v)


def eval_algebra(A: AlgebraElement, mu: ParticleMeasure, x) -> np.ndarray:
    """``G(mu, x) = sum_n prod_t gamma_bar_{t,n}(mu, x)`` in R^{d'}."""
    return A.factor_values(mu, x).prod(axis=1).sum(axis=1)


class LiftedFactor(NamedTuple):
    t: int
    n: int
    attention: MultiHeadParams
    affine: MlpParams


def _lifted_attention(c: np.ndarray, v: np.ndarray) -> MultiHeadParams:
    dp = c.shape[0]
    heads = []
    for h in range(dp):
        e = np.zeros((1, dp))
        e[0, h] = 1.0
        heads.append((e.T.copy(), HeadParams(K=e, Q=c[h] * e, V=v[h] * e)))
    return MultiHeadParams(tuple(heads))


def lift_to_vector(A: AlgebraElement) -> list[LiftedFactor]:
    """Per ``(t, n)``: a d'-head attention on R^{d'} and the affine map R^d -> R^{d'}.

    Head ``h`` reads and writes only coordinate ``h``, so composing the affine
    map with the attention gives ``(gamma_{lambda^1}, ..., gamma_{lambda^{d'}})``.
    Factors are listed with ``n`` outer and ``t`` inner.
    """
    out = []
    for n in range(A.N):
        for t in range(A.T):
            theta = _lifted_attention(A.c[:, t, n], A.v[:, t, n])
            affine = MlpParams.affine(A.a[:, t, n, :], A.b[:, t, n])
            out.append(LiftedFactor(t, n, theta, affine))
    return out


def lifted_value(factor: LiftedFactor, mu: ParticleMeasure, x) -> np.ndarray:
    """Evaluate the affine-then-attention composition of one lifted factor."""
    stack = LayerStack((ContextFree(factor.affine), Attention(factor.attention)))
    return compose_unmasked(stack, mu, x)


def gamma_bar(A: AlgebraElement, t: int, n: int, mu: ParticleMeasure, x) -> np.ndarray:
    """Closed-form vector ``(gamma_{lambda^h_{t,n}}(mu, x))_h``."""
    return A.factor_values(mu, x)[:, t, n]
