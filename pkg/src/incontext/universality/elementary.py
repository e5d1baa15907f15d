"""Elementary scalar in-context maps and the tilted-moment transforms that separate measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..attention import Attention, ContextFree, HeadParams, LayerStack, MlpParams, MultiHeadParams, compose_unmasked
from ..measures import ParticleMeasure
from ..validation import as_float_vector

__all__ = [
    "ElementaryParams",
    "gamma_elementary",
    "elementary_batch",
    "elementary_stack",
    "equals_attention_form",
    "laplace",
    "laplace_k",
    "separation_probe",
]


@dataclass(frozen=True, eq=False)
class ElementaryParams:
    """``lambda = (a, b, c, v)``: direction, offset, inverse temperature, value gain."""

    a: np.ndarray
    b: float
    c: float
    v: float

    def __post_init__(self):
        a = as_float_vector(self.a, "a").copy()
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        for name in ("b", "c", "v"):
            val = float(getattr(self, name))
            if not np.isfinite(val):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, val)

    @property
    def dim(self) -> int:
        return self.a.shape[0]


def _tilted_average(logits: np.ndarray, weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    """``sum_j w_j e^{logits_j} values_j / sum_j w_j e^{logits_j}`` along axis 0, stabilised."""
    live = weights > 0.0
    logits = np.where(live[:, None], logits, -np.inf)
    shift = logits.max(axis=0, keepdims=True)
    e = np.where(live[:, None], weights[:, None] * np.exp(logits - shift), 0.0)
    return (e * values).sum(axis=0) / e.sum(axis=0)


def elementary_batch(A: np.ndarray, b: np.ndarray, c: np.ndarray, v: np.ndarray,
                     mu: ParticleMeasure, x: np.ndarray) -> np.ndarray:
    """Values of many elementary maps (rows of ``A`` with ``b, c, v``) at one ``(mu, x)``."""
    u = A @ x + b                      # (P,)
    proj = mu.points @ A.T + b         # (n, P)
    return u + v * _tilted_average(c * u * proj, mu.weights, proj)


def gamma_elementary(lam: ElementaryParams, mu: ParticleMeasure, x) -> float:
    """``<x,a> + b + v * int softmax_y(c (<x,a>+b)(<y,a>+b)) (<a,y>+b) dmu(y)``."""
    x = as_float_vector(x, "query", size=lam.dim)
    if mu.dim != lam.dim:
        raise ValueError(f"measure dimension {mu.dim} does not match a of size {lam.dim}")
    out = elementary_batch(lam.a[None, :], np.array([lam.b]), np.array([lam.c]), np.array([lam.v]), mu, x)
    return float(out[0])


def elementary_stack(lam: ElementaryParams) -> LayerStack:
    """The affine map ``x -> <a,x> + b`` followed by a 1-D single-head attention.

    The head uses ``K = 1, Q = c, V = v, W = 1`` with key dimension 1, so the
    softmax exponent is ``c * u * u'`` for projected tokens ``u, u'``.
    """
    affine = MlpParams.affine(lam.a[None, :], [lam.b])
    head = HeadParams(K=[[1.0]], Q=[[lam.c]], V=[[lam.v]])
    theta = MultiHeadParams(((np.ones((1, 1)), head),))
    return LayerStack((ContextFree(affine), Attention(theta)))


def equals_attention_form(lam: ElementaryParams, fixtures) -> dict:
    """Compare the closed form against the composed affine-then-attention stack.

    ``fixtures`` is an iterable of ``(mu, x)`` pairs.  Returns the maximum
    absolute deviation and the number of fixtures checked.
    """
    stack = elementary_stack(lam)
    worst, count = 0.0, 0
    for mu, x in fixtures:
        direct = gamma_elementary(lam, mu, x)
        composed = float(compose_unmasked(stack, mu, x)[0])
        worst = max(worst, abs(direct - composed))
        count += 1
    return {"max_deviation": worst, "fixtures": count}


def laplace(mu: ParticleMeasure, a, c: float) -> float:
    """``int e^{c<a,y>} <a,y> dmu(y) / int e^{c<a,z>} dmu(z)``."""
    a = as_float_vector(a, "a", size=mu.dim)
    s = mu.points @ a
    return float(_tilted_average((c * s)[:, None], mu.weights, s[:, None])[0])


def laplace_k(mu: ParticleMeasure, c: float, k: int) -> float:
    """Tilted ``k``-th moment ``int e^{cy} y^k dmu / int e^{cz} dmu`` of a 1-D measure."""
    if mu.dim != 1:
        raise ValueError("laplace_k needs a 1-D measure")
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    y = mu.points[:, 0]
    return float(_tilted_average((c * y)[:, None], mu.weights, (y ** int(k))[:, None])[0])


def _canonical(mu: ParticleMeasure) -> ParticleMeasure:
    table = np.column_stack([mu.points, mu.weights])
    order = np.lexsort(table.T[::-1])
    return ParticleMeasure(mu.points[order], mu.weights[order])


def separation_probe(mu: ParticleMeasure, nu: ParticleMeasure, samples: int = 256, seed=0,
                     c_range: tuple[float, float] = (-3.0, 3.0)) -> float:
    """``max |L(mu)(a,c) - L(nu)(a,c)|`` over random unit directions ``a`` and ``c`` in ``c_range``.

    A positive value witnesses ``mu != nu``; zero proves nothing.
    """
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    mu, nu = _canonical(mu), _canonical(nu)
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(samples, mu.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    cs = rng.uniform(*c_range, size=samples)
    cs[0] = 0.0
    best = 0.0
    for a, c in zip(dirs, cs):
        best = max(best, abs(laplace(mu, a, c) - laplace(nu, a, c)))
    return best
