"""Exact deep-transformer realization of a cylindrical function.

The state space is R^{d + 3d'} split into blocks ``(x, u, p, w)``:

* ``x`` carries the query unchanged,
* ``u`` holds the current affine feature, then the attention output,
* ``p`` holds the running product over factors of the current term,
* ``w`` accumulates finished terms.

Layer order: a seeding block, one (attention, context-free) pair per factor
``(t, n)`` with ``t`` inner, and a readout block.  All approximation error sits
inside the product network; with exact products the stack reproduces the
algebra element up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..attention import (
    Attention,
    ContextFree,
    HeadParams,
    LayerStack,
    MlpParams,
    MultiHeadParams,
    PointwiseMap,
    compose_masked,
    compose_unmasked,
)
from .algebra import AlgebraElement
from .product_mlp import ProductMlp

__all__ = [
    "RealizedTransformer",
    "realize",
    "gamma_tilde_bound",
    "required_radius",
    "propagation_factor",
    "size_contract_violations",
]


@dataclass(frozen=True)
class RealizedTransformer:
    stack: LayerStack
    algebra: AlgebraElement
    phi: ProductMlp | None
    c_omega: float
    c_gamma: float
    radius: float
    propagation: float

    @property
    def masked(self) -> bool:
        return self.stack.masked

    @property
    def error_bound(self) -> float:
        """Max-norm bound on ``|realized - algebra|`` while Phi's inputs stay in its ball."""
        if self.phi is None:
            return 0.0
        return self.phi.eps * self.propagation

    def __call__(self, mu, x, t: float | None = None) -> np.ndarray:
        if self.masked:
            return compose_masked(self.stack, mu, x, t)
        return compose_unmasked(self.stack, mu, x)

    def product_inputs(self, mu, x, t: float | None = None) -> np.ndarray:
        """Norms of every ``(u, p)`` pair fed to the product map for this query."""
        if self.masked:
            _, states = compose_masked(self.stack, mu, x, t, return_trace=True)
        else:
            _, states = compose_unmasked(self.stack, mu, x, return_trace=True)
        d, dp = self.algebra.dim, self.algebra.dprime
        norms = []
        for k in range(self.algebra.N * self.algebra.T):
            state = states[2 + 2 * k + 1]  # after the (t, n) attention layer
            norms.append(float(np.linalg.norm(state[d:d + 2 * dp])))
        return np.array(norms)

    def radius_report(self, fixtures) -> dict:
        """Largest product-map input norm over ``fixtures`` and how many exceed the radius."""
        worst, exceed, count = 0.0, 0, 0
        for fx in fixtures:
            norms = self.product_inputs(*fx)
            worst = max(worst, float(norms.max()))
            exceed += int(np.sum(norms > self.radius))
            count += 1
        return {"max_input_norm": worst, "radius": self.radius, "exceedances": exceed, "fixtures": count}


def gamma_tilde_bound(A: AlgebraElement, c_omega: float) -> float:
    """Bound on ``|gamma_bar_{t,n}(mu, x)|`` for tokens of norm at most ``c_omega``."""
    best = 0.0
    for t in range(A.T):
        for n in range(A.N):
            Atn = A.a[:, t, n, :]
            scale = np.linalg.norm(Atn, 2) * c_omega + np.linalg.norm(A.b[:, t, n])
            best = max(best, scale * (1.0 + np.abs(A.v[:, t, n]).sum()))
    return float(best)


def required_radius(A: AlgebraElement, c_omega: float, headroom: float = 0.1) -> float:
    """Ball radius for the product map covering ``(u, p)`` inputs, with headroom."""
    C = gamma_tilde_bound(A, c_omega)
    p_norm = np.sqrt(A.dprime) * max(1.0, C) ** (A.T - 1)
    return float((1.0 + headroom) * np.hypot(C, p_norm))


def propagation_factor(A: AlgebraElement, c_gamma: float) -> float:
    """``N * sum_{j<T} C^j``: how a per-call product error accumulates in the output."""
    return float(A.N * sum(c_gamma ** j for j in range(A.T)))


def _zero_attention(dim: int) -> MultiHeadParams:
    z = np.zeros((1, dim))
    return MultiHeadParams(((np.zeros((dim, 1)), HeadParams(K=z, Q=z, V=z)),))


def _factor_attention(A: AlgebraElement, t: int, n: int, D: int) -> MultiHeadParams:
    d, dp = A.dim, A.dprime
    heads = []
    for h in range(dp):
        e = np.zeros((1, D))
        e[0, d + h] = 1.0
        heads.append((e.T.copy(), HeadParams(K=e, Q=A.c[h, t, n] * e, V=A.v[h, t, n] * e)))
    return MultiHeadParams(tuple(heads))


def _next_affine(A: AlgebraElement, t: int, n: int):
    """Affine feature seeded after factor ``(t, n)`` and whether this closes term ``n``."""
    if t + 1 < A.T:
        return A.a[:, t + 1, n, :], A.b[:, t + 1, n], False
    if n + 1 < A.N:
        return A.a[:, 0, n + 1, :], A.b[:, 0, n + 1], True
    return np.zeros((A.dprime, A.dim)), np.zeros(A.dprime), True


def _update_mlp(A_next, b_next, closes: bool, last: bool, phi: ProductMlp, d: int, dp: int) -> MlpParams:
    """ReLU network ``(x, u, p, w) -> (x, A'x + b', Phi(u, p) | 1 | 0, w [+ Phi(u, p)])``.

    ``x`` and ``w`` ride along as ``relu(z) - relu(-z)`` through Phi's depth.
    """
    D = d + 3 * dp
    Z = d + dp
    z_cols = np.r_[np.arange(d), np.arange(d + 2 * dp, D)]
    up_cols = np.arange(d, d + 2 * dp)
    phi_layers = phi.mlp.layers
    layers = []
    W0, b0, _ = phi_layers[0]
    h0 = W0.shape[0]
    W = np.zeros((h0 + 2 * Z, D))
    W[:h0, up_cols] = W0
    W[h0 + np.arange(Z), z_cols] = 1.0
    W[h0 + Z + np.arange(Z), z_cols] = -1.0
    layers.append((W, np.r_[b0, np.zeros(2 * Z)], "relu"))
    for Wk, bk, act in phi_layers[1:-1]:
        rows, cols = Wk.shape
        W = np.zeros((rows + 2 * Z, cols + 2 * Z))
        W[:rows, :cols] = Wk
        W[rows:, cols:] = np.eye(2 * Z)
        layers.append((W, np.r_[bk, np.zeros(2 * Z)], act))
    Wout, bout, _ = phi_layers[-1]
    hl = Wout.shape[1]
    W = np.zeros((D, hl + 2 * Z))
    b = np.zeros(D)
    pos = hl + np.arange(Z)
    neg = hl + Z + np.arange(Z)
    # x block
    W[np.arange(d), pos[:d]] = 1.0
    W[np.arange(d), neg[:d]] = -1.0
    # u block: next affine feature of x
    W[d:d + dp, pos[:d]] = A_next
    W[d:d + dp, neg[:d]] = -A_next
    b[d:d + dp] = b_next
    # w block
    W[d + 2 * dp + np.arange(dp), pos[d:]] = 1.0
    W[d + 2 * dp + np.arange(dp), neg[d:]] = -1.0
    if closes:
        W[d + 2 * dp:, :hl] += Wout
        b[d + 2 * dp:] += bout
        b[d + dp:d + 2 * dp] = 0.0 if last else 1.0
    else:
        W[d + dp:d + 2 * dp, :hl] = Wout
        b[d + dp:d + 2 * dp] = bout
    layers.append((W, b, "identity"))
    return MlpParams(tuple(layers))


def _exact_update(A_next, b_next, closes: bool, last: bool, d: int, dp: int) -> PointwiseMap:
    D = d + 3 * dp
    A_next = np.array(A_next)
    b_next = np.array(b_next)

    def fn(Z):
        x, u, p, w = Z[:, :d], Z[:, d:d + dp], Z[:, d + dp:d + 2 * dp], Z[:, d + 2 * dp:]
        prod = u * p
        new_u = x @ A_next.T + b_next
        if closes:
            new_p = np.full_like(p, 0.0 if last else 1.0)
            new_w = w + prod
        else:
            new_p = prod
            new_w = w
        return np.hstack([x, new_u, new_p, new_w])

    return PointwiseMap(fn, D, D, name="exact-product-update")


def realize(A: AlgebraElement, phi: ProductMlp | None = None, *, exact_product: bool = False,
            masked: bool = False, c_omega: float = 1.0) -> RealizedTransformer:
    """Build the layer stack computing ``G_Phi`` (or ``G`` itself with ``exact_product``).

    ``c_omega`` bounds token norms on the domain; it only enters the reported
    magnitude bound and radius, never the weights.
    """
    d, dp = A.dim, A.dprime
    D = d + 3 * dp
    if not exact_product:
        if phi is None:
            raise ValueError("a product network is required unless exact_product=True")
        if phi.dprime != dp:
            raise ValueError(f"product network has d'={phi.dprime}, algebra has d'={dp}")
    layers = [Attention(_zero_attention(d), masked)]
    seed_A = np.vstack([np.eye(d), A.a[:, 0, 0, :], np.zeros((2 * dp, d))])
    seed_b = np.r_[np.zeros(d), A.b[:, 0, 0], np.ones(dp), np.zeros(dp)]
    layers.append(ContextFree(MlpParams.affine(seed_A, seed_b)))
    for n in range(A.N):
        for t in range(A.T):
            layers.append(Attention(_factor_attention(A, t, n, D), masked))
            A_next, b_next, closes = _next_affine(A, t, n)
            last = closes and n + 1 == A.N
            if exact_product:
                layers.append(_exact_update(A_next, b_next, closes, last, d, dp))
            else:
                layers.append(ContextFree(_update_mlp(A_next, b_next, closes, last, phi, d, dp)))
    layers.append(Attention(_zero_attention(D), masked))
    readout = np.hstack([np.zeros((dp, d + 2 * dp)), np.eye(dp)])
    layers.append(ContextFree(MlpParams.affine(readout, np.zeros(dp))))
    c_gamma = gamma_tilde_bound(A, c_omega)
    return RealizedTransformer(
        stack=LayerStack(tuple(layers)),
        algebra=A,
        phi=None if exact_product else phi,
        c_omega=float(c_omega),
        c_gamma=c_gamma,
        radius=phi.radius if (phi is not None and not exact_product) else float("inf"),
        propagation=propagation_factor(A, c_gamma),
    )


def size_contract_violations(stack: LayerStack, d: int, dprime: int) -> list[str]:
    """Attention layers must have ``d_in <= d + 3d'``, ``d_head = k = 1`` and ``H <= d'``."""
    problems = []
    for i, layer in enumerate(stack.layers):
        if not isinstance(layer, Attention):
            continue
        th = layer.params
        if th.d_in > d + 3 * dprime:
            problems.append(f"layer {i}: d_in={th.d_in} > {d + 3 * dprime}")
        if th.d_head != 1 or th.k != 1:
            problems.append(f"layer {i}: d_head={th.d_head}, k={th.k} (expected 1, 1)")
        if th.H > dprime:
            problems.append(f"layer {i}: H={th.H} > d'={dprime}")
    return problems
