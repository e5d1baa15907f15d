"""Token attention, measure attention and the in-context composition rule.

Token matrices are stored row-wise, ``X.shape == (n, d_in)`` with one token per
row; the column convention of the usual matrix formula is the transpose of this.

Two independent evaluation paths live here:

* the *token path* (:func:`att_tokens`, :func:`matt_tokens`,
  :func:`transformer_tokens`) works on a plain token matrix, masks by token
  index, and never builds a measure;
* the *measure path* (:func:`gamma_unmasked`, :func:`gamma_masked`,
  :func:`compose_unmasked`, :func:`compose_masked`) works on weighted particles,
  masks by time, and advances the context by push-forward once per layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .measures import ParticleMeasure, SpaceTimeMeasure
from .validation import TIME_TOL, as_float_matrix, as_float_vector, check_matrix_shape, frozen

__all__ = [
    "HeadParams",
    "MultiHeadParams",
    "MlpParams",
    "Attention",
    "ContextFree",
    "PointwiseMap",
    "LayerStack",
    "att_tokens",
    "matt_tokens",
    "transformer_tokens",
    "gamma_unmasked",
    "gamma_masked",
    "attention_weights",
    "context_free",
    "compose_unmasked",
    "compose_masked",
    "transform_measure",
    "transform_spacetime",
]


@dataclass(frozen=True, eq=False)
class HeadParams:
    """Key, query and value matrices of one head: K, Q are (k, d_in), V is (d_head, d_in)."""

    K: np.ndarray
    Q: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        K = as_float_matrix(self.K, "K")
        Q = as_float_matrix(self.Q, "Q")
        V = as_float_matrix(self.V, "V")
        check_matrix_shape(Q, K.shape, "Q")
        if V.shape[1] != K.shape[1]:
            raise ValueError(f"V has {V.shape[1]} columns, K has {K.shape[1]}")
        object.__setattr__(self, "K", frozen(K))
        object.__setattr__(self, "Q", frozen(Q))
        object.__setattr__(self, "V", frozen(V))

    @property
    def d_in(self) -> int:
        return self.K.shape[1]

    @property
    def k(self) -> int:
        return self.K.shape[0]

    @property
    def d_head(self) -> int:
        return self.V.shape[0]


@dataclass(frozen=True, eq=False)
class MultiHeadParams:
    """``heads[h] = (W^h, theta^h)`` with ``W^h`` of shape (d_in, d_head)."""

    heads: tuple

    def __post_init__(self):
        heads = []
        for W, head in self.heads:
            W = as_float_matrix(W, "W")
            if not isinstance(head, HeadParams):
                head = HeadParams(*head)
            heads.append((frozen(W), head))
        if not heads:
            raise ValueError("at least one head is required")
        d_in, d_head, k = heads[0][1].d_in, heads[0][1].d_head, heads[0][1].k
        for W, head in heads:
            if (head.d_in, head.d_head, head.k) != (d_in, d_head, k):
                raise ValueError("all heads must share d_in, d_head and k")
            check_matrix_shape(W, (d_in, d_head), "W")
        object.__setattr__(self, "heads", tuple(heads))

    @property
    def d_in(self) -> int:
        return self.heads[0][1].d_in

    @property
    def d_head(self) -> int:
        return self.heads[0][1].d_head

    @property
    def k(self) -> int:
        return self.heads[0][1].k

    @property
    def H(self) -> int:
        return len(self.heads)


ACTIVATIONS = {
    "relu": lambda z: np.maximum(z, 0.0),
    "identity": lambda z: z,
}


@dataclass(frozen=True, eq=False)
class MlpParams:
    """Feed-forward layers ``(W, b, activation)`` applied as ``act(W z + b)``."""

    layers: tuple

    def __post_init__(self):
        layers = []
        prev = None
        for W, b, act in self.layers:
            W = as_float_matrix(W, "MLP weight")
            b = as_float_vector(b, "MLP bias", size=W.shape[0])
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")
            if prev is not None and W.shape[1] != prev:
                raise ValueError(f"MLP layer expects {W.shape[1]} inputs, previous layer gives {prev}")
            prev = W.shape[0]
            layers.append((frozen(W), frozen(b), act))
        if not layers:
            raise ValueError("MLP needs at least one layer")
        object.__setattr__(self, "layers", tuple(layers))

    @property
    def d_in(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def d_out(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def depth(self) -> int:
        return len(self.layers)

    def apply(self, Z: np.ndarray) -> np.ndarray:
        """Evaluate on a batch of rows."""
        Z = np.asarray(Z, dtype=np.float64)
        for W, b, act in self.layers:
            Z = ACTIVATIONS[act](Z @ W.T + b)
        return Z

    @classmethod
    def affine(cls, A, b) -> "MlpParams":
        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        return cls(((A, np.asarray(b, dtype=np.float64).reshape(A.shape[0]), "identity"),))

    @classmethod
    def identity(cls, dim: int) -> "MlpParams":
        return cls.affine(np.eye(dim), np.zeros(dim))


@dataclass(frozen=True)
class Attention:
    params: MultiHeadParams
    masked: bool = False

    @property
    def d_in(self) -> int:
        return self.params.d_in

    @property
    def d_out(self) -> int:
        return self.params.d_in


@dataclass(frozen=True)
class ContextFree:
    mlp: MlpParams

    @property
    def d_in(self) -> int:
        return self.mlp.d_in

    @property
    def d_out(self) -> int:
        return self.mlp.d_out

    def apply(self, Z: np.ndarray) -> np.ndarray:
        return self.mlp.apply(Z)


@dataclass(frozen=True)
class PointwiseMap:
    """Context-free layer given by a Python function on row batches (not serialisable)."""

    fn: Callable[[np.ndarray], np.ndarray]
    d_in: int
    d_out: int
    name: str = "pointwise"

    def apply(self, Z: np.ndarray) -> np.ndarray:
        out = np.asarray(self.fn(np.asarray(Z, dtype=np.float64)), dtype=np.float64)
        return out.reshape(Z.shape[0], self.d_out)


Layer = Union[Attention, ContextFree, PointwiseMap]


@dataclass(frozen=True)
class LayerStack:
    """Layers applied first to last with the in-context composition rule."""

    layers: tuple = ()

    def __post_init__(self):
        layers = tuple(self.layers)
        for prev, nxt in zip(layers, layers[1:]):
            if prev.d_out != nxt.d_in:
                raise ValueError(f"layer output dim {prev.d_out} does not match next input dim {nxt.d_in}")
        flags = {layer.masked for layer in layers if isinstance(layer, Attention)}
        if len(flags) > 1:
            raise ValueError("masked and unmasked attention layers cannot be mixed in one stack")
        object.__setattr__(self, "layers", layers)

    @property
    def masked(self) -> bool:
        return any(isinstance(layer, Attention) and layer.masked for layer in self.layers)

    @property
    def d_in(self) -> int | None:
        return self.layers[0].d_in if self.layers else None

    @property
    def d_out(self) -> int | None:
        return self.layers[-1].d_out if self.layers else None

    def attention_layers(self) -> list[Attention]:
        return [layer for layer in self.layers if isinstance(layer, Attention)]

    def __len__(self) -> int:
        return len(self.layers)


# --------------------------------------------------------------------------
# token path
# --------------------------------------------------------------------------


def _row_softmax(Z: np.ndarray, M: np.ndarray | None) -> np.ndarray:
    if M is not None:
        Z = np.where(M, Z, -np.inf)
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def att_tokens(theta: HeadParams, X, masked: bool = False) -> np.ndarray:
    """Single-head attention on a token matrix; row ``i`` attends to rows ``j <= i`` when masked."""
    X = as_float_matrix(X, "tokens")
    if X.shape[1] != theta.d_in:
        raise ValueError(f"tokens have dimension {X.shape[1]}, head expects {theta.d_in}")
    n = X.shape[0]
    scores = (X @ theta.Q.T) @ (X @ theta.K.T).T / np.sqrt(theta.k)
    M = np.tril(np.ones((n, n), dtype=bool)) if masked else None
    return _row_softmax(scores, M) @ (X @ theta.V.T)


def matt_tokens(theta: MultiHeadParams, X, masked: bool = False) -> np.ndarray:
    """Multi-head attention with skip connection on a token matrix."""
    X = as_float_matrix(X, "tokens")
    if X.shape[1] != theta.d_in:
        raise ValueError(f"tokens have dimension {X.shape[1]}, layer expects {theta.d_in}")
    out = X.copy()
    for W, head in theta.heads:
        out = out + att_tokens(head, X, masked) @ W.T
    return out


def transformer_tokens(stack: LayerStack, X) -> np.ndarray:
    """Classical layer-by-layer evaluation on a token matrix (index masking)."""
    Z = as_float_matrix(X, "tokens")
    for layer in stack.layers:
        if isinstance(layer, Attention):
            Z = matt_tokens(layer.params, Z, layer.masked)
        else:
            Z = layer.apply(Z)
    return Z


# --------------------------------------------------------------------------
# measure path
# --------------------------------------------------------------------------


def _canonical_order(*cols: np.ndarray) -> np.ndarray:
    table = np.column_stack(cols)
    return np.lexsort(table.T[::-1])


def _head_update(head: HeadParams, W: np.ndarray, queries: np.ndarray, points: np.ndarray,
                 weights: np.ndarray, visible: np.ndarray | None) -> np.ndarray:
    P = _softmax_weights(head, queries, points, weights, visible)
    return (P @ (points @ head.V.T)) @ W.T


def _softmax_weights(head: HeadParams, queries, points, weights, visible) -> np.ndarray:
    scores = (queries @ head.Q.T) @ (points @ head.K.T).T / np.sqrt(head.k)
    live = np.broadcast_to(weights > 0.0, scores.shape)
    if visible is not None:
        live = live & visible
    if not np.all(live.any(axis=1)):
        raise ValueError("causal window empty")
    s = np.where(live, scores, -np.inf)
    shift = s.max(axis=1, keepdims=True)
    E = np.where(live, weights * np.exp(s - shift), 0.0)
    return E / E.sum(axis=1, keepdims=True)


def _attend(theta: MultiHeadParams, queries: np.ndarray, points: np.ndarray, weights: np.ndarray,
            visible: np.ndarray | None = None) -> np.ndarray:
    out = queries.copy()
    for W, head in theta.heads:
        out = out + _head_update(head, W, queries, points, weights, visible)
    return out


def gamma_unmasked(theta: MultiHeadParams, mu: ParticleMeasure, x) -> np.ndarray:
    """Measure attention ``x + sum_h W^h int softmax(<Q^h x, K^h y>/sqrt(k)) V^h y dmu(y)``."""
    x = as_float_vector(x, "query", size=theta.d_in)
    if mu.dim != theta.d_in:
        raise ValueError(f"measure dimension {mu.dim} does not match layer input {theta.d_in}")
    order = _canonical_order(mu.points, mu.weights)
    return _attend(theta, x[None, :], mu.points[order], mu.weights[order])[0]


def gamma_masked(theta: MultiHeadParams, mu: SpaceTimeMeasure, x, t: float) -> np.ndarray:
    """Masked measure attention: only particles with time ``<= t`` are visible."""
    x = as_float_vector(x, "query", size=theta.d_in)
    if mu.dim != theta.d_in:
        raise ValueError(f"measure dimension {mu.dim} does not match layer input {theta.d_in}")
    order = _canonical_order(mu.points, mu.times, mu.weights)
    times = mu.times[order]
    visible = (times <= float(t) + TIME_TOL)[None, :]
    return _attend(theta, x[None, :], mu.points[order], mu.weights[order], visible)[0]


def attention_weights(head: HeadParams, mu, x, t: float | None = None) -> np.ndarray:
    """Softmax weights one head puts on each particle of ``mu`` (in ``mu``'s order)."""
    x = as_float_vector(x, "query", size=head.d_in)
    visible = None
    if t is not None:
        visible = (mu.times <= float(t) + TIME_TOL)[None, :]
    return _softmax_weights(head, x[None, :], mu.points, mu.weights, visible)[0]


def context_free(xi: MlpParams, x) -> np.ndarray:
    x = as_float_vector(x, "input", size=xi.d_in)
    return xi.apply(x[None, :])[0]


def _check_stack_input(stack: LayerStack, dim: int) -> None:
    if stack.layers and stack.d_in != dim:
        raise ValueError(f"stack expects dimension {stack.d_in}, got {dim}")


def _run(stack: LayerStack, points: np.ndarray, weights: np.ndarray, queries: np.ndarray,
         times: np.ndarray | None = None, query_times: np.ndarray | None = None, trace: bool = False):
    """Fold the layers over (context particles, extra queries).

    The particles are put in a canonical order once, so every reduction over
    the context runs in an order that does not depend on the caller's ordering.
    """
    if times is None:
        order = _canonical_order(points, weights)
    else:
        order = _canonical_order(points, times, weights)
    inverse = np.empty_like(order)
    inverse[order] = np.arange(order.size)
    P = points[order]
    w = weights[order]
    ts = None if times is None else times[order]
    Qy = queries
    states = [Qy.copy()] if trace else None
    for layer in stack.layers:
        if isinstance(layer, Attention):
            if layer.masked and ts is None:
                raise ValueError("masked attention needs a space-time context")
            if layer.masked:
                vis_ctx = ts[None, :] <= ts[:, None] + TIME_TOL
                vis_q = ts[None, :] <= query_times[:, None] + TIME_TOL
                newP = _attend(layer.params, P, P, w, vis_ctx)
                Qy = _attend(layer.params, Qy, P, w, vis_q)
            else:
                newP = _attend(layer.params, P, P, w)
                Qy = _attend(layer.params, Qy, P, w)
            P = newP
        else:
            P = layer.apply(P)
            Qy = layer.apply(Qy)
        if trace:
            states.append(Qy.copy())
    return P[inverse], Qy, states


def compose_unmasked(stack: LayerStack, mu: ParticleMeasure, x, return_trace: bool = False):
    """Evaluate the composed in-context map at one query ``x``.

    Attention layers push the context forward through their own in-context
    map before the next layer sees it; context-free layers move both.
    """
    x = as_float_vector(x, "query", size=mu.dim)
    _check_stack_input(stack, mu.dim)
    if stack.masked:
        raise ValueError("use compose_masked for a masked stack")
    _, Qy, states = _run(stack, mu.points, mu.weights, x[None, :], trace=return_trace)
    if return_trace:
        return Qy[0], [s[0] for s in states]
    return Qy[0]


def compose_masked(stack: LayerStack, mu: SpaceTimeMeasure, x, t: float, return_trace: bool = False):
    """Masked composition: points move in space, every particle keeps its time."""
    x = as_float_vector(x, "query", size=mu.dim)
    _check_stack_input(stack, mu.dim)
    t = float(t)
    if not np.any(mu.times[mu.weights > 0] <= t + TIME_TOL):
        raise ValueError("causal window empty")
    _, Qy, states = _run(stack, mu.points, mu.weights, x[None, :], mu.times, np.array([t]), trace=return_trace)
    if return_trace:
        return Qy[0], [s[0] for s in states]
    return Qy[0]


def transform_measure(stack: LayerStack, mu: ParticleMeasure):
    """Outputs at every particle of ``mu`` and the final pushed-forward measure."""
    _check_stack_input(stack, mu.dim)
    if stack.masked:
        raise ValueError("use transform_spacetime for a masked stack")
    P, _, _ = _run(stack, mu.points, mu.weights, np.zeros((0, mu.dim)))
    return P, ParticleMeasure(P, mu.weights)


def transform_spacetime(stack: LayerStack, mu: SpaceTimeMeasure):
    """Outputs ``Lambda(mu, x_i, t_i)`` at every particle and the pushed space-time measure."""
    _check_stack_input(stack, mu.dim)
    P, _, _ = _run(stack, mu.points, mu.weights, np.zeros((0, mu.dim)), mu.times, np.zeros(0))
    return P, SpaceTimeMeasure(P, mu.times, mu.weights)


def stack_from_layers(layers: Sequence[Layer]) -> LayerStack:
    return LayerStack(tuple(layers))
