"""ReLU network for the coordinatewise product on a ball.

``x * y = ((x + y)^2 - (x - y)^2) / 4`` and each square is the piecewise-linear
interpolant of ``s^2`` at ``2^m + 1`` nodes, written as ``m`` compositions of
the tent map (the sawtooth construction).  On ``|s| <= S`` the interpolation
error of one square is ``S^2 4^{-m-1}``, which gives the depth for a target
error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..attention import MlpParams

__all__ = ["ProductMlp", "ProductMlpError", "build_product_mlp", "certify", "product_error_bound"]


class ProductMlpError(ValueError):
    """Raised when the requested accuracy is out of reach within the depth budget."""

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class ProductMlp:
    mlp: MlpParams
    radius: float
    eps: float
    sawtooth_depth: int
    analytic_error: float
    sampled_error: float
    n_certified: int

    @property
    def dprime(self) -> int:
        return self.mlp.d_out

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        batch = np.concatenate([np.atleast_2d(x), np.atleast_2d(y)], axis=1)
        out = self.mlp.apply(batch)
        return out[0] if x.ndim == 1 else out


def product_error_bound(radius: float, depth: int) -> float:
    """Sup error of the product network on the ball of radius ``radius`` in R^{2d'}."""
    # |x_i|, |y_i| on the ball give |x_i +- y_i| <= sqrt(2) R
    return radius ** 2 * 4.0 ** (-depth - 1)


def _square_unit_layers(m: int, scale: float):
    """Per-unit weights (input s -> approx s^2) for the sawtooth square on [-scale, scale].

    Returns the list of hidden (W, b) blocks acting on the unit's own channels
    and the output row.  The first block takes the scalar ``s``.
    """
    blocks = []
    blocks.append((np.array([[1.0], [-1.0]]), np.zeros(2)))        # |s| = relu(s) + relu(-s)
    inv = 1.0 / scale
    W2 = np.array([[inv, inv]] * 4)                                 # t = |s| / scale
    b2 = np.array([0.0, -0.5, -1.0, 0.0])
    blocks.append((W2, b2))
    tent = np.array([2.0, -4.0, 2.0])
    for k in range(3, m + 2):
        j = k - 2  # the tent iterate g_j carried by the previous block
        W = np.zeros((4, 4))
        W[0, :3] = tent
        W[1, :3] = tent
        W[2, :3] = tent
        W[3, :3] = -tent / 4.0 ** j
        W[3, 3] = 1.0
        blocks.append((W, np.array([0.0, -0.5, -1.0, 0.0])))
    out = np.zeros(4)
    out[:3] = -tent / 4.0 ** m
    out[3] = 1.0
    return blocks, out * scale ** 2


def _assemble(dprime: int, m: int, scale: float) -> MlpParams:
    blocks, out_row = _square_unit_layers(m, scale)
    units = 2 * dprime  # unit 2i: x_i + y_i, unit 2i+1: x_i - y_i
    layers = []
    # first hidden layer reads (x, y)
    W0, b0 = blocks[0]
    W = np.zeros((2 * units, 2 * dprime))
    for i in range(dprime):
        for sgn, u in ((1.0, 2 * i), (-1.0, 2 * i + 1)):
            s_row = np.zeros(2 * dprime)
            s_row[i] = 1.0
            s_row[dprime + i] = sgn
            W[2 * u:2 * u + 2] = W0 @ s_row[None, :]
    layers.append((W, np.tile(b0, units), "relu"))
    widths = [2]
    for Wb, bb in blocks[1:]:
        w_in = widths[-1]
        w_out = Wb.shape[0]
        W = np.zeros((w_out * units, w_in * units))
        for u in range(units):
            W[u * w_out:(u + 1) * w_out, u * w_in:(u + 1) * w_in] = Wb
        layers.append((W, np.tile(bb, units), "relu"))
        widths.append(w_out)
    W = np.zeros((dprime, 4 * units))
    for i in range(dprime):
        W[i, 4 * (2 * i):4 * (2 * i) + 4] = out_row / 4.0
        W[i, 4 * (2 * i + 1):4 * (2 * i + 1) + 4] = -out_row / 4.0
    layers.append((W, np.zeros(dprime), "identity"))
    return MlpParams(tuple(layers))


def _certification_points(dprime: int, radius: float, n_random: int, seed: int) -> np.ndarray:
    dim = 2 * dprime
    rng = np.random.default_rng(seed)
    per_axis = max(3, int(round(n_random ** (1.0 / dim))))
    axis = np.linspace(-radius, radius, per_axis)
    grid = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    grid = grid[np.linalg.norm(grid, axis=1) <= radius]
    g = rng.normal(size=(n_random, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    inside = g * radius * rng.uniform(size=(n_random, 1)) ** (1.0 / dim)
    boundary = g[: n_random // 5] * radius
    # coordinate-aligned extremes where |x_i + y_i| peaks
    diag = np.zeros((2 * dprime, dim))
    for i in range(dprime):
        diag[2 * i, i] = diag[2 * i, dprime + i] = radius / np.sqrt(2.0)
        diag[2 * i + 1, i] = radius / np.sqrt(2.0)
        diag[2 * i + 1, dprime + i] = -radius / np.sqrt(2.0)
    return np.vstack([grid, inside, boundary, diag])


def certify(phi_mlp: MlpParams, dprime: int, radius: float, n_points: int = 10_000, seed: int = 0):
    """Max coordinatewise error of the network against ``x * y`` on sampled ball points."""
    pts = _certification_points(dprime, radius, n_points, seed)
    exact = pts[:, :dprime] * pts[:, dprime:]
    err = np.abs(phi_mlp.apply(pts) - exact).max()
    return float(err), pts.shape[0]


def build_product_mlp(dprime: int, R: float, eps: float, max_depth: int = 40,
                      n_certify: int = 10_000, seed: int = 0) -> ProductMlp:
    """Network ``Phi: R^{2d'} -> R^{d'}`` with ``|x * y - Phi(x, y)|_inf <= eps`` on ``|(x, y)| <= R``."""
    if R <= 0 or eps <= 0:
        raise ValueError("R and eps must be positive")
    if dprime < 1:
        raise ValueError("d' must be at least 1")
    m = 1
    while product_error_bound(R, m) > eps and m < max_depth:
        m += 1
    bound = product_error_bound(R, m)
    if bound > eps:
        raise ProductMlpError(
            f"depth budget {max_depth} reaches error {bound:.3e} > eps={eps:.3e} on radius {R}", bound)
    mlp = _assemble(dprime, m, np.sqrt(2.0) * R)
    sampled, count = certify(mlp, dprime, R, n_certify, seed)
    if count < n_certify:
        raise RuntimeError("certification sampled too few points")
    if sampled > eps:
        raise ProductMlpError(f"sampled error {sampled:.3e} exceeds eps={eps:.3e}", sampled)
    return ProductMlp(mlp, float(R), float(eps), m, bound, sampled, count)
