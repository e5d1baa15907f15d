"""Deterministic fixture generators shared by tests, the verification suite and the CLI."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .attention import Attention, ContextFree, HeadParams, LayerStack, MlpParams, MultiHeadParams
from .measures import ParticleMeasure, SpaceTimeMeasure, time_marginal

__all__ = [
    "CausalFixture",
    "random_head",
    "random_multihead",
    "random_mlp",
    "random_stack",
    "random_measure",
    "random_spacetime",
    "ball",
    "lipschitz_path",
    "lip_context",
    "lip_family",
    "separation_pairs",
    "ConvergenceCase",
    "convergence_limit",
    "convergence_discretization",
    "convergence_cases",
    "digest",
]


def ball(rng, n: int, dim: int, radius: float = 1.0) -> np.ndarray:
    """``n`` points uniform in the ball of radius ``radius``."""
    g = rng.normal(size=(n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * radius * rng.uniform(size=(n, 1)) ** (1.0 / dim)


def random_head(rng, d_in: int, k: int, d_head: int, scale: float = 1.0) -> HeadParams:
    s = scale / np.sqrt(d_in)
    return HeadParams(K=rng.normal(size=(k, d_in)) * s, Q=rng.normal(size=(k, d_in)) * s,
                      V=rng.normal(size=(d_head, d_in)) * s)


def random_multihead(rng, d_in: int, H: int, k: int | None = None, d_head: int | None = None,
                     scale: float = 1.0) -> MultiHeadParams:
    k = k or int(rng.integers(1, d_in + 1))
    d_head = d_head or int(rng.integers(1, d_in + 1))
    heads = []
    for _ in range(H):
        W = rng.normal(size=(d_in, d_head)) * scale / np.sqrt(d_head)
        heads.append((W, random_head(rng, d_in, k, d_head, scale)))
    return MultiHeadParams(tuple(heads))


def random_mlp(rng, dim: int, hidden: int | None = None, scale: float = 1.0) -> MlpParams:
    hidden = hidden or 2 * dim
    return MlpParams((
        (rng.normal(size=(hidden, dim)) * scale / np.sqrt(dim), rng.normal(size=hidden) * 0.1, "relu"),
        (rng.normal(size=(dim, hidden)) * scale / np.sqrt(hidden), rng.normal(size=dim) * 0.1, "identity"),
    ))


def random_stack(rng, masked: bool = False, max_layers: int = 3, max_dim: int = 8, max_heads: int = 4,
                 dim: int | None = None, n_layers: int | None = None) -> LayerStack:
    """Alternating attention / MLP blocks; ``L <= max_layers`` attention layers unless ``n_layers`` is given."""
    d = dim or int(rng.integers(1, max_dim + 1))
    L = n_layers or int(rng.integers(1, max_layers + 1))
    layers = []
    for _ in range(L):
        H = int(rng.integers(1, max_heads + 1))
        layers.append(Attention(random_multihead(rng, d, H), masked))
        if rng.uniform() < 0.7:
            layers.append(ContextFree(random_mlp(rng, d)))
    return LayerStack(tuple(layers))


def random_measure(rng, n: int, dim: int, uniform: bool = True, radius: float = 1.0) -> ParticleMeasure:
    pts = ball(rng, n, dim, radius)
    if uniform:
        w = np.full(n, 1.0 / n)
    else:
        w = rng.uniform(0.1, 1.0, size=n)
        w /= w.sum()
    return ParticleMeasure(pts, w)


def random_spacetime(rng, n: int, dim: int, radius: float = 1.0) -> SpaceTimeMeasure:
    """Uniform tokens at times ``i / n``."""
    return SpaceTimeMeasure(ball(rng, n, dim, radius), np.arange(1, n + 1) / n, np.full(n, 1.0 / n))


class CausalFixture(NamedTuple):
    id: str
    mu: SpaceTimeMeasure
    x: np.ndarray
    t: float


def lipschitz_path(C: float, dim: int, rng):
    """Unit-speed circular arc scaled to speed ``C``: ``|phi(s) - phi(s')| <= C |s - s'|``."""
    omega = float(rng.uniform(0.5, 2.0))
    basis = np.linalg.qr(rng.normal(size=(dim, max(dim, 2))))[0][:, :2] if dim >= 2 else None

    def phi(s):
        s = np.asarray(s, dtype=float)
        if basis is None:
            return (C * s)[..., None]
        plane = np.stack([np.sin(omega * s), 1.0 - np.cos(omega * s)], axis=-1) * (C / omega)
        return plane @ basis.T

    return phi


def lip_context(rng, C: float, sigma: float, dim: int = 2, times=None, per_time: int = 3,
                radius: float = 0.5) -> SpaceTimeMeasure:
    """A base cloud translated along a ``C``-Lipschitz path, with mass ``sigma`` at time 0.

    Every time slice is the same cloud shifted by ``phi(s)``, so consecutive
    conditionals are ``C``-close in ``W_2`` per unit time.  The default times
    leave gaps of zero marginal mass for identifiability pairs.
    """
    if times is None:
        times = np.array([0.0, 0.1, 0.2, 0.5, 0.55, 0.9])
    times = np.asarray(times, dtype=float)
    if times[0] != 0.0:
        raise ValueError("the first time must be 0")
    base = ball(rng, per_time, dim, radius)
    phi = lipschitz_path(C, dim, rng)
    k = times.size
    pts, ts, ws = [], [], []
    for j, s in enumerate(times):
        pts.append(base + phi(s))
        ts.append(np.full(per_time, s))
        mass = sigma if j == 0 else (1.0 - sigma) / (k - 1)
        ws.append(np.full(per_time, mass / per_time))
    w = np.concatenate(ws)
    return SpaceTimeMeasure(np.vstack(pts), np.concatenate(ts), w / w.sum())


def lip_family(seed: int = 0, dim: int = 2, sigmas=(0.1, 0.3), Cs=(1.0, 10.0), contexts: int = 2,
               queries: int = 2) -> list[CausalFixture]:
    """Fixtures over the ``Lip_C^sigma`` grid; query times hit atoms, gaps and 1."""
    rng = np.random.default_rng(seed)
    out = []
    for sigma in sigmas:
        for C in Cs:
            for c in range(contexts):
                mu = lip_context(rng, C, sigma, dim)
                atoms = time_marginal(mu).times
                tq = sorted(set(atoms) | {0.3, 0.7, 1.0})
                for q in range(queries):
                    x = ball(rng, 1, dim, 1.0)[0]
                    for t in tq:
                        out.append(CausalFixture(f"s{sigma}-C{C:g}-ctx{c}-q{q}-t{t:g}", mu, x, float(t)))
    return out


def separation_pairs() -> list[tuple[str, ParticleMeasure, ParticleMeasure]]:
    """Ten pairs of distinct measures, several sharing low-order moments."""
    P = ParticleMeasure
    h = np.full(2, 0.5)
    pairs = [
        ("dirac0-vs-dirac1", P([[0.0]], [1.0]), P([[1.0]], [1.0])),
        ("sym-vs-dirac0", P([[-1.0], [1.0]], h), P([[0.0]], [1.0])),
        ("weights-swapped", P([[0.0], [1.0]], [0.3, 0.7]), P([[0.0], [1.0]], [0.7, 0.3])),
        ("three-vs-two-same-mean-var",
         P([[-1.0], [0.0], [1.0]], [0.25, 0.5, 0.25]), P([[-np.sqrt(0.5)], [np.sqrt(0.5)]], h)),
        ("skewed-same-two-moments",
         P([[-1.0], [0.5], [2.0]], [1 / 3, 1 / 3, 1 / 3]),
         P([[-2.0], [-0.5], [1.0]], [1 / 3, 1 / 3, 1 / 3])),
        ("2d-rotated", P([[1.0, 0.0], [-1.0, 0.0]], h), P([[0.0, 1.0], [0.0, -1.0]], h)),
        ("2d-shift", P([[0.0, 0.0], [1.0, 1.0]], h), P([[0.0, 0.1], [1.0, 1.1]], h)),
        ("2d-same-marginals",
         P([[0.0, 0.0], [1.0, 1.0]], h), P([[0.0, 1.0], [1.0, 0.0]], h)),
        ("3d-tiny-perturbation",
         P([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]], h), P([[0.0, 0.0, 0.0], [1.0, 0.0, 1e-3]], h)),
        ("1d-dense-vs-split",
         P(np.linspace(-1, 1, 5)[:, None], np.full(5, 0.2)),
         P(np.linspace(-1, 1, 6)[:, None], np.full(6, 1 / 6))),
    ]
    return pairs


# --------------------------------------------------------------------------
# convergence of masked measures
# --------------------------------------------------------------------------

_CIRCLE_RADIUS = 0.1
_SLICES = (0.0, 0.25, 0.5, 0.75)


def _path(s):
    s = np.asarray(s, dtype=float)
    return np.stack([s, 0.5 * np.sin(np.pi * s)], axis=-1)


def _circle(k: int, center, radius: float, phase: float) -> np.ndarray:
    ang = 2 * np.pi * (np.arange(k) + phase) / k
    return center + radius * np.column_stack([np.cos(ang), np.sin(ang)])


def convergence_discretization(n: int, perturb: bool = True) -> SpaceTimeMeasure:
    """``n`` uniform tokens on four time slices; each conditional is a circle moving along a path.

    The limit has atoms at ``0, 1/4, 1/2, 3/4`` and conditionals uniform on a
    circle centred at ``phi(s)``.  With ``perturb`` (the sequence ``mu_n``) the
    nonzero atoms move to ``tau + 1/(2n)``, half of the time-0 tokens sit at
    ``1/(2n)``, and radius and phase move by ``O(1/n)``; without it this is
    the fine reference discretization of the limit.
    """
    if n % 8:
        raise ValueError("n must be a multiple of 8")
    k = n // 4
    eps = 1.0 / n if perturb else 0.0
    shift = 0.5 / n if perturb else 0.0
    r = _CIRCLE_RADIUS * (1.0 + eps)
    pts, times = [], []
    for j, tau in enumerate(_SLICES):
        ring = _circle(k, _path(tau), r, 0.5 * eps * k)
        pts.append(ring)
        if j == 0:
            ts = np.zeros(k)
            ts[1::2] = shift
        else:
            ts = np.full(k, tau + shift)
        times.append(ts)
    return SpaceTimeMeasure(np.vstack(pts), np.concatenate(times), np.full(n, 1.0 / n))


def convergence_limit(resolution: int = 2048) -> SpaceTimeMeasure:
    """Fine unperturbed discretization standing in for the limit measure."""
    return convergence_discretization(resolution, perturb=False)


class ConvergenceCase(NamedTuple):
    name: str
    t_limit: float
    t_of_n: object  # callable n -> t_n


def convergence_cases() -> list[ConvergenceCase]:
    return [
        ConvergenceCase("(i) t_n = 1/2 + 1/n -> 1/2", 0.5, lambda n: 0.5 + 1.0 / n),
        ConvergenceCase("(ii) t_n = 1/n -> 0", 0.0, lambda n: 1.0 / n),
        ConvergenceCase("(iii) t_n = t = 0", 0.0, lambda n: 0.0),
    ]


def digest(*arrays) -> str:
    """sha256 over the raw bytes of the given arrays (shape-tagged)."""
    import hashlib

    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()
