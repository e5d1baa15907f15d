"""Causality and identifiability of space-time in-context maps.

A space-time map ``Lambda(mu, x, t)`` is causal when it only sees
``mask(mu, t)`` and identifiable when it cannot tell ``t`` from ``t'`` once
the masked measures agree.  Causal identifiable maps factor through the
reduced map ``(mu_t, x) -> Lambda(mu_t, x, e(mu_t))`` which is what the
masked fitter approximates.  Every probe reports residuals; thresholds belong
to the caller.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .attention import LayerStack, compose_masked, compose_unmasked
from .fixtures import CausalFixture, ball, lip_context
from .measures import SpaceTimeMeasure, end_point, mask, sigma_mass, time_marginal
from .transport import lipschitz_dictionary, spacetime_wasserstein, weakstar_gap
from .universality.fitting import FitConfig, MaskedCylindricalRegressor
from .universality.product_mlp import build_product_mlp
from .universality.realize import RealizedTransformer, realize, required_radius
from .validation import TIME_TOL, as_float_vector

__all__ = [
    "InContextMapHandle",
    "CausalityReport",
    "CausalityError",
    "reduced_eval",
    "check_causal",
    "check_identifiable",
    "identifiability_pairs",
    "masked_limit_probe",
    "identifiability_stability_probe",
    "convergence_probe",
    "sample_causal_fixtures",
    "fit_masked",
    "MaskedFit",
]


@dataclass(frozen=True)
class InContextMapHandle:
    """A deterministic space-time map ``(mu, x, t) -> R^{d'}`` with declared dimensions."""

    fn: Callable[[SpaceTimeMeasure, np.ndarray, float], np.ndarray]
    d: int
    dprime: int
    name: str = "map"

    def __call__(self, mu: SpaceTimeMeasure, x, t: float) -> np.ndarray:
        x = as_float_vector(x, "query", size=self.d)
        out = np.atleast_1d(np.asarray(self.fn(mu, x, float(t)), dtype=np.float64))
        if out.shape != (self.dprime,):
            raise ValueError(f"{self.name} returned shape {out.shape}, declared ({self.dprime},)")
        return out

    @classmethod
    def from_masked_stack(cls, stack: LayerStack, name: str = "masked-stack") -> "InContextMapHandle":
        if not stack.masked:
            raise ValueError("stack has no masked attention layer; use from_unmasked_stack")
        return cls(lambda mu, x, t: compose_masked(stack, mu, x, t), stack.d_in, stack.d_out, name)

    @classmethod
    def from_unmasked_stack(cls, stack: LayerStack, name: str = "unmasked-stack") -> "InContextMapHandle":
        """Wrap an unmasked stack as a space-time map that ignores time (sees the future)."""
        return cls(lambda mu, x, t: compose_unmasked(stack, mu.space_marginal(), x), stack.d_in, stack.d_out, name)

    @classmethod
    def from_realized(cls, realized: RealizedTransformer, name: str = "realized") -> "InContextMapHandle":
        if not realized.masked:
            return cls.from_unmasked_stack(realized.stack, name)
        return cls(lambda mu, x, t: realized(mu, x, t), realized.algebra.dim, realized.algebra.dprime, name)

    @classmethod
    def from_function(cls, fn, d: int, dprime: int, name: str = "function") -> "InContextMapHandle":
        return cls(fn, d, dprime, name)


@dataclass
class CausalityReport:
    causality_residual: float = 0.0
    identifiability_residual: float = 0.0
    fixtures: int = 0
    pairs: int = 0
    worst_causal: str | None = None
    worst_identifiable: str | None = None
    map_name: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def merge(self, other: "CausalityReport") -> "CausalityReport":
        out = CausalityReport(map_name=self.map_name or other.map_name)
        out.fixtures = self.fixtures + other.fixtures
        out.pairs = self.pairs + other.pairs
        for src in (self, other):
            if src.causality_residual >= out.causality_residual and src.fixtures:
                out.causality_residual, out.worst_causal = src.causality_residual, src.worst_causal
            if src.identifiability_residual >= out.identifiability_residual and src.pairs:
                out.identifiability_residual = src.identifiability_residual
                out.worst_identifiable = src.worst_identifiable
        return out


class CausalityError(ValueError):
    """Raised when a target fails the causality or identifiability precheck."""

    def __init__(self, message: str, report: CausalityReport):
        super().__init__(message)
        self.report = report


def _fixtures(fixtures) -> list[CausalFixture]:
    out = []
    for i, f in enumerate(fixtures):
        if isinstance(f, CausalFixture):
            out.append(f)
        else:
            mu, x, t = f
            out.append(CausalFixture(f"fixture{i}", mu, np.asarray(x, dtype=float), float(t)))
    return out


def reduced_eval(lam: InContextMapHandle, mu: SpaceTimeMeasure, x) -> np.ndarray:
    """``Lambda(mu, x, e(mu))`` with ``e`` the last atom of the time marginal."""
    return lam(mu, x, end_point(time_marginal(mu)))


def check_causal(lam: InContextMapHandle, fixtures) -> CausalityReport:
    """Max over fixtures of ``|Lambda(mu, x, t) - Lambda(mask(mu, t), x, t)|``."""
    rep = CausalityReport(map_name=lam.name)
    for f in _fixtures(fixtures):
        gap = float(np.abs(lam(f.mu, f.x, f.t) - lam(mask(f.mu, f.t), f.x, f.t)).max())
        rep.fixtures += 1
        if rep.worst_causal is None or gap > rep.causality_residual:
            rep.causality_residual, rep.worst_causal = gap, f.id
    return rep


def identifiability_pairs(mu: SpaceTimeMeasure) -> list[tuple[float, float]]:
    """Times ``t < t'`` with no marginal mass in ``(t, t']``, so ``mu_t = mu_t'``.

    For every atom ``tau`` the partner times are the midpoint of the gap to the
    next atom and a point just before it (or ``1`` after the last atom).
    """
    atoms = time_marginal(mu).times
    pairs = []
    for j, tau in enumerate(atoms):
        nxt = atoms[j + 1] if j + 1 < len(atoms) else None
        hi = 1.0 if nxt is None else nxt
        gap = hi - tau
        if gap <= 4 * TIME_TOL:
            continue
        if nxt is None:
            pairs.append((tau, 0.5 * (tau + hi)))
            pairs.append((tau, hi))
        else:
            pairs.append((tau, tau + 0.5 * gap))
            pairs.append((tau, hi - 1e-3 * gap))
    return pairs


def check_identifiable(lam: InContextMapHandle, fixtures) -> CausalityReport:
    """Max of ``|Lambda(mu_t, x, t) - Lambda(mu_t', x, t')|`` over gap pairs of every fixture.

    Fixtures that share a context and query contribute their pairs once.
    Contexts without gaps contribute no pairs (a vacuous pass).
    """
    rep = CausalityReport(map_name=lam.name)
    seen = set()
    for f in _fixtures(fixtures):
        rep.fixtures += 1
        key = (id(f.mu), f.x.tobytes())
        if key in seen:
            continue
        seen.add(key)
        for t, tp in identifiability_pairs(f.mu):
            a = lam(mask(f.mu, t), f.x, t)
            b = lam(mask(f.mu, tp), f.x, tp)
            gap = float(np.abs(a - b).max())
            rep.pairs += 1
            if rep.worst_identifiable is None or gap > rep.identifiability_residual:
                rep.identifiability_residual = gap
                rep.worst_identifiable = f"{f.id}@({t:g},{tp:g})"
    return rep


def masked_limit_probe(mu: SpaceTimeMeasure, t_sequence: Sequence[float], dictionary=None) -> dict:
    """Weak* gaps between ``mask(mu, t_k)`` and ``mask(mu, 0)`` with their a-priori bounds.

    For every test function ``f`` of ``(x, s)`` the gap is a convex combination
    of ``F(s) - F(0)`` with ``F(s) = int f(x, s) dmu(x|s)``, so it is at most
    ``sup_{s <= t} |F(s) - F(0)|``; that bound is reported next to each gap.
    """
    if sigma_mass(mu) <= 0.0:
        raise ValueError("masked_limit_probe needs an atom at time 0 (sigma > 0)")
    if dictionary is None:
        dictionary = lipschitz_dictionary(mu.dim + 1)
    ts = [float(t) for t in t_sequence]
    base = mask(mu, 0.0)
    groups = []  # (time, conditional lifted cloud)
    atoms = time_marginal(mu).times
    for tau in atoms:
        sel = np.abs(mu.times - tau) <= TIME_TOL
        w = mu.weights[sel]
        groups.append((tau, np.column_stack([mu.points[sel], mu.times[sel]]), w / w.sum()))
    F = np.array([[float(fn(z) @ w) for _, fn in dictionary] for _, z, w in groups])  # (atoms, funcs)
    gaps, bounds = [], []
    for t in ts:
        gaps.append(weakstar_gap(mask(mu, t), base, dictionary))
        visible = [j for j, (tau, _, _) in enumerate(groups) if tau <= t + TIME_TOL]
        bounds.append(float(np.abs(F[visible] - F[0]).max()))
    return {"times": ts, "gaps": gaps, "bounds": bounds}


def _uniform_gap(a: InContextMapHandle, b: InContextMapHandle, fixtures) -> float:
    return max(float(np.abs(a(f.mu, f.x, f.t) - b(f.mu, f.x, f.t)).max()) for f in fixtures)


def identifiability_stability_probe(map_sequence: Sequence[InContextMapHandle], limit_map: InContextMapHandle,
                                    fixtures) -> dict:
    """Check ``R* <= min_n (2 U_n + R_n)`` on the fixtures.

    ``U_n`` is the largest observed gap ``|Lambda_n - Lambda*|`` on the fixture
    triples, ``R_n`` and ``R*`` the identifiability residuals.  When ``U_n``
    really bounds the gap everywhere the inequality is guaranteed; a
    violation shows the limit has time dependence the fixtures did not see.
    """
    fixtures = _fixtures(fixtures)
    r_star = check_identifiable(limit_map, fixtures).identifiability_residual
    rows = []
    for lam in map_sequence:
        u = _uniform_gap(lam, limit_map, fixtures)
        r = check_identifiable(lam, fixtures).identifiability_residual
        rows.append({"map": lam.name, "uniform_gap": u, "residual": r, "bound": 2.0 * u + r})
    bound = min(row["bound"] for row in rows) if rows else float("inf")
    return {"limit_residual": r_star, "bound": bound, "holds": bool(r_star <= bound), "sequence": rows}


def convergence_probe(sequence: Sequence[tuple[SpaceTimeMeasure, float]], limit: SpaceTimeMeasure, t: float,
                      p: int = 2, method: str = "lp") -> list[float]:
    """``W_p((mu_n)_{t_n}, mu_t)`` on lifted space-time points for each ``(mu_n, t_n)``."""
    target = mask(limit, t)
    return [spacetime_wasserstein(mask(mu_n, t_n), target, p, method=method) for mu_n, t_n in sequence]


# --------------------------------------------------------------------------
# masked fitting
# --------------------------------------------------------------------------


def sample_causal_fixtures(config: FitConfig, n_contexts: int, rng, C: float = 1.0, sigma: float = 0.3,
                           queries: int = 2) -> list[CausalFixture]:
    """Lipschitz contexts with gaps; query times at the atoms of each context."""
    out = []
    lo, hi = config.n_particles
    for c in range(n_contexts):
        k = int(rng.integers(3, 7))
        gaps = np.sort(rng.choice(np.arange(1, 20), size=k - 1, replace=False)) / 20.0
        times = np.r_[0.0, gaps]
        per = max(1, int(rng.integers(lo, hi + 1)) // k)
        mu = lip_context(rng, C, sigma, config.dim, times=times, per_time=per, radius=config.domain_radius)
        for q in range(queries):
            x = ball(rng, 1, config.dim, config.domain_radius)[0]
            for t in times:
                out.append(CausalFixture(f"ctx{c}-q{q}-t{t:g}", mu, x, float(t)))
    return out


@dataclass
class MaskedFit:
    realized: RealizedTransformer
    estimator: MaskedCylindricalRegressor
    precheck: CausalityReport
    train_error: float
    info: dict = field(default_factory=dict)


def fit_masked(target: InContextMapHandle, config: FitConfig | None = None, seed=0, *, n_contexts: int = 60,
               phi_eps: float | None = 1e-8, tol: float = 1e-8, C: float = 1.0, sigma: float = 0.3) -> MaskedFit:
    """Fit a causal identifiable target on reduced pairs and realize it with masked attention.

    Training triples ``(mu, x, t)`` become ``(mask(mu, t), x)`` with targets
    ``Lambda*(mu, x, t)``.  ``phi_eps=None`` realizes with exact products.
    """
    config = config or FitConfig(dim=target.d)
    if config.dim != target.d:
        raise ValueError(f"config.dim={config.dim} but the target expects d={target.d}")
    rng = np.random.default_rng(seed)
    fixtures = sample_causal_fixtures(config, n_contexts, rng, C=C, sigma=sigma)
    pre = check_causal(target, fixtures).merge(check_identifiable(target, fixtures))
    if pre.causality_residual > tol:
        raise CausalityError(
            f"target is not causal: residual {pre.causality_residual:.3e} > {tol:g} at {pre.worst_causal}", pre)
    if pre.identifiability_residual > tol:
        raise CausalityError(
            f"target is not identifiable: residual {pre.identifiability_residual:.3e} > {tol:g} "
            f"at {pre.worst_identifiable}", pre)
    X = [(f.mu, f.x, f.t) for f in fixtures]
    Y = np.array([target(f.mu, f.x, f.t) for f in fixtures])
    est = MaskedCylindricalRegressor(random_state=seed, **config.estimator_params()).fit(X, Y)
    pred = est.predict(X).reshape(Y.shape)
    A = est.algebra_
    c_omega = max(max(float(np.linalg.norm(f.mu.points, axis=1).max()), float(np.linalg.norm(f.x)))
                  for f in fixtures)
    if phi_eps is None:
        realized = realize(A, exact_product=True, masked=True, c_omega=c_omega)
    else:
        phi = build_product_mlp(A.dprime, required_radius(A, c_omega), phi_eps)
        realized = realize(A, phi, masked=True, c_omega=c_omega)
    info = {"fixtures": len(fixtures), "c_omega": c_omega, "n_terms": [len(t) for t in est.terms_]}
    return MaskedFit(realized, est, pre, float(np.abs(pred - Y).max()), info)
