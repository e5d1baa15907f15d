"""Experiment configs, report assembly and the per-mode drivers behind the CLI."""

from __future__ import annotations

import csv
import io
import platform
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .causal import InContextMapHandle, convergence_probe, fit_masked, masked_limit_probe, sample_causal_fixtures
from .fixtures import (
    ball,
    convergence_cases,
    convergence_discretization,
    convergence_limit,
    digest,
    lip_context,
    random_measure,
)
from .formats import dump_algebra, dump_json, dump_stack, load_algebra, load_measure, read_text, write_text
from .measures import SpaceTimeMeasure, mask
from .transport import wasserstein
from .universality.algebra import AlgebraElement, eval_algebra
from .universality.fitting import FitConfig, fit, sample_contexts
from .universality.product_mlp import build_product_mlp
from .universality.realize import realize, required_radius, size_contract_violations
from .verification import Check, run_suite, softmax_mean

__all__ = ["ConfigError", "ExperimentConfig", "Report", "run", "MODES", "TARGETS"]

MODES = ("verify", "fit", "realize", "ot", "probe")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def _bool(text) -> bool:
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class ExperimentConfig:
    """Settings for one CLI run.  Dotted config keys map to ``section_name`` fields."""

    mode: str = "verify"
    seed: int = 1
    out: str = "incontext-out"
    tol: float | None = None
    # fixture family
    fixtures_d: int = 2
    fixtures_dprime: int = 2
    fixtures_n_min: int = 4
    fixtures_n_max: int = 16
    fixtures_C: float = 1.0
    fixtures_sigma: float = 0.3
    fixtures_count: int = 50
    # fit
    fit_target: str = "running-mean"
    fit_n_grid: tuple = (1, 2, 4, 8)
    fit_T: int = 1
    fit_pool_size: int = 512
    fit_ridge: float = 1e-10
    fit_samples: int = 400
    fit_c_grid: tuple = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)
    fit_b_grid: tuple = (-1.0, 0.0, 1.0)
    fit_norm_grid: tuple = (0.5, 1.0, 2.0)
    fit_v_grid: tuple = (0.0, 1.0)
    fit_phi_eps: float = 1e-8
    # realize
    realize_algebra: str = ""
    realize_T: int = 2
    realize_N: int = 2
    realize_exact: bool = False
    realize_masked: bool = False
    # ot
    ot_mu: str = ""
    ot_nu: str = ""
    ot_method: str = "auto"
    # probe
    probe_kind: str = "all"
    # verify
    verify_criteria: tuple = ()
    verify_supporting: bool = True

    _DEFAULT_TOL = {"verify": 0.0, "fit": 1e-2, "realize": 1e-3, "ot": 1e-9, "probe": 1e-2}

    _PARSERS = {
        "mode": str, "seed": int, "out": str, "tol": float,
        "fixtures_d": int, "fixtures_dprime": int, "fixtures_n_min": int, "fixtures_n_max": int,
        "fixtures_C": float, "fixtures_sigma": float, "fixtures_count": int,
        "fit_target": str, "fit_n_grid": _ints, "fit_T": int, "fit_pool_size": int, "fit_ridge": float,
        "fit_samples": int, "fit_c_grid": _floats, "fit_b_grid": _floats, "fit_norm_grid": _floats,
        "fit_v_grid": _floats, "fit_phi_eps": float,
        "realize_algebra": str, "realize_T": int, "realize_N": int, "realize_exact": _bool, "realize_masked": _bool,
        "ot_mu": str, "ot_nu": str, "ot_method": str,
        "probe_kind": str, "verify_criteria": _ints, "verify_supporting": _bool,
    }

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        cfg = cls()
        for key, raw in mapping.items():
            attr = key.replace(".", "_", 1)
            if attr not in cls._PARSERS or "." not in key and attr.split("_")[0] in _SECTIONS:
                raise ConfigError(f"unknown config key '{key}'")
            try:
                setattr(cfg, attr, cls._PARSERS[attr](raw))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for '{key}': {exc}") from None
        return cfg

    @property
    def tolerance(self) -> float:
        return self.tol if self.tol is not None else self._DEFAULT_TOL[self.mode]

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode: expected one of {', '.join(MODES)}, got '{self.mode}'")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("tol: tolerances must be positive")
        if self.seed < 0:
            raise ConfigError("seed: must be a nonnegative integer")
        for name in ("fixtures_d", "fixtures_dprime", "fixtures_n_min", "fixtures_count", "fit_T",
                     "fit_pool_size", "fit_samples", "realize_T", "realize_N"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name.replace('_', '.', 1)}: must be at least 1")
        if self.fixtures_n_max < self.fixtures_n_min:
            raise ConfigError("fixtures.n_max: must be >= fixtures.n_min")
        if not 0.0 < self.fixtures_sigma <= 1.0:
            raise ConfigError("fixtures.sigma: must lie in (0, 1]")
        if self.fixtures_C < 0:
            raise ConfigError("fixtures.C: must be nonnegative")
        if self.fit_ridge < 0:
            raise ConfigError("fit.ridge: must be nonnegative")
        if not self.fit_phi_eps > 0:
            raise ConfigError("fit.phi_eps: tolerances must be positive")
        if not self.fit_n_grid or min(self.fit_n_grid) < 1:
            raise ConfigError("fit.n_grid: needs positive term counts")
        if self.fit_target not in TARGETS:
            raise ConfigError(f"fit.target: expected one of {', '.join(TARGETS)}, got '{self.fit_target}'")
        if self.mode == "ot" and not (self.ot_mu and self.ot_nu):
            raise ConfigError("ot.mu / ot.nu: two measure files are required in ot mode")
        if self.ot_method not in ("auto", "lp", "assignment"):
            raise ConfigError("ot.method: expected auto, lp or assignment")
        if self.probe_kind not in ("all", "limit", "convergence"):
            raise ConfigError("probe.kind: expected all, limit or convergence")
        bad = [c for c in self.verify_criteria if not 1 <= c <= 14]
        if bad:
            raise ConfigError(f"verify.criteria: unknown criteria {bad}")

    def echo(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            key = f.name.replace("_", ".", 1) if f.name.split("_")[0] in _SECTIONS else f.name
            out[key] = list(v) if isinstance(v, tuple) else v
        return out

    def fit_config(self, n_terms: int, dim: int) -> FitConfig:
        return FitConfig(n_terms=n_terms, n_factors=self.fit_T, pool_size=self.fit_pool_size, ridge=self.fit_ridge,
                         norm_grid=self.fit_norm_grid, b_grid=self.fit_b_grid, c_grid=self.fit_c_grid,
                         v_grid=self.fit_v_grid, dim=dim, n_samples=self.fit_samples,
                         n_particles=(self.fixtures_n_min, self.fixtures_n_max))


_SECTIONS = ("fixtures", "fit", "realize", "ot", "probe", "verify")


@dataclass
class Report:
    config: dict
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    digests: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "library": {"name": "incontext", "version": __version__, "python": platform.python_version(),
                        "numpy": np.__version__},
            "config": self.config,
            "checks": [c.to_dict() for c in self.checks],
            "summary": {"checks": len(self.checks), "passed": sum(c.passed for c in self.checks),
                        "all_passed": self.passed},
            "results": self.results,
            "fixture_digests": self.digests,
            "files": self.files,
            "timing": self.timing,
        }


# --------------------------------------------------------------------------
# targets
# --------------------------------------------------------------------------


def _running_mean(mu, x, t):
    return x + mask(mu, t).space_marginal().mean()


TARGETS = {
    "identity": ("context", lambda mu, x: x),
    "x+mean": ("context", lambda mu, x: x + mu.mean()),
    "softmax-mean": ("context", softmax_mean),
    "running-mean": ("causal", _running_mean),
}


# --------------------------------------------------------------------------
# modes
# --------------------------------------------------------------------------


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _mode_verify(cfg: ExperimentConfig, rep: Report, out: Path, log):
    checks = run_suite(cfg.seed, criteria=list(cfg.verify_criteria) or None,
                       include_supporting=cfg.verify_supporting, progress=lambda c: log(c.line()))
    rep.checks = checks
    for c in checks:
        if "fixture_digest" in c.details:
            rep.digests[c.id] = c.details["fixture_digest"]
    rows = [{"id": c.id, "criterion": c.criterion, "residual": repr(float(c.residual)), "threshold": c.threshold,
             "relation": c.relation, "passed": int(c.passed)} for c in checks]
    write_text(out / "checks.csv", _csv(rows))
    rep.files["checks_csv"] = str(out / "checks.csv")
    a11 = next((c for c in checks if c.id == "A11e"), None)
    if a11 is not None:
        curve = [{"N": N, **{k: repr(v[i]) for k, v in a11.details.items()}} for i, N in enumerate((1, 2, 4, 8))]
        write_text(out / "error_vs_N.csv", _csv(curve))
        rep.files["error_vs_N_csv"] = str(out / "error_vs_N.csv")


def _mode_fit(cfg: ExperimentConfig, rep: Report, out: Path, log):
    kind, target = TARGETS[cfg.fit_target]
    d = 1 if cfg.fit_target == "softmax-mean" else cfg.fixtures_d
    rng = np.random.default_rng([cfg.seed, 7])
    rows, last = [], None
    if kind == "context":
        test = sample_contexts(cfg.fit_config(1, d), cfg.fixtures_count, rng)
        rep.digests["heldout"] = digest(*[mu.points for mu, _ in test], *[x for _, x in test])
        for N in cfg.fit_n_grid:
            A = fit(target, cfg.fit_config(N, d), seed=cfg.seed)
            err = max(float(np.abs(A(mu, x) - target(mu, x)).max()) for mu, x in test)
            rows.append({"N": N, "heldout_sup_error": repr(err)})
            log(f"N={N}: held-out sup error {err:.3e}")
            last = A
        write_text(out / "algebra.txt", dump_algebra(last))
        rep.files["algebra"] = str(out / "algebra.txt")
    else:
        handle = InContextMapHandle.from_function(target, d, d, cfg.fit_target)
        test = sample_causal_fixtures(cfg.fit_config(1, d), cfg.fixtures_count, rng, C=cfg.fixtures_C,
                                      sigma=cfg.fixtures_sigma)
        test = test + [f._replace(t=min(1.0, f.t + 0.025)) for f in test]
        rep.digests["heldout"] = digest(*[f.mu.points for f in test], np.array([f.t for f in test]))
        for N in cfg.fit_n_grid:
            mf = fit_masked(handle, cfg.fit_config(N, d), seed=cfg.seed, phi_eps=cfg.fit_phi_eps,
                            C=cfg.fixtures_C, sigma=cfg.fixtures_sigma)
            err = max(float(np.abs(mf.realized(f.mu, f.x, f.t) - handle(f.mu, f.x, f.t)).max()) for f in test)
            rows.append({"N": N, "heldout_sup_error": repr(err)})
            log(f"N={N}: held-out sup error of the realized masked transformer {err:.3e}")
            last = mf
        write_text(out / "algebra.txt", dump_algebra(last.realized.algebra))
        write_text(out / "stack.txt", dump_stack(last.realized.stack))
        rep.files["algebra"] = str(out / "algebra.txt")
        rep.files["stack"] = str(out / "stack.txt")
        violations = size_contract_violations(last.realized.stack, d, d)
        rep.checks.append(Check("size", 0, "realized stack obeys the size contract", float(len(violations)), 0.0))
    write_text(out / "error_vs_N.csv", _csv(rows))
    rep.files["error_vs_N_csv"] = str(out / "error_vs_N.csv")
    errs = [float(r["heldout_sup_error"]) for r in rows]
    rep.results["error_vs_N"] = dict(zip(cfg.fit_n_grid, errs))
    rep.results["final_heldout_error"] = errs[-1]
    rep.checks.append(Check("heldout", 0, f"held-out sup error for target '{cfg.fit_target}'", errs[-1],
                            cfg.tolerance))
    rise = max((b - a for a, b in zip(errs, errs[1:])), default=0.0)
    rep.checks.append(Check("monotone", 0, "held-out error nonincreasing in N", rise, 1e-9))


def _mode_realize(cfg: ExperimentConfig, rep: Report, out: Path, log):
    rng = np.random.default_rng([cfg.seed, 8])
    if cfg.realize_algebra:
        try:
            A = load_algebra(read_text(cfg.realize_algebra))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"realize.algebra: cannot read '{cfg.realize_algebra}': {exc}") from None
    else:
        d, dp, T, N = cfg.fixtures_d, cfg.fixtures_dprime, cfg.realize_T, cfg.realize_N
        A = AlgebraElement(rng.normal(size=(dp, T, N, d)) * 0.7 / np.sqrt(d), rng.normal(size=(dp, T, N)) * 0.7,
                           rng.normal(size=(dp, T, N)), rng.normal(size=(dp, T, N)) * 0.7)
    n_lo, n_hi = cfg.fixtures_n_min, cfg.fixtures_n_max
    if cfg.realize_masked:
        fx = []
        for _ in range(cfg.fixtures_count):
            mu = lip_context(rng, cfg.fixtures_C, cfg.fixtures_sigma, A.dim)
            fx.append((mu, ball(rng, 1, A.dim)[0], float(rng.choice(mu.times))))
        pts = [mu.points for mu, _, _ in fx]
        reference = lambda mu, x, t: eval_algebra(A, mask(mu, t).space_marginal(), x)  # noqa: E731
    else:
        fx = [(random_measure(rng, int(rng.integers(n_lo, n_hi + 1)), A.dim), ball(rng, 1, A.dim)[0], None)
              for _ in range(cfg.fixtures_count)]
        pts = [mu.points for mu, _, _ in fx]
        reference = lambda mu, x, t: eval_algebra(A, mu, x)  # noqa: E731
    rep.digests["fixtures"] = digest(*pts)
    c_omega = max(max(float(np.linalg.norm(p, axis=1).max()) for p in pts),
                  max(float(np.linalg.norm(x)) for _, x, _ in fx))
    if cfg.realize_exact:
        r = realize(A, exact_product=True, masked=cfg.realize_masked, c_omega=c_omega)
    else:
        phi = build_product_mlp(A.dprime, required_radius(A, c_omega), cfg.tolerance, seed=cfg.seed)
        r = realize(A, phi, masked=cfg.realize_masked, c_omega=c_omega)
        rep.results["phi"] = {"radius": phi.radius, "eps": phi.eps, "depth": phi.sawtooth_depth,
                              "sampled_error": phi.sampled_error, "certified_points": phi.n_certified}
        write_text(out / "stack.txt", dump_stack(r.stack))
        rep.files["stack"] = str(out / "stack.txt")
    gaps, exceed = [], 0
    for mu, x, t in fx:
        norms = r.product_inputs(mu, x, t)
        if np.any(norms > r.radius):
            exceed += 1
            continue
        gaps.append(float(np.abs(r(mu, x, t) - reference(mu, x, t)).max()))
    gap = max(gaps) if gaps else float("inf")
    log(f"max gap {gap:.3e}, propagated bound {r.error_bound:.3e}, radius exceedances {exceed}")
    rep.results.update({"max_gap": gap, "error_bound": r.error_bound, "radius": r.radius, "c_omega": c_omega,
                        "c_gamma": r.c_gamma, "radius_exceedances": exceed,
                        "attention_layers": len(r.stack.attention_layers())})
    write_text(out / "algebra.txt", dump_algebra(A))
    rep.files["algebra"] = str(out / "algebra.txt")
    viol = size_contract_violations(r.stack, A.dim, A.dprime)
    rep.checks.append(Check("size", 0, "size contract", float(len(viol)), 0.0, details={"violations": viol}))
    rep.checks.append(Check("gap", 0, "realization gap minus propagated bound", gap - r.error_bound,
                            1e-10 if cfg.realize_exact else 0.0))


def _read_measure(key: str, path: str):
    try:
        return load_measure(read_text(path))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot read measure from '{path}': {exc}") from None


def _mode_ot(cfg: ExperimentConfig, rep: Report, out: Path, log):
    mu, nu = (_read_measure(key, path) for key, path in (("ot.mu", cfg.ot_mu), ("ot.nu", cfg.ot_nu)))
    if isinstance(mu, SpaceTimeMeasure) != isinstance(nu, SpaceTimeMeasure):
        raise ConfigError("ot.mu / ot.nu: both measures must be space-time or both spatial")
    if isinstance(mu, SpaceTimeMeasure):
        mu, nu = mu.lifted(), nu.lifted()
    rep.digests.update({"mu": digest(mu.points, mu.weights), "nu": digest(nu.points, nu.weights)})
    for p in (1, 2):
        value, plan = wasserstein(mu, nu, p, method=cfg.ot_method)
        e_mu, e_nu = plan.marginal_errors(mu, nu)
        dense = plan.dense()
        nnz = int(np.count_nonzero(dense > 1e-15))
        rep.results[f"W{p}"] = value
        rep.results[f"plan_W{p}"] = {"shape": list(dense.shape), "nonzeros": nnz, "marginal_errors": [e_mu, e_nu]}
        log(f"W_{p} = {value:.17g}  (plan {dense.shape[0]}x{dense.shape[1]}, {nnz} nonzeros, "
            f"marginal errors {e_mu:.1e} / {e_nu:.1e})")
        rep.checks.append(Check(f"marginals_W{p}", 0, f"W_{p} plan marginals", max(e_mu, e_nu), cfg.tolerance))


def _mode_probe(cfg: ExperimentConfig, rep: Report, out: Path, log):
    rng = np.random.default_rng([cfg.seed, 9])
    if cfg.probe_kind in ("all", "limit"):
        mu = lip_context(rng, cfg.fixtures_C, cfg.fixtures_sigma, cfg.fixtures_d, times=np.arange(65) / 64.0)
        rep.digests["limit_context"] = digest(mu.points, mu.times, mu.weights)
        r = masked_limit_probe(mu, [2.0 ** -k for k in range(1, 13)])
        rep.results["masked_limit"] = r
        for t, g, b in zip(r["times"], r["gaps"], r["bounds"]):
            log(f"t={t:.3e}: gap {g:.3e} (bound {b:.3e})")
        rep.checks.append(Check("limit", 0, "masked-measure gap at t=2^-12", r["gaps"][-1], 1e-8))
        rep.checks.append(Check("limit_bound", 0, "gaps within their bounds",
                                max(g - b for g, b in zip(r["gaps"], r["bounds"])), 1e-12))
    if cfg.probe_kind in ("all", "convergence"):
        limit = convergence_limit()
        table = {}
        for case in convergence_cases():
            seq = [(convergence_discretization(n), case.t_of_n(n)) for n in (16, 64, 256)]
            dist = convergence_probe(seq, limit, case.t_limit)
            table[case.name] = dist
            log(f"{case.name}: " + ", ".join(f"{v:.3e}" for v in dist))
            rep.checks.append(Check(f"conv{len(table)}", 0, f"W2 at n=256, {case.name}", dist[-1], cfg.tolerance))
        rep.results["convergence"] = table


_DRIVERS = {"verify": _mode_verify, "fit": _mode_fit, "realize": _mode_realize, "ot": _mode_ot,
            "probe": _mode_probe}


def run(cfg: ExperimentConfig, log=print) -> Report:
    """Execute the configured mode and write ``report.json`` into ``cfg.out``."""
    cfg.validate()
    out = Path(cfg.out)
    rep = Report(config=cfg.echo())
    t0 = time.perf_counter()
    _DRIVERS[cfg.mode](cfg, rep, out, log)
    rep.timing["seconds"] = time.perf_counter() - t0
    write_text(out / "report.json", dump_json(rep.to_dict()))
    rep.files["report"] = str(out / "report.json")
    return rep
