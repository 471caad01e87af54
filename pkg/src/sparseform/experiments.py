"""Seeded ensembles, theorem suites, conjecture hunts and report files.

Every sample ``i`` of a run draws from ``SeedSequence([seed, i])``, so a row
depends only on the config and its index; the process pool merely changes
the wall-clock time.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import stopping
from .characteristics import bumps, weights, young
from .dyadic import MAX_DEPTH, Grid, StepFn
from .exceptions import ConfigError, ParameterError, SparseformError
from .extremal import (
    DUAL,
    FORWARD,
    best_constant_N,
    lambda_norm,
    maximal_chain_constant,
    sawyer_ratios,
    testing_constant,
)
from .forms import ExponentConfig, WeightSetting
from .sparse import random_sparse_family

SCHEMA = "sparseform-report/1"
SUITES = ("T1_1", "T1_2", "T1_3", "T1_4", "BUMP_ENTROPY", "BUMP_JOINT")
CONJECTURES = ("C5_1", "SEPARATED_BUMP", "ONE_SUP")
GENERATORS = ("lognormal", "spike", "power", "constant")
STABILITY_GROWTH = 1.25
SLACK = 1e-6
CHAIN_SLACK = 1e-9
ENTROPY_DELTA = 1.01
BUMP_EPS = 0.1


# --- configuration ----------------------------------------------------------

def _exponent(x) -> float:
    if isinstance(x, str) and x.lower() in ("inf", "infinity", "∞"):
        return math.inf
    if x is None:
        return math.inf
    return float(x)


@dataclass
class ExperimentConfig:
    exponents: tuple = (1.0, math.inf, 2.0, 2.0)
    depth: int = 6
    depths: Optional[list] = None
    samples: int = 200
    seed: int = 0
    generators: tuple = ("lognormal", "spike", "power")
    weights_on: str = "dual"
    density: float = 0.6
    suite: str = "T1_1"
    conjecture: str = "ONE_SUP"
    tol: float = 1e-8
    restarts: int = 8
    workers: int = 1
    format: str = "csv"
    young_a: Optional[dict] = None
    young_b: Optional[dict] = None
    hunt_steps: int = 200
    hunt_step_size: float = 0.5
    hunt_threshold: float = 10.0
    hunt_restarts: int = 2

    KEYS = {
        "exponents", "depth", "depths", "samples", "seed", "weights", "family", "suite", "conjecture",
        "tol", "restarts", "workers", "format", "young", "hunt",
    }

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - cls.KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        if "exponents" in raw:
            e = raw["exponents"]
            if isinstance(e, dict):
                try:
                    e = [e["p0"], e["q0"], e["p"], e["q"]]
                except KeyError as exc:
                    raise ConfigError(f"exponents missing {exc}") from None
            if len(e) != 4:
                raise ConfigError("exponents must list p0, q0, p, q")
            kw["exponents"] = tuple(_exponent(x) for x in e)
        for key in ("depth", "samples", "seed", "restarts", "workers"):
            if key in raw:
                kw[key] = int(raw[key])
        if "depths" in raw:
            kw["depths"] = [int(d) for d in raw["depths"]]
        for key in ("suite", "conjecture", "format"):
            if key in raw:
                kw[key] = str(raw[key])
        if "tol" in raw:
            kw["tol"] = float(raw["tol"])
        w = raw.get("weights", {})
        if "generators" in w:
            kw["generators"] = tuple(w["generators"])
        if "on" in w:
            kw["weights_on"] = w["on"]
        if "density" in raw.get("family", {}):
            kw["density"] = float(raw["family"]["density"])
        yg = raw.get("young", {})
        kw["young_a"] = yg.get("A")
        kw["young_b"] = yg.get("B")
        h = raw.get("hunt", {})
        for key in ("steps", "step_size", "threshold", "restarts"):
            if key in h:
                kw[f"hunt_{key}"] = type(getattr(cls, f"hunt_{key}"))(h[key])
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @property
    def exponent_config(self) -> ExponentConfig:
        return ExponentConfig(*self.exponents)

    def validate(self) -> "ExperimentConfig":
        try:
            self.exponent_config
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None
        for d in [self.depth] + list(self.depths or []):
            if not 0 <= d <= MAX_DEPTH:
                raise ConfigError(f"depth must lie in [0, {MAX_DEPTH}], got {d}")
        if self.samples < 0 or self.restarts < 1 or self.workers < 1:
            raise ConfigError("samples >= 0, restarts >= 1 and workers >= 1 are required")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        bad = [g for g in self.generators if g not in GENERATORS]
        if bad or not self.generators:
            raise ConfigError(f"unknown weight generators {bad}; choose from {GENERATORS}")
        if self.weights_on not in ("dual", "primal"):
            raise ConfigError("weights.on must be 'dual' or 'primal'")
        if not 0 < self.density <= 1:
            raise ConfigError("family.density must lie in (0, 1]")
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {SUITES}")
        if self.conjecture not in CONJECTURES:
            raise ConfigError(f"unknown conjecture {self.conjecture!r}; choose from {CONJECTURES}")
        if self.format not in ("csv", "json", "both"):
            raise ConfigError("format must be csv, json or both")
        return self

    def as_dict(self) -> dict:
        d = asdict(self)
        d["exponents"] = [x if math.isfinite(x) else "inf" for x in self.exponents]
        return d


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return ExperimentConfig.from_dict(raw)


# --- generators -------------------------------------------------------------

def gen_weights(spec: dict, grid: Grid, seed: int = 0) -> StepFn:
    """Strictly positive step function from a generator spec.

    ``constant(c)``, ``power(a)`` with leaf ``k`` equal to ``((k+1/2) 2^{-L})^a``,
    ``lognormal(mu, s)`` with i.i.d. leaves and ``spike(base, height, position)``.
    """
    kind = spec.get("kind")
    n = grid.n_leaves
    if kind == "constant":
        vals = np.full(n, float(spec.get("c", 1.0)))
    elif kind == "power":
        vals = ((np.arange(n) + 0.5) / n) ** float(spec["a"])
    elif kind == "lognormal":
        rng = np.random.default_rng(seed)
        vals = np.exp(float(spec.get("mu", 0.0)) + float(spec.get("s", 1.0)) * rng.standard_normal(n))
    elif kind == "spike":
        vals = np.full(n, float(spec.get("base", 1.0)))
        pos = int(spec.get("position", 0))
        if not 0 <= pos < n:
            raise ParameterError(f"spike position {pos} outside [0, {n})")
        vals[pos] = float(spec["height"])
    else:
        raise ParameterError(f"unknown weight generator {kind!r}")
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise ParameterError(f"generator {spec} produced nonpositive values")
    return StepFn(grid, vals)


def random_spec(kind: str, rng: np.random.Generator, grid: Grid) -> dict:
    if kind == "lognormal":
        return {"kind": kind, "mu": 0.0, "s": float(rng.uniform(0.3, 2.0))}
    if kind == "spike":
        return {"kind": kind, "base": 1.0, "height": float(10 ** rng.uniform(-2.0, 3.0)),
                "position": int(rng.integers(grid.n_leaves))}
    if kind == "power":
        return {"kind": kind, "a": float(rng.uniform(-0.9, 2.0))}
    if kind == "constant":
        return {"kind": kind, "c": float(10 ** rng.uniform(-1.0, 1.0))}
    raise ParameterError(f"unknown weight generator {kind!r}")


@dataclass
class Sample:
    index: int
    setting: WeightSetting
    family: object
    spec_a: dict
    spec_b: dict


def draw_sample(config: ExperimentConfig, index: int, depth: Optional[int] = None,
                cfg: Optional[ExponentConfig] = None) -> Sample:
    """Sample ``index``: a generator pair crossed from the list, fresh parameters, a random family."""
    cfg = cfg or config.exponent_config
    grid = Grid(config.depth if depth is None else depth)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, index]))
    pairs = list(itertools.product(config.generators, repeat=2))
    ka, kb = pairs[index % len(pairs)]
    spec_a, spec_b = random_spec(ka, rng, grid), random_spec(kb, rng, grid)
    seeds = rng.integers(0, 2 ** 31, size=3)
    a = gen_weights(spec_a, grid, int(seeds[0]))
    b = gen_weights(spec_b, grid, int(seeds[1]))
    if config.weights_on == "dual":
        setting = WeightSetting.from_duals(a, b, cfg)
    else:
        setting = WeightSetting(a, b, cfg)
    family = random_sparse_family(grid, None, 0.5, config.density, int(seeds[2]))
    return Sample(index, setting, family, spec_a, spec_b)


# --- suites -----------------------------------------------------------------

def _ratio(a: float, b: float) -> float:
    return a / b if b else math.inf


def _norm_fields(config: ExperimentConfig, s: Sample) -> dict:
    lam = lambda_norm(s.setting, s.family, tol=config.tol, restarts=config.restarts, seed=s.index)
    lam_d = lambda_norm(s.setting, s.family, tol=config.tol, restarts=config.restarts, seed=s.index, dual=True)
    N = best_constant_N(s.setting, s.family, tol=config.tol, restarts=config.restarts, seed=s.index, reduced=lam)
    return {"lam": lam, "lam_dual": lam_d, "N": N}


def _base_row(s: Sample) -> dict:
    return {"sample": s.index, "depth": s.setting.grid.depth, "family_size": len(s.family),
            "gen_a": s.spec_a["kind"], "gen_b": s.spec_b["kind"]}


def row_T1_1(config: ExperimentConfig, s: Sample) -> dict:
    cfg = s.setting.cfg
    tol = config.tol
    nf = _norm_fields(config, s)
    lam, lam_d, N = nf["lam"].value, nf["lam_dual"].value, nf["N"].value
    t_inf = float(sawyer_ratios(s.setting, s.family, FORWARD).max())
    t = testing_constant(s.setting, s.family, FORWARD).value
    t_d = testing_constant(s.setting, s.family, DUAL).value
    cm = maximal_chain_constant(cfg)
    row = _base_row(s)
    row.update({
        "s": cfg.s, "lambda_norm": lam, "lambda_norm_dual": lam_d, "N": N,
        "testing": t, "testing_dual": t_d, "testing_inf": t_inf, "C_M": cm,
        "ratio": _ratio(t + t_d, lam),
        "check_testing_le_lambda": t_inf <= lam * (1 + 2 * tol),
        "check_lambda_le_N": lam <= N * (1 + 2 * tol),
        "check_N_le_CM_lambda": N <= cm * lam * (1 + 1e-6),
        "check_duality": abs(lam - lam_d) <= 3 * tol * lam,
        "converged": nf["lam"].converged and nf["lam_dual"].converged and nf["N"].converged,
    })
    return row


def _improvement(v: StepFn, cfg: ExponentConfig) -> dict:
    """Inequalities for the coupled pair ``u = v^{1-r'}``, exponential A_inf throughout."""
    rc = cfg.r_conj
    u = v ** (1.0 - rc)
    per_ar = weights.joint_ar_cubes(v, u, cfg.r)
    eu = weights.ainf_exp_cubes(u)
    ev = weights.ainf_exp_cubes(v)
    # per cube: A_inf^exp(u,Q) <= A_r(Q)^{r'-1}, A_inf^exp(v,Q) <= A_r(Q)
    chain_u = float(np.max(eu - per_ar ** (rc - 1.0) * (1 + CHAIN_SLACK)))
    chain_v = float(np.max(ev - per_ar * (1 + CHAIN_SLACK)))
    ar = float(per_ar.max())
    lhs = weights.two_weight_ainf_rhs(v, u, cfg, weights.EXP)
    rhs = 2.0 * ar ** max(1.0 / cfg.q0_conj, 1.0 / (cfg.p0 * (cfg.r - 1.0)))
    return {"improve_lhs": lhs, "improve_rhs": rhs,
            "check_improvement": lhs <= rhs * (1 + CHAIN_SLACK) and chain_u <= 0 and chain_v <= 0}


def row_T1_2(config: ExperimentConfig, s: Sample) -> dict:
    cfg = s.setting.cfg
    u, v = s.setting.u, s.setting.v
    N = best_constant_N(s.setting, s.family, tol=config.tol, restarts=config.restarts, seed=s.index)
    rhs = weights.two_weight_ainf_rhs(v, u, cfg, weights.FW)
    row = _base_row(s)
    row.update({"N": N.value, "ar": weights.joint_ar(v, u, cfg.r),
                "ainf_u": weights.fujii_wilson_global(u), "ainf_v": weights.fujii_wilson_global(v),
                "rhs": rhs, "ratio": _ratio(N.value, rhs)})
    row.update(_improvement(v, cfg))
    row["converged"] = N.converged
    return row


def entropy_gauges(cfg: ExponentConfig) -> dict:
    """Gauges for the one-supremum suites.

    FW flavor: ``φ = ψ = log(e+t)^{1.01}``; EXP flavor: ``Φ = log(e+t)^{1.01/p}``
    and ``Ψ = log(e+t)^{1.01/p'}``, so that ``∫ dt/(tΦ^p)`` and ``∫ dt/(tΨ^{p'})`` converge.
    """
    return {
        "fw": young.log_gauge(ENTROPY_DELTA, "fw"),
        "exp_left": young.log_gauge(ENTROPY_DELTA / cfg.p, "exp"),
        "exp_right": young.log_gauge(ENTROPY_DELTA / cfg.p_conj, "exp"),
    }


def row_T1_3(config: ExperimentConfig, s: Sample) -> dict:
    cfg = s.setting.cfg
    u, v = s.setting.u, s.setting.v
    g = entropy_gauges(cfg)["fw"]
    N = best_constant_N(s.setting, s.family, tol=config.tol, restarts=config.restarts, seed=s.index)
    left = weights.entropy_constant(v, u, cfg, g, weights.FW, weights.LEFT)
    right = weights.entropy_constant(v, u, cfg, g, weights.FW, weights.RIGHT)
    integral = g.integral(1.0)
    rhs = integral * left + integral * right
    bd = stopping.band_sum_check(s.setting, s.family, g, weights.FW, DUAL)
    bf = stopping.band_sum_check(s.setting, s.family, g, weights.FW, FORWARD)
    row = _base_row(s)
    row.update({"N": N.value, "entropy_left": left, "entropy_right": right, "gauge_integral": integral,
                "rhs": rhs, "ratio": _ratio(N.value, rhs),
                "band_lhs_dual": bd.lhs, "band_rhs_dual": bd.rhs,
                "band_lhs_fwd": bf.lhs, "band_rhs_fwd": bf.rhs,
                "check_band_sum": bd.lhs <= bd.rhs * (1 + SLACK) and bf.lhs <= bf.rhs * (1 + SLACK),
                "converged": N.converged})
    return row


def row_T1_4(config: ExperimentConfig, s: Sample) -> dict:
    cfg = s.setting.cfg
    u, v = s.setting.u, s.setting.v
    gs = entropy_gauges(cfg)
    gl, gr = gs["exp_left"], gs["exp_right"]
    N = best_constant_N(s.setting, s.family, tol=config.tol, restarts=config.restarts, seed=s.index)
    left = weights.entropy_constant(v, u, cfg, gl, weights.EXP, weights.LEFT)
    right = weights.entropy_constant(v, u, cfg, gr, weights.EXP, weights.RIGHT)
    il = gl.integral(cfg.p) ** (1.0 / cfg.p)
    ir = gr.integral(cfg.p_conj) ** (1.0 / cfg.p_conj)
    rhs = left * il + right * ir
    bd = stopping.band_sum_check(s.setting, s.family, gl, weights.EXP, DUAL, k=cfg.p)
    bf = stopping.band_sum_check(s.setting, s.family, gr, weights.EXP, FORWARD, k=cfg.p_conj)
    row = _base_row(s)
    row.update({"N": N.value, "entropy_left": left, "entropy_right": right,
                "gauge_integral_left": il, "gauge_integral_right": ir,
                "rhs": rhs, "ratio": _ratio(N.value, rhs),
                "band_lhs_dual": bd.lhs, "band_rhs_dual": bd.rhs,
                "band_lhs_fwd": bf.lhs, "band_rhs_fwd": bf.rhs,
                "check_band_sum": bd.lhs <= bd.rhs * (1 + SLACK) and bf.lhs <= bf.rhs * (1 + SLACK),
                "converged": N.converged})
    return row


def bump_functions(config: ExperimentConfig, cfg: ExponentConfig) -> tuple:
    """``A = t^{p(1-ε)}`` on the ``u`` side and ``B = t^{p'(1-ε)}`` on the ``v`` side unless configured."""
    A = young.from_spec(config.young_a) if config.young_a else young.power(cfg.p * (1 - BUMP_EPS))
    B = young.from_spec(config.young_b) if config.young_b else young.power(cfg.p_conj * (1 - BUMP_EPS))
    for fn, e, name in ((A, cfg.p, "A"), (B, cfg.p_conj, "B")):
        _, diverges = young.bp_integral(fn, e)
        if diverges:
            raise ConfigError(f"Young function {name} = {fn.label} fails the B_{e:g} integrability test")
    return A, B


def _chain_slack(s: Sample, cfg: ExponentConfig, A, B) -> float:
    """Most negative per-cube slack of bump factor <= min(exp entropy factor, dual bump factor)."""
    worst = math.inf
    for w, fn, e in ((s.setting.u, A, 1.0 / cfg.p), (s.setting.v, B, 1.0 / cfg.p_conj)):
        sl = bumps.jensen_holder_slack(w, cfg, fn, e)
        scale = np.maximum(sl["bump"], 1.0)
        worst = min(worst, float(np.min(sl["jensen"] / scale)), float(np.min(sl["holder"] / scale)))
    return worst


def row_BUMP_ENTROPY(config: ExperimentConfig, s: Sample) -> dict:
    cfg = s.setting.cfg
    u, v = s.setting.u, s.setting.v
    A, B = bump_functions(config, cfg)
    psi = young.log_gauge(ENTROPY_DELTA / cfg.p_conj, "exp")
    phi = young.log_gauge(ENTROPY_DELTA / cfg.p, "exp")
    N = best_constant_N(s.setting, s.family, tol=config.tol, restarts=config.restarts, seed=s.index)
    left = bumps.bump_constant(u, v, cfg, A, bumps.ENTROPY, bumps.LEFT, gauge=psi)
    right = bumps.bump_constant(u, v, cfg, B, bumps.ENTROPY, bumps.RIGHT, gauge=phi)
    ipsi = psi.integral(cfg.p_conj) ** (1.0 / cfg.p_conj)
    iphi = phi.integral(cfg.p) ** (1.0 / cfg.p)
    rhs = left * ipsi + right * iphi
    slack = _chain_slack(s, cfg, A, B)
    row = _base_row(s)
    row.update({"N": N.value, "bump_left": left, "bump_right": right, "gauge_integral_psi": ipsi,
                "gauge_integral_phi": iphi, "rhs": rhs, "ratio": _ratio(N.value, rhs), "chain_slack": slack,
                "check_bump_chain": slack >= -CHAIN_SLACK, "converged": N.converged})
    return row


def row_BUMP_JOINT(config: ExperimentConfig, s: Sample) -> dict:
    cfg = s.setting.cfg
    u, v = s.setting.u, s.setting.v
    A, B = bump_functions(config, cfg)
    N = best_constant_N(s.setting, s.family, tol=config.tol, restarts=config.restarts, seed=s.index)
    rhs = bumps.bump_constant(u, v, cfg, A, bumps.JOINT, B=B)
    slack = _chain_slack(s, cfg, A, B)
    row = _base_row(s)
    row.update({"N": N.value, "rhs": rhs, "ratio": _ratio(N.value, rhs), "chain_slack": slack,
                "check_bump_chain": slack >= -CHAIN_SLACK, "converged": N.converged})
    return row


ROW_FUNCTIONS = {
    "T1_1": row_T1_1, "T1_2": row_T1_2, "T1_3": row_T1_3, "T1_4": row_T1_4,
    "BUMP_ENTROPY": row_BUMP_ENTROPY, "BUMP_JOINT": row_BUMP_JOINT,
}


def _require_diagonal(config: ExperimentConfig, what: str) -> None:
    cfg = config.exponent_config
    if cfg.p != cfg.q:
        raise ConfigError(f"{what} needs p = q, got p={cfg.p}, q={cfg.q}")


def _run_sample(job):
    kind, config, index, depth = job
    s = draw_sample(config, index, depth)
    if kind in ROW_FUNCTIONS:
        return ROW_FUNCTIONS[kind](config, s)
    return SAMPLE_FUNCTIONS[kind](config, s)


def map_samples(kind: str, config: ExperimentConfig, depth: Optional[int] = None) -> list:
    """Rows for every sample in index order; a process pool is used when ``workers > 1``."""
    jobs = [(kind, config, i, depth) for i in range(config.samples)]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_run_sample, jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))
    return [_run_sample(j) for j in jobs]


@dataclass
class Report:
    kind: str
    config: ExperimentConfig
    rows: list
    summary: dict = field(default_factory=dict)

    @property
    def violations(self) -> int:
        return int(self.summary.get("violations", 0))


def _window(ratios: list, two_sided: bool) -> float:
    if not ratios:
        return math.nan
    if two_sided:
        return max(max(ratios), 1.0 / min(ratios))
    return max(ratios)


def summarize(kind: str, rows: list) -> dict:
    """Violation count over converged rows and the empirical constant of the ensemble."""
    used = [r for r in rows if r.get("converged", True)]
    checks = [k for k in (rows[0] if rows else {}) if k.startswith("check_")]
    violations = sum(1 for r in used for k in checks if not r[k])
    ratios = [r["ratio"] for r in used if "ratio" in r]
    out = {"samples": len(rows), "flagged": len(rows) - len(used), "violations": violations}
    if ratios:
        out["C_star"] = _window(ratios, kind == "T1_1")
    return out


def verify_theorem(which: str, config: ExperimentConfig) -> Report:
    """Run a theorem suite on the ensemble, once per requested depth.

    With ``depths`` set, the summary also carries the per-depth constants and
    the stability verdict: no depth may exceed the first by more than 25%.
    """
    if which not in SUITES:
        raise ConfigError(f"unknown suite {which!r}")
    if which != "T1_1":
        _require_diagonal(config, which)
    depths = config.depths or [config.depth]
    rows, per_depth = [], {}
    for d in depths:
        r = map_samples(which, config, d)
        per_depth[d] = summarize(which, r)
        rows.extend(r)
    summary = summarize(which, rows)
    if len(depths) > 1:
        base = per_depth[depths[0]]["C_star"]
        summary["C_star_by_depth"] = {str(d): per_depth[d]["C_star"] for d in depths}
        summary["stable"] = all(per_depth[d]["C_star"] <= STABILITY_GROWTH * base for d in depths[1:])
        if not summary["stable"]:
            summary["violations"] += 1
    return Report(which, config, rows, summary)


# --- plain per-sample reports ----------------------------------------------

def sample_characteristics(config: ExperimentConfig, s: Sample) -> dict:
    cfg = s.setting.cfg
    u, v = s.setting.u, s.setting.v
    row = _base_row(s)
    row.update({
        "ainf_fw_u": weights.fujii_wilson_global(u), "ainf_fw_v": weights.fujii_wilson_global(v),
        "ainf_exp_u": weights.ainf_exp_global(u), "ainf_exp_v": weights.ainf_exp_global(v),
        "joint_ar": weights.joint_ar(v, u, cfg.r),
        "two_weight_rhs": weights.two_weight_ainf_rhs(v, u, cfg, weights.FW),
        "one_sup_rhs": weights.one_supremum_rhs(v, u, cfg, weights.FW),
    })
    return row


def sample_norm(config: ExperimentConfig, s: Sample) -> dict:
    nf = _norm_fields(config, s)
    row = _base_row(s)
    row.update({"lambda_norm": nf["lam"].value, "lambda_norm_dual": nf["lam_dual"].value, "N": nf["N"].value,
                "N_spread": nf["N"].gap_estimate,
                "converged": nf["lam"].converged and nf["lam_dual"].converged and nf["N"].converged})
    return row


def sample_testing(config: ExperimentConfig, s: Sample) -> dict:
    t = testing_constant(s.setting, s.family, FORWARD)
    t_d = testing_constant(s.setting, s.family, DUAL)
    row = _base_row(s)
    row.update({"s": t.s, "testing": t.value, "testing_dual": t_d.value, "mode": t.mode,
                "witness_size": len(t.witness_family), "witness_size_dual": len(t_d.witness_family)})
    return row


SAMPLE_FUNCTIONS = {"characteristics": sample_characteristics, "norm": sample_norm, "testing": sample_testing}


def run_samples(kind: str, config: ExperimentConfig) -> Report:
    rows = map_samples(kind, config)
    return Report(kind, config, rows, summarize(kind, rows))


# --- conjecture hunting -----------------------------------------------------

def conjecture_rhs(which: str, setting: WeightSetting, config: ExperimentConfig) -> float:
    cfg = setting.cfg
    u, v = setting.u, setting.v
    if which == "ONE_SUP":
        return weights.one_supremum_rhs(v, u, cfg, weights.FW)
    A, B = bump_functions(config, cfg)
    if which == "C5_1":
        return (bumps.bump_constant(u, v, cfg, A, bumps.L, bumps.LEFT)
                + bumps.bump_constant(u, v, cfg, B, bumps.L, bumps.RIGHT))
    if which == "SEPARATED_BUMP":
        return (bumps.bump_constant(u, v, cfg, A, bumps.SEP, bumps.LEFT)
                + bumps.bump_constant(u, v, cfg, B, bumps.SEP, bumps.RIGHT))
    raise ConfigError(f"unknown conjecture {which!r}")


def hunt(which: str, config: ExperimentConfig) -> Report:
    """Randomised hill climbing on the log leaf values of ``(w, σ)``.

    The objective is ``N_lower / RHS``.  A proposal perturbs a random subset
    of leaves; it is kept only when the objective strictly increases, so the
    best-so-far sequence is monotone.  Rows record every step; ratios above
    ``hunt_threshold`` are flagged for inspection and nothing more.
    """
    if which not in CONJECTURES:
        raise ConfigError(f"unknown conjecture {which!r}")
    _require_diagonal(config, which)
    cfg = config.exponent_config
    start = draw_sample(config, 0)
    grid = start.setting.grid
    family = start.family
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1 << 20]))
    n = grid.n_leaves

    def objective(lw, ls):
        st = WeightSetting(StepFn(grid, np.exp(lw)), StepFn(grid, np.exp(ls)), cfg)
        N = best_constant_N(st, family, tol=config.tol, restarts=config.hunt_restarts, seed=0)
        rhs = conjecture_rhs(which, st, config)
        return N.value, rhs

    lw, ls = np.log(start.setting.w.values), np.log(start.setting.sigma.values)
    N, rhs = objective(lw, ls)
    best = N / rhs
    rows = [{"step": 0, "N": N, "rhs": rhs, "ratio": best, "accepted": True, "best_ratio": best,
             "flagged": best > config.hunt_threshold}]
    for step in range(1, config.hunt_steps + 1):
        k = int(rng.integers(1, max(2, n // 4) + 1))
        idx = rng.choice(2 * n, size=k, replace=False)
        delta = np.zeros(2 * n)
        delta[idx] = config.hunt_step_size * rng.standard_normal(k)
        cw, cs = np.clip(lw + delta[:n], -30, 30), np.clip(ls + delta[n:], -30, 30)
        try:
            N, rhs = objective(cw, cs)
        except SparseformError:
            N, rhs = math.nan, math.nan
        ratio = N / rhs if rhs and math.isfinite(rhs) else math.nan
        accepted = bool(ratio > best)
        if accepted:
            lw, ls, best = cw, cs, ratio
        rows.append({"step": step, "N": N, "rhs": rhs, "ratio": ratio, "accepted": accepted,
                     "best_ratio": best, "flagged": best > config.hunt_threshold})
    summary = {
        "conjecture": which, "best_ratio": best, "flagged": best > config.hunt_threshold,
        "best_w": [float(x) for x in np.exp(lw)], "best_sigma": [float(x) for x in np.exp(ls)],
        "family": [[c.level, c.index] for c in family.cubes], "violations": 0,
    }
    return Report(which, config, rows, summary)


# --- reports ----------------------------------------------------------------

def format_value(x) -> str:
    """CSV cell: floats in shortest round-trip form, booleans as true/false."""
    if isinstance(x, bool) or isinstance(x, np.bool_):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def emit_report(rows: list, fmt: str, path, config: Optional[dict] = None, summary: Optional[dict] = None,
                columns: Optional[list] = None) -> Path:
    """Write ``rows`` as CSV (fixed column order) or as a schema-versioned JSON envelope."""
    path = Path(path)
    try:
        if fmt == "csv":
            cols = columns or (list(rows[0]) if rows else [])
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(cols)
            for r in rows:
                writer.writerow([format_value(r.get(c, "")) for c in cols])
            path.write_text(buf.getvalue())
        elif fmt == "json":
            doc = {"schema": SCHEMA, "config": _jsonable(config or {}), "rows": _jsonable(rows)}
            if summary is not None:
                doc["summary"] = _jsonable(summary)
            path.write_text(json.dumps(doc, indent=1) + "\n")
        else:
            raise ConfigError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc}") from exc
    return path


def read_json_report(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != SCHEMA:
        raise ConfigError(f"{path}: unexpected schema {doc.get('schema')!r}")
    return doc


def write_report(report: Report, out_dir, stem: str) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmts = ("csv", "json") if report.config.format == "both" else (report.config.format,)
    paths = []
    for fmt in fmts:
        paths.append(emit_report(report.rows, fmt, out / f"{stem}.{fmt}", report.config.as_dict(), report.summary))
    return paths


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))
