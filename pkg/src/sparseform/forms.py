"""Exponent bookkeeping, the bilinear sparse form and its linearised companion.

Conventions: ``math.inf`` is a first-class exponent and ``1/inf == 0``; the
conjugate of 1 is ``inf`` and vice versa.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .dyadic import Cube, Grid, StepFn
from .exceptions import DomainError, ParameterError, StructuralError
from .sparse import SparseFamily

inf = math.inf


def conj(t: float) -> float:
    """Hölder conjugate ``t' = t/(t-1)``, with ``1' = inf`` and ``inf' = 1``."""
    if t == inf:
        return 1.0
    if t == 1:
        return inf
    return t / (t - 1.0)


def recip(t: float) -> float:
    return 0.0 if t == inf else 1.0 / t


@dataclass(frozen=True)
class ExponentConfig:
    p0: float
    q0: float
    p: float
    q: float
    p_conj: float = field(init=False)
    q_conj: float = field(init=False)
    p0_conj: float = field(init=False)
    q0_conj: float = field(init=False)
    r: float = field(init=False)
    r_conj: float = field(init=False)
    s: float = field(init=False)
    rho: float = field(init=False)

    def __post_init__(self):
        p0, q0, p, q = (float(x) for x in (self.p0, self.q0, self.p, self.q))
        for name, val in (("p0", p0), ("q0", q0), ("p", p), ("q", q)):
            if math.isnan(val):
                raise ParameterError(f"{name} is NaN")
        if not p0 >= 1:
            raise ParameterError(f"constraint 1 <= p0 violated (p0={p0})")
        if not (p < inf and q < inf):
            raise ParameterError("constraint p, q < inf violated")
        if not p0 < min(p, q):
            raise ParameterError(f"constraint p0 < min(p, q) violated (p0={p0}, p={p}, q={q})")
        if not max(p, q) < q0:
            raise ParameterError(f"constraint max(p, q) < q0 violated (p={p}, q={q}, q0={q0})")
        set_ = lambda k, v: object.__setattr__(self, k, v)
        for k, v in (("p0", p0), ("q0", q0), ("p", p), ("q", q)):
            set_(k, v)
        set_("p_conj", conj(p))
        set_("q_conj", conj(q))
        set_("p0_conj", conj(p0))
        set_("q0_conj", conj(q0))
        ratio_conj = 1.0 if q0 == inf else conj(q0 / p)
        r = ratio_conj * (p / p0 - 1.0) + 1.0
        set_("r", r)
        set_("r_conj", conj(r))
        inv_s = max(1.0 / q - 1.0 / p, 0.0)
        set_("s", inf if inv_s == 0 else 1.0 / inv_s)
        set_("rho", 1.0 + p0 / self.q0_conj)

    @property
    def diagonal(self) -> bool:
        return self.p == self.q

    def as_dict(self) -> dict:
        return {"p0": self.p0, "q0": self.q0, "p": self.p, "q": self.q}


def derive_config(p0: float, q0: float, p: float, q: float) -> ExponentConfig:
    return ExponentConfig(p0, q0, p, q)


def derive_duals(w: StepFn, sigma: StepFn, cfg: ExponentConfig) -> tuple[StepFn, StepFn]:
    """``u = w^{p0/(p0-p)}`` and ``v = σ^{q0'/(q0'-q')}``."""
    w.require_weight("w")
    sigma.require_weight("sigma")
    u = w ** (cfg.p0 / (cfg.p0 - cfg.p))
    v = sigma ** (cfg.q0_conj / (cfg.q0_conj - cfg.q_conj))
    return u, v


def primal_from_duals(u: StepFn, v: StepFn, cfg: ExponentConfig) -> tuple[StepFn, StepFn]:
    """Inverse of :func:`derive_duals`."""
    u.require_weight("u")
    v.require_weight("v")
    w = u ** ((cfg.p0 - cfg.p) / cfg.p0)
    sigma = v ** ((cfg.q0_conj - cfg.q_conj) / cfg.q0_conj)
    return w, sigma


LEBESGUE = "lebesgue"


@dataclass(frozen=True, eq=False)
class WeightSetting:
    """Primal weights, their duals and the cube coefficients ``λ_Q``.

    ``lam`` is either ``"lebesgue"`` (``λ_Q = |Q|``) or a mapping from cube to value.
    """

    w: StepFn
    sigma: StepFn
    cfg: ExponentConfig
    lam: Union[str, dict] = LEBESGUE
    u: StepFn = field(init=False, repr=False)
    v: StepFn = field(init=False, repr=False)

    def __post_init__(self):
        if self.w.grid != self.sigma.grid:
            raise StructuralError("w and sigma live on different grids")
        u, v = derive_duals(self.w, self.sigma, self.cfg)
        if not (u.is_positive() and v.is_positive()):
            raise DomainError("derived weights u, v must be strictly positive and finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def from_duals(cls, u: StepFn, v: StepFn, cfg: ExponentConfig, lam=LEBESGUE) -> "WeightSetting":
        w, sigma = primal_from_duals(u, v, cfg)
        return cls(w, sigma, cfg, lam)

    @property
    def grid(self) -> Grid:
        return self.w.grid

    def lam_of(self, cube: Cube) -> float:
        if isinstance(self.lam, str):
            return cube.length
        return float(self.lam[cube])

    def lam_vector(self, family: SparseFamily) -> np.ndarray:
        return np.array([self.lam_of(c) for c in family.cubes])

    def with_config(self, cfg: ExponentConfig) -> "WeightSetting":
        return WeightSetting(self.w, self.sigma, cfg, self.lam)


def _cube_avgs(f: StepFn, cubes: Sequence[Cube]) -> np.ndarray:
    pyr = f.pyramid
    return np.array([pyr[c.level][c.index] for c in cubes])


def _power_mean(values: np.ndarray, P: np.ndarray, exponent: float) -> np.ndarray:
    """``⟨|x|^e⟩_Q^{1/e}`` for every row of the averaging matrix ``P``."""
    a = np.abs(values)
    if exponent == 1:
        return P @ a
    return (P @ a ** exponent) ** (1.0 / exponent)


def averaging_matrix(family: SparseFamily) -> np.ndarray:
    """Rows average over the leaves of each member cube."""
    P = family.membership()
    return P / P.sum(axis=1, keepdims=True)


def tau(Q: Cube, setting: WeightSetting) -> float:
    """``τ_Q = ⟨u⟩^{-1/p0'} ⟨v⟩^{-1/q0} λ_Q/|Q|``."""
    cfg = setting.cfg
    setting.grid.check(Q)
    au = setting.u.pyramid[Q.level][Q.index]
    av = setting.v.pyramid[Q.level][Q.index]
    return au ** -recip(cfg.p0_conj) * av ** -recip(cfg.q0) * setting.lam_of(Q) / Q.length


def tau_vector(setting: WeightSetting, family: SparseFamily) -> np.ndarray:
    cfg = setting.cfg
    au = _cube_avgs(setting.u, family.cubes)
    av = _cube_avgs(setting.v, family.cubes)
    lengths = np.array([c.length for c in family.cubes])
    return au ** -recip(cfg.p0_conj) * av ** -recip(cfg.q0) * setting.lam_vector(family) / lengths


def bform(f: StepFn, g: StepFn, family: SparseFamily, setting: WeightSetting) -> float:
    """``Σ_Q ⟨|f|^{p0}⟩^{1/p0} ⟨|g|^{q0'}⟩^{1/q0'} λ_Q``."""
    family.require_verified()
    cfg = setting.cfg
    P = averaging_matrix(family)
    F = _power_mean(f.values, P, cfg.p0)
    G = _power_mean(g.values, P, cfg.q0_conj)
    return float(np.sum(F * G * setting.lam_vector(family)))


def reduced_coefficients(setting: WeightSetting, family: SparseFamily) -> np.ndarray:
    """``λ_Q ⟨u⟩^{1/p0} ⟨v⟩^{1/q0'}`` per member cube."""
    cfg = setting.cfg
    au = _cube_avgs(setting.u, family.cubes)
    av = _cube_avgs(setting.v, family.cubes)
    return setting.lam_vector(family) * au ** (1.0 / cfg.p0) * av ** (1.0 / cfg.q0_conj)


def reduced_form(f: StepFn, g: StepFn, family: SparseFamily, setting: WeightSetting) -> float:
    """``Σ_Q ⟨f⟩_Q^u ⟨g⟩_Q^v λ_Q ⟨u⟩_Q^{1/p0} ⟨v⟩_Q^{1/q0'}``."""
    family.require_verified()
    P = averaging_matrix(family)
    u, v = setting.u.values, setting.v.values
    fu = (P @ (f.values * u)) / (P @ u)
    gv = (P @ (g.values * v)) / (P @ v)
    return float(np.sum(fu * gv * reduced_coefficients(setting, family)))


def sparse_operator(h: StepFn, family: SparseFamily, setting: WeightSetting,
                    restrict_to: Optional[Cube] = None) -> StepFn:
    """``Σ τ_Q ⟨h⟩_Q 1_Q`` over members, optionally only those inside ``restrict_to``.

    ``h`` is the already-multiplied input, e.g. ``f·u`` for ``T_τ(fu)``.
    """
    family.require_verified()
    if restrict_to is not None:
        setting.grid.check(restrict_to)
    taus = tau_vector(setting, family)
    depth = setting.grid.depth
    out = np.zeros(setting.grid.n_leaves)
    pyr = h.pyramid
    for t, c in zip(taus, family.cubes):
        if restrict_to is not None and not restrict_to.contains(c):
            continue
        out[c.leaf_slice(depth)] += t * pyr[c.level][c.index]
    return StepFn(setting.grid, out)


def weighted_maximal(f: StepFn, u: StepFn, family: SparseFamily, pbar: float) -> StepFn:
    """``sup_{Q ∋ x, Q ∈ S} (⟨|f|^p̄⟩_Q^u)^{1/p̄}``; zero off the union of the family."""
    if pbar < 1:
        raise ParameterError(f"maximal exponent must be >= 1, got {pbar}")
    depth = f.grid.depth
    fp = np.abs(f.values) ** pbar
    num = StepFn(f.grid, fp * u.values).pyramid
    den = u.pyramid
    out = np.zeros(f.grid.n_leaves)
    for c in family.cubes:
        val = (num[c.level][c.index] / den[c.level][c.index]) ** (1.0 / pbar)
        sl = c.leaf_slice(depth)
        np.maximum(out[sl], val, out=out[sl])
    return StepFn(f.grid, out)


def lp_norm(f: StepFn, p: float, w: Optional[StepFn] = None) -> float:
    """``‖f‖_{L^p(w)}`` on [0, 1)."""
    vals = np.abs(f.values) ** p
    if w is not None:
        vals = vals * w.values
    return float(vals.mean() ** (1.0 / p))


@dataclass
class ExponentDiagnostics:
    rho: float
    case: str
    alpha: float
    alpha_tilde: float
    slacks: dict
    identity_residual: float
    passed: bool


def theorem12_exponents(cfg: ExponentConfig) -> ExponentDiagnostics:
    """Auxiliary exponents of the mixed A_p–A_∞ argument and the inequalities they must satisfy.

    For ``p >= ρ`` the exponent is ``α = min(p-p0, 1)/(p0(r-1))``, otherwise
    ``α̃ = (1/q0' - 1/p')p``.  Each branch must keep
    ``1/p0 - (r-1)a >= 0``, ``1/q0' - a >= 0`` and their sum ``< 1``.
    """
    if not cfg.diagonal:
        raise ParameterError("exponent diagnostics require p == q")
    p, p0, r = cfg.p, cfg.p0, cfg.r
    inv_q0c = 1.0 / cfg.q0_conj
    alpha = min(p - p0, 1.0) / (p0 * (r - 1.0))
    alpha_t = (inv_q0c - 1.0 / cfg.p_conj) * p
    case = "alpha" if p >= cfg.rho else "alpha_tilde"
    a = alpha if case == "alpha" else alpha_t
    first = 1.0 / p0 - (r - 1.0) * a
    second = inv_q0c - a
    total = first + second
    slack = 1e-12
    slacks = {"u_exponent": first, "v_exponent": second, "sum_below_one": 1.0 - total}
    passed = first >= -slack and second >= -slack and total < 1.0
    identity = (1.0 / p0 - alpha_t * (r - 1.0) + inv_q0c - alpha_t) - (1.0 - (p - 1.0) * (1.0 / p0 - recip(cfg.q0)))
    return ExponentDiagnostics(cfg.rho, case, alpha, alpha_t, slacks, identity, passed)
