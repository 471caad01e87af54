"""Muckenhoupt-type characteristics of weights on the dyadic grid.

Every ``*_cubes`` helper returns one value per dyadic cube in
``Grid.cubes()`` order (coarse to fine, left to right); the global
characteristics are maxima of those arrays.
"""
from __future__ import annotations

import numpy as np

from ..dyadic import Cube, StepFn, dyadic_maximal, maximal_integrals
from ..exceptions import DegenerateWeightError, DomainError, ParameterError
from ..forms import ExponentConfig, recip
from .young import EntropyGauge

FW = "fw"
EXP = "exp"
LEFT = "left"
RIGHT = "right"


def _flat(levels) -> np.ndarray:
    return np.concatenate([np.asarray(x, dtype=float) for x in levels])


def cube_list(grid) -> list[Cube]:
    return list(grid.cubes())


def cube_position(cube: Cube) -> int:
    return (1 << cube.level) - 1 + cube.index


def averages_cubes(v: StepFn) -> np.ndarray:
    return _flat(v.pyramid)


def _positive(v: StepFn, name: str = "weight") -> StepFn:
    if not np.all(np.isfinite(v.values)) or np.any(v.values <= 0):
        raise DomainError(f"{name} must be strictly positive and finite")
    return v


def fujii_wilson_cubes(v: StepFn) -> np.ndarray:
    _positive(v)
    sizes = _flat([np.full(1 << lvl, 2.0 ** -lvl) for lvl in range(v.grid.depth + 1)])
    return _flat(maximal_integrals(v)) / (averages_cubes(v) * sizes)


def fujii_wilson_local(v: StepFn, Q: Cube) -> float:
    """``(1/v(Q)) ∫_Q M(v 1_Q)`` with the dyadic maximal operator localised to ``Q``."""
    v.grid.check(Q)
    if np.any(v.values < 0):
        raise DomainError("weight must be nonnegative")
    vq = v.pyramid[Q.level][Q.index] * Q.length
    if vq <= 0:
        raise DegenerateWeightError(f"weight has zero mass on {Q}")
    m = dyadic_maximal(v, Q)
    return float(m.values.mean() / vq)


def fujii_wilson_global(v: StepFn) -> float:
    return float(fujii_wilson_cubes(v).max())


def ainf_exp_cubes(v: StepFn) -> np.ndarray:
    _positive(v)
    logs = StepFn(v.grid, np.log(v.values))
    return averages_cubes(v) * np.exp(-averages_cubes(logs))


def ainf_exp_local(v: StepFn, Q: Cube) -> float:
    """``⟨v⟩_Q exp(-⟨log v⟩_Q)``."""
    v.grid.check(Q)
    vals = v.restrict(Q)
    if np.any(vals <= 0):
        raise DomainError("exponential A_inf needs a strictly positive weight")
    return float(v.pyramid[Q.level][Q.index] * np.exp(-StepFn(v.grid, np.log(v.values)).pyramid[Q.level][Q.index]))


def ainf_exp_global(v: StepFn) -> float:
    return float(ainf_exp_cubes(v).max())


def ainf_cubes(v: StepFn, flavor: str = FW) -> np.ndarray:
    if flavor == FW:
        return fujii_wilson_cubes(v)
    if flavor == EXP:
        return ainf_exp_cubes(v)
    raise ParameterError(f"unknown A_inf flavor {flavor!r}")


def joint_ar_cubes(v: StepFn, u: StepFn, r: float) -> np.ndarray:
    if not r > 1:
        raise ParameterError(f"joint A_r needs r > 1, got {r}")
    return averages_cubes(v) * averages_cubes(u) ** (r - 1.0)


def joint_ar(v: StepFn, u: StepFn, r: float) -> float:
    """``sup_Q ⟨v⟩_Q ⟨u⟩_Q^{r-1}``."""
    return float(joint_ar_cubes(v, u, r).max())


def ar_cubes(v: StepFn, u: StepFn, cfg: ExponentConfig) -> np.ndarray:
    """``A_r(v,u,Q) = ⟨v⟩^{1/p-1/q0} ⟨u⟩^{(1/p-1/q0)(r-1)}`` per cube."""
    e = 1.0 / cfg.p - recip(cfg.q0)
    return averages_cubes(v) ** e * averages_cubes(u) ** (e * (cfg.r - 1.0))


def ar_dual_cubes(u: StepFn, v: StepFn, cfg: ExponentConfig) -> np.ndarray:
    """``A_{r'}(u,v,Q) = ⟨u⟩^{1/p'-1/p0'} ⟨v⟩^{(1/p'-1/p0')(r'-1)}`` per cube."""
    e = 1.0 / cfg.p_conj - recip(cfg.p0_conj)
    return averages_cubes(u) ** e * averages_cubes(v) ** (e * (cfg.r_conj - 1.0))


def ar_local(v: StepFn, u: StepFn, Q: Cube, cfg: ExponentConfig) -> float:
    v.grid.check(Q)
    return float(ar_cubes(v, u, cfg)[cube_position(Q)])


def entropy_cubes(v: StepFn, u: StepFn, cfg: ExponentConfig, gauge: EntropyGauge,
                  flavor: str = FW, side: str = LEFT) -> np.ndarray:
    if side == LEFT:
        a = ainf_cubes(v, flavor)
        return ar_cubes(v, u, cfg) * a ** (1.0 / cfg.p_conj) * gauge(a)
    if side == RIGHT:
        b = ainf_cubes(u, flavor)
        return ar_dual_cubes(u, v, cfg) * b ** (1.0 / cfg.p) * gauge(b)
    raise ParameterError(f"unknown side {side!r}")


def entropy_constant(v: StepFn, u: StepFn, cfg: ExponentConfig, gauge: EntropyGauge,
                     flavor: str = FW, side: str = LEFT) -> float:
    """Entropy-bumped one-supremum constant.

    LEFT: ``sup_Q A_r(v,u,Q) A_inf(v,Q)^{1/p'} φ(A_inf(v,Q))``;
    RIGHT: ``sup_Q A_{r'}(u,v,Q) A_inf(u,Q)^{1/p} ψ(A_inf(u,Q))``.
    ``flavor`` picks the Fujii–Wilson or the exponential A_inf.
    """
    return float(entropy_cubes(v, u, cfg, gauge, flavor, side).max())


def two_weight_ainf_rhs(v: StepFn, u: StepFn, cfg: ExponentConfig, flavor: str = FW) -> float:
    """``[v,u]_{A_r}^{1/q0'-1/p'} ([u]_{A_inf}^{1/p} + [v]_{A_inf}^{1/p'})``."""
    ar = joint_ar(v, u, cfg.r)
    au = float(ainf_cubes(u, flavor).max())
    av = float(ainf_cubes(v, flavor).max())
    return ar ** (1.0 / cfg.q0_conj - 1.0 / cfg.p_conj) * (au ** (1.0 / cfg.p) + av ** (1.0 / cfg.p_conj))


def one_supremum_rhs(v: StepFn, u: StepFn, cfg: ExponentConfig, flavor: str = FW) -> float:
    """``sup_Q A_r(v,u,Q) (A_inf(v,Q)^{1/p'} + A_inf(u,Q)^{1/p})``."""
    per = ar_cubes(v, u, cfg) * (ainf_cubes(v, flavor) ** (1.0 / cfg.p_conj) + ainf_cubes(u, flavor) ** (1.0 / cfg.p))
    return float(per.max())
