"""Orlicz-bump constants built from Luxembourg averages."""
from __future__ import annotations

from typing import Optional

import numpy as np

from ..dyadic import StepFn
from ..exceptions import ParameterError
from ..forms import ExponentConfig
from .weights import LEFT, RIGHT, _flat, ainf_exp_cubes, ar_cubes, ar_dual_cubes, averages_cubes
from .young import EntropyGauge, YoungFn, dual_young, luxembourg_levels

L = "L"
SEP = "SEP"
ENTROPY = "ENTROPY"
JOINT = "JOINT"


def lux_cubes(f: StepFn, A: YoungFn, method: str = "auto") -> np.ndarray:
    return _flat(luxembourg_levels(f, A, method))


def bump_factor_cubes(w: StepFn, A: YoungFn, exponent: float, method: str = "auto") -> np.ndarray:
    """``⟨w⟩^{e} / ⟨w^{e}⟩_{A}`` per cube, e.g. ``⟨u⟩^{1/p}/⟨u^{1/p}⟩_{A,Q}``."""
    return averages_cubes(w) ** exponent / lux_cubes(w ** exponent, A, method)


def dual_factor_cubes(w: StepFn, A: YoungFn, exponent: float, method: str = "auto") -> np.ndarray:
    """``⟨w^{1-e}⟩_{Ā} / ⟨w⟩^{1-e}`` per cube, e.g. ``⟨u^{1/p'}⟩_{Ā,Q}/⟨u⟩^{1/p'}``."""
    c = 1.0 - exponent
    return lux_cubes(w ** c, dual_young(A), method) / averages_cubes(w) ** c


def bump_cubes(u: StepFn, v: StepFn, cfg: ExponentConfig, A: YoungFn, variant: str = L,
               side: str = LEFT, gauge: Optional[EntropyGauge] = None, B: Optional[YoungFn] = None,
               method: str = "auto") -> np.ndarray:
    p, pc = cfg.p, cfg.p_conj
    if variant == JOINT:
        if B is None:
            raise ParameterError("JOINT variant needs a second Young function B")
        return ar_cubes(v, u, cfg) * bump_factor_cubes(u, A, 1.0 / p, method) * bump_factor_cubes(v, B, 1.0 / pc, method)
    if side == LEFT:
        base, weight, e = ar_cubes(v, u, cfg), u, 1.0 / p
    elif side == RIGHT:
        base, weight, e = ar_dual_cubes(u, v, cfg), v, 1.0 / pc
    else:
        raise ParameterError(f"unknown side {side!r}")
    if variant == L:
        return base * bump_factor_cubes(weight, A, e, method)
    if variant == SEP:
        return base * dual_factor_cubes(weight, A, e, method)
    if variant == ENTROPY:
        if gauge is None:
            raise ParameterError("ENTROPY variant needs a gauge")
        x = bump_factor_cubes(weight, A, e, method)
        return base * x * gauge(x)
    raise ParameterError(f"unknown bump variant {variant!r}")


def bump_constant(u: StepFn, v: StepFn, cfg: ExponentConfig, A: YoungFn, variant: str = L,
                  side: str = LEFT, gauge: Optional[EntropyGauge] = None, B: Optional[YoungFn] = None,
                  method: str = "auto") -> float:
    """Supremum over all dyadic cubes of a bump product.

    ``L``       ``A_r(v,u,Q) ⟨u⟩^{1/p}/⟨u^{1/p}⟩_{A,Q}``
    ``SEP``     ``A_r(v,u,Q) ⟨u^{1/p'}⟩_{Ā,Q}/⟨u⟩^{1/p'}``
    ``ENTROPY`` the ``L`` product times ``gauge`` of its bump factor
    ``JOINT``   ``A_r(v,u,Q)`` times both bump factors, ``A`` on ``u`` and ``B`` on ``v``

    ``side=RIGHT`` swaps ``(u, p, q0)`` for ``(v, p', p0')``; ``A`` then acts on ``v``.
    """
    return float(bump_cubes(u, v, cfg, A, variant, side, gauge, B, method).max())


def jensen_holder_slack(u: StepFn, cfg: ExponentConfig, A: YoungFn, exponent: Optional[float] = None) -> dict:
    """Per-cube slack of the two comparisons of the ``L`` factor.

    ``L ≤ A_inf^exp(u,Q)^{e}`` and ``L ≤`` the dual-bump factor; both slacks
    are ``rhs - lhs`` and must be nonnegative.
    """
    e = 1.0 / cfg.p if exponent is None else exponent
    lf = bump_factor_cubes(u, A, e)
    jensen = ainf_exp_cubes(u) ** e
    holder = dual_factor_cubes(u, A, e)
    return {"bump": lf, "jensen": jensen - lf, "holder": holder - lf}
