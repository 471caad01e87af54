"""Young functions, entropy gauges and Luxembourg averages."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from ..dyadic import Cube, StepFn
from ..exceptions import DomainError, NumericError, ParameterError

_E = math.e
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
LUX_RTOL = 1e-12
LEGENDRE_S_MAX = 1e12


def _spot_check_young(fn: Callable, label: str) -> None:
    t = np.concatenate([[0.0], np.logspace(-4, 4, 161)])
    vals = fn(t)
    if not np.all(np.isfinite(vals)):
        raise ParameterError(f"Young function {label} is not finite on the check grid")
    if abs(vals[0]) > 0:
        raise ParameterError(f"Young function {label} must vanish at 0")
    if np.any(np.diff(vals) < -1e-12 * np.abs(vals[1:])):
        raise ParameterError(f"Young function {label} is not nondecreasing")
    slopes = np.diff(vals) / np.diff(t)
    if np.any(np.diff(slopes) < -1e-9 * np.abs(slopes[1:]) - 1e-300):
        raise ParameterError(f"Young function {label} is not convex")


@dataclass(frozen=True, eq=False)
class YoungFn:
    """A convex nondecreasing ``A`` on ``[0, inf)`` with ``A(0) = 0``.

    ``lux_rule`` maps an array of cube samples (last axis = leaves) to the
    Luxembourg average in closed form; ``closed_dual`` builds the normalised
    conjugate.  ``bp_exponent`` is the exponent ``a`` of a pure power, used for
    the closed-form B_p verdict.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    label: str
    closed_dual: Optional[Callable[[], "YoungFn"]] = field(default=None, repr=False)
    lux_rule: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    bp_exponent: Optional[float] = None
    check: bool = True

    def __post_init__(self):
        if self.check:
            _spot_check_young(self.fn, self.label)

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))


def power(a: float) -> YoungFn:
    """``A(t) = t^a``, ``a > 1``."""
    a = float(a)
    if not a > 1:
        raise ParameterError(f"power Young function needs a > 1, got {a}")
    return YoungFn(
        fn=lambda t: t ** a,
        label=f"power({a:g})",
        closed_dual=lambda: power(a / (a - 1.0)),
        lux_rule=lambda x: np.mean(x ** a, axis=-1) ** (1.0 / a),
        bp_exponent=a,
    )


def log_power(a: float, delta: float) -> YoungFn:
    """``A(t) = t^a log(e+t)^δ / log(e+1)^δ``, normalised so that ``A(1) = 1``."""
    a, delta = float(a), float(delta)
    norm = math.log(_E + 1.0) ** delta
    return YoungFn(fn=lambda t: t ** a * np.log(_E + t) ** delta / norm, label=f"logpower({a:g},{delta:g})")


def from_spec(spec: dict) -> YoungFn:
    family = spec.get("family", "power")
    if family == "power":
        return power(spec["a"])
    if family in ("logpower", "log_power"):
        return log_power(spec["a"], spec.get("delta", 0.0))
    raise ParameterError(f"unknown Young family {family!r}")


# --- Luxembourg averages ---------------------------------------------------

def _bisect_rows(x: np.ndarray, A: YoungFn) -> np.ndarray:
    """Row-wise ``inf{λ : mean(A(x/λ)) <= 1}`` by bisection."""
    out = np.zeros(x.shape[0])
    live = np.max(x, axis=1) > 0
    if not np.any(live):
        return out
    x = x[live]
    lo = np.mean(x, axis=1)
    hi = np.max(x, axis=1)

    def excess(lam):
        return np.mean(A(x / lam[:, None]), axis=1) - 1.0

    # the Jensen bracket [mean, max] is exact when A(1) = 1; widen otherwise
    for _ in range(200):
        bad = excess(lo) < 0
        if not np.any(bad):
            break
        lo = np.where(bad, lo / 2.0, lo)
    else:
        raise NumericError("could not bracket the Luxembourg average from below")
    for _ in range(200):
        bad = excess(hi) > 0
        if not np.any(bad):
            break
        hi = np.where(bad, hi * 2.0, hi)
    else:
        raise NumericError("could not bracket the Luxembourg average from above")
    for _ in range(200):
        if np.all(hi - lo <= LUX_RTOL * hi):
            break
        mid = 0.5 * (lo + hi)
        over = excess(mid) > 0
        lo = np.where(over, mid, lo)
        hi = np.where(over, hi, mid)
    else:
        raise NumericError("Luxembourg bisection did not converge")
    out[live] = hi
    return out


def luxembourg_rows(x: np.ndarray, A: YoungFn, method: str = "auto") -> np.ndarray:
    """Luxembourg averages of each row of ``x`` (rows = cubes, columns = equal-measure leaves)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if np.any(x < 0):
        raise DomainError("Luxembourg averages need nonnegative samples")
    if method == "auto":
        method = "closed" if A.lux_rule is not None else "bisect"
    if method == "closed":
        if A.lux_rule is None:
            raise ParameterError(f"{A.label} has no closed-form Luxembourg rule")
        return A.lux_rule(x)
    return _bisect_rows(x, A)


def luxembourg(f: StepFn, A: YoungFn, Q: Cube, method: str = "auto") -> float:
    """``⟨f⟩_{A,Q} = inf{λ > 0 : ⟨A(f/λ)⟩_Q <= 1}``."""
    f.grid.check(Q)
    return float(luxembourg_rows(f.restrict(Q)[None, :], A, method)[0])


def luxembourg_levels(f: StepFn, A: YoungFn, method: str = "auto") -> list[np.ndarray]:
    """Luxembourg averages over every cube, level by level."""
    L = f.grid.depth
    return [luxembourg_rows(f.values.reshape(1 << lvl, -1), A, method) for lvl in range(L + 1)]


# --- conjugates ------------------------------------------------------------

def legendre(A: YoungFn, t: float) -> float:
    """``sup_{s >= 0} (st - A(s))`` by golden-section search on the concave inner problem."""
    if t < 0:
        raise DomainError("Legendre transform evaluated at negative t")
    if t == 0:
        return 0.0
    h = lambda s: s * t - float(A(s))
    hi = 1.0
    while h(2.0 * hi) > h(hi):
        hi *= 2.0
        if hi > LEGENDRE_S_MAX:
            raise DomainError(f"Legendre transform of {A.label} at t={t} leaves the evaluation domain")
    a, b = 0.0, 2.0 * hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    hc, hd = h(c), h(d)
    while b - a > 1e-13 * max(b, 1e-300):
        if hc > hd:
            b, d, hd = d, c, hc
            c = b - _GOLDEN * (b - a)
            hc = h(c)
        else:
            a, c, hc = c, d, hd
            d = a + _GOLDEN * (b - a)
            hd = h(d)
    return max(h(0.5 * (a + b)), 0.0)


def numeric_dual(A: YoungFn, normalize: bool = True) -> YoungFn:
    scale = legendre(A, 1.0) if normalize else 1.0
    if scale <= 0:
        raise DomainError(f"conjugate of {A.label} vanishes at 1; cannot normalise")

    def fn(t):
        t = np.asarray(t, dtype=float)
        flat = np.array([legendre(A, float(x)) for x in t.ravel()]) / scale
        return flat.reshape(t.shape)

    return YoungFn(fn=fn, label=f"dual[{A.label}]", check=False)


def dual_young(A: YoungFn) -> YoungFn:
    """Complementary function, normalised so that ``Ā(1) = 1``.

    Closed form where the family provides one (``power(a) -> power(a')``),
    otherwise the numeric Legendre transform divided by its value at 1.
    """
    if A.closed_dual is not None:
        return A.closed_dual()
    return numeric_dual(A)


# --- B_p integrability -----------------------------------------------------

BP_TAIL_FRACTION = 0.1


def bp_integral(A: YoungFn, p: float, upper: float = 100.0) -> tuple[float, bool]:
    """``∫_{1/2}^{upper} A(t) t^{-p} dt/t`` and a divergence verdict.

    The verdict is closed form for pure powers (diverges iff ``a >= p``);
    otherwise the integral is flagged divergent when the next doubling
    ``[upper, 2·upper]`` adds more than 10% of the accumulated value.
    """
    if not p > 1:
        raise ParameterError(f"B_p needs p > 1, got {p}")
    if upper < 1:
        raise ParameterError("upper limit must be >= 1")
    integrand = lambda t: float(A(t)) / t ** (p + 1.0)
    value, _ = integrate.quad(integrand, 0.5, upper, limit=200)
    if A.bp_exponent is not None:
        return value, A.bp_exponent >= p
    tail, _ = integrate.quad(integrand, upper, 2.0 * upper, limit=200)
    return value, tail > BP_TAIL_FRACTION * value


# --- entropy gauges --------------------------------------------------------

_LOG_SPLIT = 60.0


@dataclass(frozen=True, eq=False)
class EntropyGauge:
    """Increasing positive ``φ`` on ``[1/2, inf)``.

    ``decay`` names the integrability class the gauge is meant for:
    ``"fw"`` for ``∫ dt/(tφ)`` and ``"exp"`` for ``∫ dt/(tφ^k)``.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    label: str
    decay: str = "fw"
    log_exponent: Optional[float] = None
    power_exponent: Optional[float] = None

    def __post_init__(self):
        t = np.logspace(math.log10(0.5), 6, 121)
        vals = self.fn(t)
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise ParameterError(f"gauge {self.label} must be positive and finite")
        if np.any(np.diff(vals) < -1e-12 * vals[1:]):
            raise ParameterError(f"gauge {self.label} must be nondecreasing")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        vals = self.fn(t)
        if np.any(vals <= 0):
            raise ParameterError(f"gauge {self.label} evaluated to a nonpositive value")
        return vals

    def integral(self, k: float = 1.0) -> float:
        """``∫_{1/2}^inf dt / (t φ(t)^k)``; ``inf`` when it diverges."""
        if self.log_exponent is not None:
            m = self.log_exponent * k
            if m <= 1:
                return math.inf
            head, _ = integrate.quad(lambda x: math.log(_E + math.exp(x)) ** -m, -math.log(2.0), _LOG_SPLIT,
                                     limit=400)
            # log(e + e^x) = x to double precision beyond the split
            return head + _LOG_SPLIT ** (1.0 - m) / (m - 1.0)
        if self.power_exponent is not None:
            m = self.power_exponent * k
            if m <= 0:
                return math.inf
            return 0.5 ** -m / m
        integrand = lambda t: float(self.fn(np.array(t))) ** -k / t
        value, _ = integrate.quad(integrand, 0.5, 1e3, limit=400)
        tail, _ = integrate.quad(integrand, 1e3, 2e3, limit=200)
        if tail > BP_TAIL_FRACTION * value:
            return math.inf
        rest, _ = integrate.quad(integrand, 1e3, math.inf, limit=400)
        return value + rest


def log_gauge(delta: float, decay: str = "fw") -> EntropyGauge:
    """``φ(t) = log(e+t)^δ``."""
    delta = float(delta)
    return EntropyGauge(fn=lambda t: np.log(_E + t) ** delta, label=f"log^{delta:g}", decay=decay,
                        log_exponent=delta)


def power_gauge(eps: float, decay: str = "fw") -> EntropyGauge:
    """``φ(t) = t^ε``."""
    eps = float(eps)
    return EntropyGauge(fn=lambda t: t ** eps, label=f"t^{eps:g}", decay=decay, power_exponent=eps)


def constant_gauge(c: float = 1.0) -> EntropyGauge:
    c = float(c)
    return EntropyGauge(fn=lambda t: np.full(np.shape(t), c), label=f"const({c:g})", log_exponent=0.0)


def gauge_from_spec(spec: dict) -> EntropyGauge:
    family = spec.get("family", "log")
    decay = spec.get("decay", "fw")
    if family in ("log", "logpower"):
        return log_gauge(spec["delta"], decay)
    if family == "power":
        return power_gauge(spec["eps"], decay)
    if family == "constant":
        return constant_gauge(spec.get("c", 1.0))
    raise ParameterError(f"unknown gauge family {family!r}")
