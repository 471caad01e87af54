"""Best constants, testing constants and the brute-force oracle.

Two norms are computed:

* the *reduced* norm ``Λ``: the best constant of
  ``Σ_Q c_Q ⟨f⟩_Q^u ⟨g⟩_Q^v <= Λ ‖f‖_{L^p(u)} ‖g‖_{L^{q'}(v)}``, equal to
  ``‖T_τ(·u)‖_{L^p(u) -> L^q(v)}``;
* the best constant ``N`` of the bilinear form itself against
  ``‖f‖_{L^p(w)} ‖g‖_{L^{q'}(σ)}``.

Both optimisers return certified lower bounds: the value is the ratio at the
returned maximisers.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from .dyadic import Cube, StepFn
from .exceptions import CapacityError, ParameterError
from .forms import (
    WeightSetting,
    averaging_matrix,
    conj,
    reduced_coefficients,
    tau_vector,
)
from .sparse import EXHAUSTIVE_CAP, SparseFamily, enumerate_sparse_subfamilies, max_weight_sparse_subset

FORWARD = "forward"
DUAL = "dual"
EXACT = "exact"
GREEDY = "greedy"
AUTO = "auto"
B_FORM = "bform"
REDUCED = "reduced"

DEFAULT_TOL = 1e-8
DEFAULT_RESTARTS = 8
MAX_ITER = 10_000
BRUTE_FORCE_MAX_DEPTH = 2


@dataclass
class NormResult:
    value: float
    maximizer_f: StepFn
    maximizer_g: StepFn
    restarts: int
    converged: bool
    gap_estimate: float
    iterations: int = 0
    values: list = field(default_factory=list, repr=False)


@dataclass
class TestingResult:
    value: float
    witness_family: SparseFamily
    side: str
    s: float
    mode: str
    ratios: np.ndarray = field(default=None, repr=False)

    __test__ = False  # keep pytest from collecting this class


def maximal_chain_constant(cfg) -> float:
    """``((p/p0)')^{1/p0} ((q'/q0')')^{1/q0'}``: norm bound of the two weighted maximal operators."""
    return conj(cfg.p / cfg.p0) ** (1.0 / cfg.p0) * conj(cfg.q_conj / cfg.q0_conj) ** (1.0 / cfg.q0_conj)


# --- reduced operator -------------------------------------------------------

class _ReducedOperator:
    """``T_τ(f u)`` and its adjoint as dense leaf-space maps."""

    def __init__(self, setting: WeightSetting, family: SparseFamily):
        family.require_verified()
        self.setting = setting
        self.cfg = setting.cfg
        self.n = setting.grid.n_leaves
        self.h = 1.0 / self.n
        self.u = setting.u.values
        self.v = setting.v.values
        self.P = family.membership()
        self.alpha = tau_vector(setting, family) / np.array([c.length for c in family.cubes])

    def forward(self, f: np.ndarray) -> np.ndarray:
        """``T_τ(f u)`` as leaf values."""
        return self.P.T @ (self.alpha * (self.h * (self.P @ (f * self.u))))

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        """``T_τ(g v)``, the adjoint paired against ``u dx``."""
        return self.P.T @ (self.alpha * (self.h * (self.P @ (g * self.v))))

    def pairing(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(self.h * np.sum(self.forward(f) * g * self.v))


def _wnorm(x: np.ndarray, p: float, weight: np.ndarray) -> float:
    return float(np.mean(np.abs(x) ** p * weight) ** (1.0 / p))


def _alternate(x0, apply_a, apply_b, x_weight, y_weight, px, y_out, x_out, tol, max_iter):
    """Alternating maximisation of ``∫ (A x) y dμ_y`` over unit spheres.

    ``x`` lives in ``L^{px}(x_weight)``, ``A x`` is measured in
    ``L^{y_out}(y_weight)`` and ``B y`` in ``L^{x_out}(x_weight)``.  Each half
    step is the exact Hölder maximiser, so the value never decreases.
    """
    x = x0 / _wnorm(x0, px, x_weight)
    prev_delta = None
    converged = False
    value = 0.0
    y = None
    it = 0
    for it in range(1, max_iter + 1):
        ax = apply_a(x)
        ny = _wnorm(ax, y_out, y_weight)
        if ny == 0:
            return 0.0, x, np.zeros_like(x), it, True
        y = (ax / ny) ** (y_out - 1.0)
        by = apply_b(y)
        nx = _wnorm(by, x_out, x_weight)
        x = (by / nx) ** (x_out - 1.0)
        new = nx
        if it > 1:
            delta = max(new - value, 0.0)
            rel = delta / new
            rate = delta / prev_delta if prev_delta else 0.0
            rate = min(max(rate, 0.0), 0.999)
            # stop once the projected remaining gain is below tol
            if rel <= tol * (1.0 - rate) * 0.1:
                value = new
                converged = True
                break
            prev_delta = delta if delta > 0 else prev_delta
        value = new
    return value, x, y, it, converged


def sawyer_ratios(setting: WeightSetting, family: SparseFamily, side: str = FORWARD) -> np.ndarray:
    """Per-cube local testing ratios.

    FORWARD: ``‖T_F(u)‖_{L^q(v)} / u(F)^{1/p}``;
    DUAL: ``‖T_G(v)‖_{L^{p'}(u)} / v(G)^{1/q'}``.
    """
    family.require_verified()
    cfg = setting.cfg
    cubes = family.cubes
    P = family.membership()
    tv = tau_vector(setting, family)
    if side == FORWARD:
        carrier, target, out_exp, in_exp = setting.u, setting.v, cfg.q, cfg.p
    elif side == DUAL:
        carrier, target, out_exp, in_exp = setting.v, setting.u, cfg.p_conj, cfg.q_conj
    else:
        raise ParameterError(f"unknown side {side!r}")
    avg = np.array([carrier.pyramid[c.level][c.index] for c in cubes])
    coef = tv * avg
    m = len(cubes)
    contain = np.zeros((m, m))
    for i, F in enumerate(cubes):
        for j, Q in enumerate(cubes):
            if F.contains(Q):
                contain[i, j] = 1.0
    TF = (contain * coef[None, :]) @ P
    norms = np.mean(np.abs(TF) ** out_exp * target.values[None, :], axis=1) ** (1.0 / out_exp)
    masses = avg * np.array([c.length for c in cubes])
    return norms / masses ** (1.0 / in_exp)


def lambda_norm(setting: WeightSetting, family: SparseFamily, tol: float = DEFAULT_TOL,
                restarts: int = DEFAULT_RESTARTS, seed: int = 0, dual: bool = False,
                max_iter: int = MAX_ITER) -> NormResult:
    """Norm of ``f -> T_τ(f u)`` from ``L^p(u)`` to ``L^q(v)`` by alternating maximisation.

    For ``p < q`` the objective has several local maxima, so the start set
    matters.  Primal starts are the constant, the indicator of the cube with
    the largest forward testing ratio and ``restarts`` random vectors; dual
    starts are the constant and the best dual-side cube.  Each side also runs
    the other side's starts pushed through one half step, so the primal and
    dual searches (``dual=True``) visit the same basins and agree to ``tol``.
    """
    if tol <= 0 or restarts < 1:
        raise ParameterError("tol must be positive and restarts >= 1")
    op = _ReducedOperator(setting, family)
    cfg = setting.cfg
    n = op.n
    rng = np.random.default_rng(seed)
    cubes = family.cubes

    def indicator(side):
        best_cube = cubes[int(np.argmax(sawyer_ratios(setting, family, side)))]
        return StepFn.indicator(setting.grid, best_cube).values

    primal = [np.ones(n), indicator(FORWARD)] + [rng.random(n) for _ in range(restarts)]
    adjoint = [np.ones(n), indicator(DUAL)]
    if not dual:
        args = (op.forward, op.adjoint, op.u, op.v, cfg.p, cfg.q, cfg.p_conj)
        own, other = primal, adjoint
    else:
        args = (op.adjoint, op.forward, op.v, op.u, cfg.q_conj, cfg.p_conj, cfg.q)
        own, other = adjoint, primal
    apply_b, x_out = args[1], args[6]
    starts = own + [apply_b(y0) ** (x_out - 1.0) for y0 in other]
    starts = [x0 for x0 in starts if np.any(x0 > 0)]
    best = None
    values = []
    total_iter = 0
    all_converged = True
    for x0 in starts:
        value, x, y, it, conv = _alternate(x0, *args, tol=tol, max_iter=max_iter)
        total_iter += it
        all_converged &= conv
        values.append(value)
        if best is None or value > best[0]:
            best = (value, x, y)
    value, x, y = best
    f, g = (x, y) if not dual else (y, x)
    f_fn, g_fn = StepFn(setting.grid, f), StepFn(setting.grid, g)
    # the returned value is the ratio at the returned pair, not the iterate estimate
    ratio = op.pairing(f, g) / (_wnorm(f, cfg.p, op.u) * _wnorm(g, cfg.q_conj, op.v))
    spread = (max(values) - min(values)) / max(values) if max(values) > 0 else 0.0
    return NormResult(ratio, f_fn, g_fn, len(starts), all_converged, spread, total_iter, values)


# --- bilinear form ----------------------------------------------------------

class _FormObjective:
    """``-log B(f,g) + log‖f‖_{L^p(w)} + log‖g‖_{L^{q'}(σ)}`` in normalised coordinates.

    The variables are ``x = f w^{1/p}`` and ``y = g σ^{1/q'}``, so the norms
    are unweighted and rescaling a weight only shifts the objective by a
    constant.
    """

    def __init__(self, setting: WeightSetting, family: SparseFamily):
        family.require_verified()
        cfg = setting.cfg
        self.cfg = cfg
        self.n = setting.grid.n_leaves
        self.P = averaging_matrix(family)
        self.lam = setting.lam_vector(family)
        self.w = setting.w.values
        self.sigma = setting.sigma.values
        self.sf = self.w ** (-1.0 / cfg.p)
        self.sg = self.sigma ** (-1.0 / cfg.q_conj)
        self.a = cfg.p0
        self.b = cfg.q0_conj

    def _avg(self, x, e):
        if e == 1:
            return self.P @ x, self.P
        F = (self.P @ x ** e) ** (1.0 / e)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(F > 0, F ** (1.0 - e), 0.0)
        return F, (scale[:, None] * self.P) * x[None, :] ** (e - 1.0)

    def to_xy(self, f, g):
        return f / self.sf, g / self.sg

    def to_fg(self, x, y):
        return x * self.sf, y * self.sg

    def form(self, f, g) -> float:
        F, _ = self._avg(np.abs(f), self.a)
        G, _ = self._avg(np.abs(g), self.b)
        return float(np.sum(self.lam * F * G))

    def ratio(self, f, g) -> float:
        cfg = self.cfg
        return self.form(f, g) / (_wnorm(f, cfg.p, self.w) * _wnorm(g, cfg.q_conj, self.sigma))

    def __call__(self, z):
        cfg = self.cfg
        x, y = z[: self.n], z[self.n:]
        f, g = self.to_fg(x, y)
        F, dF = self._avg(f, self.a)
        G, dG = self._avg(g, self.b)
        B = float(np.sum(self.lam * F * G))
        nx = np.mean(x ** cfg.p)
        ny = np.mean(y ** cfg.q_conj)
        if B <= 0 or nx <= 0 or ny <= 0:
            return 1e300, np.zeros_like(z)
        val = -math.log(B) + math.log(nx) / cfg.p + math.log(ny) / cfg.q_conj
        grad_x = -(dF.T @ (self.lam * G)) * self.sf / B + x ** (cfg.p - 1.0) / (self.n * nx)
        grad_y = -(dG.T @ (self.lam * F)) * self.sg / B + y ** (cfg.q_conj - 1.0) / (self.n * ny)
        return val, np.concatenate([grad_x, grad_y])


def _unit(x, p):
    return x / float(np.mean(x ** p) ** (1.0 / p))


def best_constant_N(setting: WeightSetting, family: SparseFamily, tol: float = DEFAULT_TOL,
                    restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                    reduced: Optional[NormResult] = None, max_iter: int = MAX_ITER) -> NormResult:
    """Best constant of ``B(f,g) <= N ‖f‖_{L^p(w)} ‖g‖_{L^{q'}(σ)}`` (certified lower bound).

    Projected quasi-Newton ascent (L-BFGS-B on the nonnegative orthant) of the
    log-ratio from several starts: the reduced-norm maximiser mapped back to
    the original variables (``f = φ u^{1/p0}``, ``g = ψ v^{1/q0'}``), the
    constant pair and ``restarts`` random pairs.
    """
    if tol <= 0 or restarts < 1:
        raise ParameterError("tol must be positive and restarts >= 1")
    cfg = setting.cfg
    obj = _FormObjective(setting, family)
    n = obj.n
    if reduced is None:
        reduced = lambda_norm(setting, family, tol=tol, restarts=restarts, seed=seed)
    rng = np.random.default_rng(seed + 1)
    warm = obj.to_xy(reduced.maximizer_f.values * setting.u.values ** (1.0 / cfg.p0),
                     reduced.maximizer_g.values * setting.v.values ** (1.0 / cfg.q0_conj))
    starts = [warm, (np.ones(n), np.ones(n))]
    starts += [(rng.random(n) + 1e-3, rng.random(n) + 1e-3) for _ in range(restarts)]
    bounds = [(0.0, None)] * (2 * n)
    best = None
    values = []
    converged_all = True
    iters = 0
    for x0, y0 in starts:
        x0, y0 = _unit(np.maximum(x0, 0.0), cfg.p), _unit(np.maximum(y0, 0.0), cfg.q_conj)
        start_ratio = obj.ratio(*obj.to_fg(x0, y0))
        res = optimize.minimize(obj, np.concatenate([x0, y0]), jac=True, method="L-BFGS-B", bounds=bounds,
                                options={"maxiter": max_iter, "ftol": 1e-15, "gtol": 1e-13, "maxcor": 30})
        iters += int(res.nit)
        x, y = res.x[:n], res.x[n:]
        if np.all(x == 0) or np.all(y == 0):
            x, y = x0, y0
        x, y = _unit(x, cfg.p), _unit(y, cfg.q_conj)
        f, g = obj.to_fg(x, y)
        val = obj.ratio(f, g)
        if val < start_ratio:
            f, g = obj.to_fg(x0, y0)
            val = start_ratio
        converged_all &= bool(res.success) or res.nit < max_iter
        values.append(val)
        if best is None or val > best[0]:
            best = (val, f, g)
    val, f, g = best
    spread = (max(values) - min(values)) / max(values)
    return NormResult(val, StepFn(setting.grid, f), StepFn(setting.grid, g), len(starts), converged_all,
                      spread, iters, values)


# --- brute-force oracle -----------------------------------------------------

def _simplex_grid(n: int, N: int) -> np.ndarray:
    pts = [c for c in itertools.product(range(N + 1), repeat=n - 1) if sum(c) <= N]
    arr = np.array([list(c) + [N - sum(c)] for c in pts], dtype=float)
    return arr / N


def _local_simplex(center: np.ndarray, step: float, radius: int) -> np.ndarray:
    n = center.size
    offsets = np.array(list(itertools.product(range(-radius, radius + 1), repeat=n - 1)), dtype=float)
    full = np.concatenate([offsets, -offsets.sum(axis=1, keepdims=True)], axis=1)
    pts = center[None, :] + step * full
    pts = pts[np.all(pts >= -1e-15, axis=1)]
    pts = np.maximum(pts, 0.0)
    return pts / pts.sum(axis=1, keepdims=True)


def brute_force_norm(setting: WeightSetting, family: SparseFamily, target: str = B_FORM,
                     resolution: int = 12, rounds: int = 3, candidates: int = 4) -> float:
    """Exhaustive grid search over the product of nonnegative unit spheres.

    Each sphere ``{x >= 0 : ‖x‖_{L^t(μ)} = 1}`` is parametrised by the simplex
    through ``x_i = (t_i / μ_i h)^{1/t}``.  A coarse simplex grid is scanned in
    full, then the best ``candidates`` cells are refined ``rounds`` times.
    Only for grids of depth <= 2.
    """
    family.require_verified()
    grid = setting.grid
    if grid.depth > BRUTE_FORCE_MAX_DEPTH:
        raise CapacityError(f"brute force is limited to depth {BRUTE_FORCE_MAX_DEPTH}")
    cfg = setting.cfg
    n = grid.n_leaves
    h = 1.0 / n
    P = averaging_matrix(family)
    if target == B_FORM:
        mu_f, mu_g = setting.w.values, setting.sigma.values
        coef = setting.lam_vector(family)
        u = v = None
    elif target == REDUCED:
        mu_f, mu_g = setting.u.values, setting.v.values
        coef = reduced_coefficients(setting, family)
        u, v = setting.u.values, setting.v.values
    else:
        raise ParameterError(f"unknown brute-force target {target!r}")

    def f_side(t):
        x = (t / (h * mu_f)) ** (1.0 / cfg.p)
        if u is None:
            return (P @ (x ** cfg.p0).T).T ** (1.0 / cfg.p0) if cfg.p0 != 1 else x @ P.T
        return (x * u) @ P.T / (P @ u)

    def g_side(t):
        y = (t / (h * mu_g)) ** (1.0 / cfg.q_conj)
        if v is None:
            return (P @ (y ** cfg.q0_conj).T).T ** (1.0 / cfg.q0_conj) if cfg.q0_conj != 1 else y @ P.T
        return (y * v) @ P.T / (P @ v)

    def scores(X, Y):
        return (f_side(X) * coef) @ g_side(Y).T

    X = _simplex_grid(n, resolution)
    S = scores(X, X)
    flat = np.argsort(S, axis=None)[::-1]
    seeds = []
    for k in flat:
        i, j = np.unravel_index(k, S.shape)
        if all(np.abs(X[i] - X[a]).max() > 1.5 / resolution or np.abs(X[j] - X[b]).max() > 1.5 / resolution
               for a, b in seeds):
            seeds.append((i, j))
        if len(seeds) >= candidates:
            break
    best = float(S.max())
    radius = 4
    for i, j in seeds:
        cx, cy = X[i], X[j]
        step = 1.0 / resolution
        for _ in range(rounds):
            step /= radius
            LX = _local_simplex(cx, step, radius)
            LY = _local_simplex(cy, step, radius)
            R = scores(LX, LY)
            a, b = np.unravel_index(np.argmax(R), R.shape)
            cx, cy = LX[a], LY[b]
            best = max(best, float(R[a, b]))
    return best


# --- testing constants ------------------------------------------------------

def testing_constant(setting: WeightSetting, family: SparseFamily, side: str = FORWARD,
                     mode: str = AUTO) -> TestingResult:
    """ℓ^s testing constant over carrier-sparse subfamilies.

    ``s`` comes from ``1/s = (1/q - 1/p)_+``.  For ``s = inf`` the supremum is
    attained on single cubes (Sawyer-type testing).  For finite ``s`` the EXACT
    mode searches every subfamily sparse for the carrier (``u`` forward, ``v``
    dual); GREEDY admits cubes by descending ratio and is a lower bound.
    """
    cfg = setting.cfg
    ratios = sawyer_ratios(setting, family, side)
    carrier = setting.u if side == FORWARD else setting.v
    s = cfg.s
    cubes = family.cubes
    if s == math.inf:
        k = int(np.argmax(ratios))
        witness = SparseFamily(family.grid, (cubes[k],), carrier, 0.5, verified=True)
        return TestingResult(float(ratios[k]), witness, side, s, EXACT, ratios)
    if mode == AUTO:
        mode = EXACT if len(cubes) <= EXHAUSTIVE_CAP else GREEDY
    if mode == EXACT:
        if len(cubes) > EXHAUSTIVE_CAP:
            raise CapacityError(f"EXACT testing is capped at {EXHAUSTIVE_CAP} cubes; use GREEDY")
        best_set, best = max_weight_sparse_subset(list(cubes), ratios ** s, carrier, 0.5, family.grid.depth)
        witness = SparseFamily(family.grid, best_set, carrier, 0.5, verified=True)
        return TestingResult(float(best ** (1.0 / s)), witness, side, s, EXACT, ratios)
    if mode == GREEDY:
        pos = {c: i for i, c in enumerate(cubes)}
        best, best_fam = -1.0, None
        # one maximal subfamily per starting rank is too slow on large families; the top few suffice
        gen = enumerate_sparse_subfamilies(family, carrier, 0.5, greedy=True, priority=ratios)
        for k, sub in enumerate(gen):
            total = sum(ratios[pos[c]] ** s for c in sub.cubes)
            if total > best:
                best, best_fam = total, sub
            if k + 1 >= 8:
                break
        return TestingResult(float(best ** (1.0 / s)), best_fam, side, s, GREEDY, ratios)
    raise ParameterError(f"unknown testing mode {mode!r}")


# --- proposition checks -----------------------------------------------------

def kolmogorov_check(u: StepFn, v: StepFn, family: SparseFamily, gamma: float, eta: float, R: Cube) -> float:
    """``Σ_{Q ∈ S, Q ⊆ R} ⟨u⟩^γ ⟨v⟩^η |Q|`` divided by ``⟨u⟩_R^γ ⟨v⟩_R^η |R|``."""
    if gamma < 0 or eta < 0 or gamma + eta >= 1:
        raise ParameterError("need gamma, eta >= 0 and gamma + eta < 1")
    family.require_verified()
    uq = lambda c: u.pyramid[c.level][c.index]
    vq = lambda c: v.pyramid[c.level][c.index]
    lhs = sum(uq(c) ** gamma * vq(c) ** eta * c.length for c in family.cubes if R.contains(c))
    return float(lhs / (uq(R) ** gamma * vq(R) ** eta * R.length))


def dyadic_sum_check(alpha: dict, sigma: StepFn, s: float) -> tuple[float, float]:
    """Both sides of ``‖Σ α_Q 1_Q‖_{L^s(σ)} ≈ (Σ α_Q (⟨φ_Q⟩^σ_Q)^{s-1} σ(Q))^{1/s}``."""
    if not 1 < s < math.inf:
        raise ParameterError("s must lie in (1, inf)")
    grid = sigma.grid
    depth = grid.depth
    phi = np.zeros(grid.n_leaves)
    for c, a in alpha.items():
        if a < 0:
            raise ParameterError("coefficients must be nonnegative")
        phi[c.leaf_slice(depth)] += a
    lhs = float(np.mean(phi ** s * sigma.values) ** (1.0 / s))
    total = 0.0
    for c, a in alpha.items():
        if a == 0:
            continue
        # ∫_Q φ_Q dσ, summed cube by cube rather than through the leaf vector above
        inner = sum(b * sigma.pyramid[d.level][d.index] * d.length for d, b in alpha.items() if c.contains(d))
        mass = sigma.pyramid[c.level][c.index] * c.length
        total += a * (inner / mass) ** (s - 1.0) * mass
    return lhs, float(total ** (1.0 / s))
