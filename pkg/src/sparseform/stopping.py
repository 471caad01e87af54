"""Principal cubes, parallel stopping and level-set slicing of sparse families."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .characteristics.weights import EXP, FW, ainf_exp_local, fujii_wilson_local
from .characteristics.young import EntropyGauge
from .dyadic import Cube, StepFn
from .exceptions import DomainError, ParameterError
from .extremal import DUAL, FORWARD, sawyer_ratios
from .forms import WeightSetting
from .sparse import SparseFamily

STOP_THRESHOLD = 2.0


def _wavg(f: StepFn, u: StepFn, Q: Cube) -> float:
    fu = (f * u).pyramid[Q.level][Q.index]
    return fu / u.pyramid[Q.level][Q.index]


@dataclass
class PrincipalForest:
    """Stopping cubes for ``(f, u)`` over the members of a sparse family.

    ``generations[k]`` holds the k-th generation, ``children`` maps each
    stopping cube to its stopping children and ``parent`` maps every member
    of the family to its minimal stopping ancestor ``π(Q)``.
    """

    f: StepFn
    u: StepFn
    family: SparseFamily
    threshold: float
    generations: list = field(default_factory=list)
    children: dict = field(default_factory=dict)
    parent: dict = field(default_factory=dict)

    @property
    def cubes(self) -> tuple[Cube, ...]:
        return tuple(sorted(c for gen in self.generations for c in gen))

    def average(self, Q: Cube) -> float:
        return _wavg(self.f, self.u, Q)

    def as_family(self) -> SparseFamily:
        """The stopping cubes as a family, certified sparse for the carrier ``u``."""
        return SparseFamily.build(self.family.grid, self.cubes, self.u, 0.5)

    def child_mass_ratios(self) -> dict:
        """``u(⋃ ch(F)) / u(F)`` for every stopping cube."""
        u = self.u
        mass = lambda c: u.pyramid[c.level][c.index] * c.length
        return {F: sum(mass(c) for c in ch) / mass(F) for F, ch in self.children.items()}


def principal_cubes(f: StepFn, u: StepFn, family: SparseFamily,
                    threshold: float = STOP_THRESHOLD) -> PrincipalForest:
    """Principal cubes: ``ch(F)`` are the maximal members ``Q ⊊ F`` with ``⟨f⟩^u_Q > threshold·⟨f⟩^u_F``."""
    if threshold <= 1:
        raise ParameterError("stopping threshold must exceed 1")
    if np.any(f.values < 0):
        raise DomainError("f must be nonnegative")
    u.require_weight("u")
    forest = PrincipalForest(f, u, family, threshold)
    members = family.cubes
    current = list(family.maximal())
    while current:
        forest.generations.append(tuple(current))
        nxt = []
        for F in current:
            bar = threshold * forest.average(F)
            hits = [Q for Q in members if F.strictly_contains(Q) and forest.average(Q) > bar]
            hit_set = set(hits)
            ch = tuple(Q for Q in hits if not any(a in hit_set for a in Q.ancestors()))
            forest.children[F] = ch
            nxt.extend(ch)
        current = sorted(nxt)
    stops = set(forest.cubes)
    for Q in members:
        if Q in stops:
            forest.parent[Q] = Q
            continue
        forest.parent[Q] = next(a for a in Q.ancestors() if a in stops)
    return forest


def packing_check(forest: PrincipalForest, p: float) -> float:
    """``Σ_F (⟨f⟩^u_F)^p u(F) / ‖f‖_{L^p(u)}^p``."""
    if not 1 < p < math.inf:
        raise ParameterError("p must lie in (1, inf)")
    u = forest.u
    lhs = sum(forest.average(F) ** p * u.pyramid[F.level][F.index] * F.length for F in forest.cubes)
    norm = float(np.mean(forest.f.values ** p * u.values))
    if norm == 0:
        return 0.0
    return float(lhs / norm)


def packing_bound(p: float) -> float:
    """``2 (p')^p``: sparsity factor 2 times the weighted dyadic maximal bound."""
    return 2.0 * (p / (p - 1.0)) ** p


def parallel_projection(family: SparseFamily, forest_f: PrincipalForest,
                        forest_g: PrincipalForest) -> dict:
    """Group the members of ``family`` by their stopping pair ``(π_F(Q), π_G(Q))``."""
    if forest_f.family.cubes != family.cubes or forest_g.family.cubes != family.cubes:
        raise ParameterError("both forests must be built over the given family")
    blocks: dict = {}
    for Q in family.cubes:
        blocks.setdefault((forest_f.parent[Q], forest_g.parent[Q]), []).append(Q)
    return {k: tuple(v) for k, v in blocks.items()}


def ainf_band(value: float) -> int:
    """Band index ``a`` with ``2^a <= value < 2^{a+1}``; values within rounding of 1 land in band 0."""
    if value < 1.0 - 1e-9:
        raise DomainError(f"localized A_inf constant below 1: {value}")
    return max(0, int(math.floor(math.log2(max(value, 1.0)))))


def slice_by_ainf(family: SparseFamily, v: StepFn, flavor: str = FW) -> dict:
    """Partition of the family into bands ``S_a`` of the localized A_inf constant of ``v``.

    Subfamilies of a sparse family are sparse, so each band keeps the
    parent's certificate.
    """
    v.require_weight("v")
    if flavor == FW:
        local = fujii_wilson_local
    elif flavor == EXP:
        local = ainf_exp_local
    else:
        raise ParameterError(f"unknown A_inf flavor {flavor!r}")
    bands: dict = {}
    for Q in family.cubes:
        bands.setdefault(ainf_band(local(v, Q)), []).append(Q)
    return {a: SparseFamily(family.grid, tuple(cs), family.carrier, family.factor, verified=family.verified)
            for a, cs in sorted(bands.items())}


@dataclass
class BandSum:
    bands: dict           # a -> band-restricted testing supremum
    lhs: float            # Σ_a band ratios
    rhs: float            # (I_k / log 2)^{1/k} · band_constant
    band_constant: float  # ℓ^{k'} norm of φ(2^a) · band ratio


def band_sum_check(setting: WeightSetting, family: SparseFamily, gauge: EntropyGauge,
                   flavor: str = FW, side: str = DUAL, k: float = 1.0) -> BandSum:
    """Band-by-band testing suprema and the gauge summation bound.

    DUAL slices by ``A_inf(v, Q)`` and tests ``‖T_R(v)‖_{L^{p'}(u)} / v(R)^{1/p'}``;
    FORWARD slices by ``A_inf(u, Q)``.  Writing ``K_a = φ(2^a)·ratio_a``,
    Hölder in ``a`` and monotonicity of the gauge give
    ``Σ_a ratio_a <= (I_k / log 2)^{1/k} ‖K‖_{ℓ^{k'}}`` with
    ``I_k = ∫_{1/2}^∞ dt/(t φ(t)^k)``; ``k = 1`` uses the supremum of ``K``.
    """
    if k < 1:
        raise ParameterError("band exponent k must be >= 1")
    weight = setting.v if side == DUAL else setting.u
    bands = slice_by_ainf(family, weight, flavor)
    ratios = {a: float(sawyer_ratios(setting, sub, side).max()) for a, sub in bands.items()}
    lhs = sum(ratios.values())
    K = np.array([float(gauge(np.array([2.0 ** a]))[0]) * r for a, r in ratios.items()])
    kc = math.inf if k == 1 else k / (k - 1.0)
    band_constant = float(K.max()) if kc == math.inf else float(np.sum(K ** kc) ** (1.0 / kc))
    rhs = (gauge.integral(k) / math.log(2.0)) ** (1.0 / k) * band_constant
    return BandSum(ratios, lhs, rhs, band_constant)


__all__ = [
    "FORWARD", "DUAL", "PrincipalForest", "principal_cubes", "packing_check", "packing_bound",
    "parallel_projection", "ainf_band", "slice_by_ainf", "BandSum", "band_sum_check",
]
