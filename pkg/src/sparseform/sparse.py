"""Sparse families of dyadic cubes.

A family ``S`` is sparse with respect to a carrier measure ``μ`` when, for every
member ``Q``, the members strictly inside ``Q`` cover at most ``factor·μ(Q)``.
Unions are evaluated exactly as leaf masks on the finest grid involved.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Union

import numpy as np

from .dyadic import Cube, Grid, Measure
from .exceptions import CapacityError, ParameterError, StructuralError

# relative slack for float carrier masses; Lebesgue masses are exact dyadic rationals
_SPARSE_RTOL = 1e-12
EXHAUSTIVE_CAP = 20


def _check_factor(factor: float) -> float:
    if not 0.0 < factor < 1.0:
        raise ParameterError(f"sparsity factor must lie in (0, 1), got {factor}")
    return float(factor)


def _leaf_weights(carrier: Measure, depth: int) -> np.ndarray:
    if carrier is None:
        return np.full(1 << depth, 2.0 ** -depth)
    if carrier.grid.depth != depth:
        raise StructuralError(f"carrier lives on depth {carrier.grid.depth}, cubes need depth {depth}")
    return carrier.values * carrier.grid.leaf_length


def _cube_mask(cube: Cube, depth: int) -> np.ndarray:
    mask = np.zeros(1 << depth, dtype=bool)
    mask[cube.leaf_slice(depth)] = True
    return mask


class _Masses:
    """Carrier masses of leaf masks, summed in a fixed order."""

    def __init__(self, carrier: Measure, depth: int):
        self.depth = depth
        self.leaf = _leaf_weights(carrier, depth)

    def of(self, mask: np.ndarray) -> float:
        return float(self.leaf[mask].sum())

    def cube(self, cube: Cube) -> float:
        return float(self.leaf[cube.leaf_slice(self.depth)].sum())


def _inner_unions(cubes: list[Cube], depth: int) -> list[np.ndarray]:
    """For each cube, the leaf mask of the union of members strictly inside it."""
    levels = np.array([c.level for c in cubes], dtype=np.int64)
    indices = np.array([c.index for c in cubes], dtype=np.int64)
    unions = []
    for q in cubes:
        deeper = levels > q.level
        inside = deeper & ((indices >> np.where(deeper, levels - q.level, 0)) == q.index)
        mask = np.zeros(1 << depth, dtype=bool)
        for j in np.flatnonzero(inside):
            mask[cubes[j].leaf_slice(depth)] = True
        unions.append(mask)
    return unions


def _resolve_depth(cubes: Iterable[Cube], carrier: Measure, grid: Optional[Grid]) -> int:
    if carrier is not None:
        depth = carrier.grid.depth
    elif grid is not None:
        depth = grid.depth
    else:
        depth = max((c.level for c in cubes), default=0)
    for c in cubes:
        if c.level > depth:
            raise StructuralError(f"{c} lies below grid depth {depth}")
    return depth


def is_sparse(cubes: Iterable[Cube], carrier: Measure = None, factor: float = 0.5,
              grid: Optional[Grid] = None) -> bool:
    """True iff every member's strictly smaller members cover at most ``factor`` of its carrier mass."""
    factor = _check_factor(factor)
    cubes = sorted(set(cubes))
    if not cubes:
        return True
    depth = _resolve_depth(cubes, carrier, grid)
    masses = _Masses(carrier, depth)
    for q, union in zip(cubes, _inner_unions(cubes, depth)):
        if masses.of(union) > factor * masses.cube(q) * (1 + _SPARSE_RTOL):
            return False
    return True


@dataclass(frozen=True, eq=False)
class SparseFamily:
    """A finite set of cubes on ``grid`` together with its sparsity certificate."""

    grid: Grid
    cubes: tuple[Cube, ...]
    carrier: Measure = field(default=None, repr=False)
    factor: float = 0.5
    verified: bool = False

    def __post_init__(self):
        cubes = tuple(sorted(set(self.cubes)))
        for c in cubes:
            self.grid.check(c)
        object.__setattr__(self, "cubes", cubes)

    @classmethod
    def build(cls, grid: Grid, cubes: Iterable[Cube], carrier: Measure = None,
              factor: float = 0.5) -> "SparseFamily":
        """Verify sparsity and return a certified family; raises if the cubes are not sparse."""
        cubes = tuple(sorted(set(cubes)))
        if not is_sparse(cubes, carrier, factor, grid=grid):
            raise ParameterError("cubes are not sparse for the given carrier and factor")
        return cls(grid, cubes, carrier, factor, verified=True)

    def require_verified(self) -> "SparseFamily":
        if not self.verified:
            raise StructuralError("unverified sparse family cannot enter norm computations")
        return self

    def __len__(self) -> int:
        return len(self.cubes)

    def __iter__(self) -> Iterator[Cube]:
        return iter(self.cubes)

    def __contains__(self, cube) -> bool:
        return cube in self._index

    @property
    def _index(self) -> dict:
        idx = self.__dict__.get("_index_cache")
        if idx is None:
            idx = {c: i for i, c in enumerate(self.cubes)}
            object.__setattr__(self, "_index_cache", idx)
        return idx

    def index_of(self, cube: Cube) -> int:
        return self._index[cube]

    def membership(self) -> np.ndarray:
        """0/1 matrix of shape (len(family), n_leaves): row ``i`` marks the leaves of cube ``i``."""
        P = np.zeros((len(self.cubes), self.grid.n_leaves))
        for i, c in enumerate(self.cubes):
            P[i, c.leaf_slice(self.grid.depth)] = 1.0
        return P

    def maximal(self) -> tuple[Cube, ...]:
        """Members not strictly contained in another member."""
        members = set(self.cubes)
        return tuple(c for c in self.cubes if not any(a in members for a in c.ancestors()))

    def subfamily(self, cubes: Iterable[Cube], carrier: Measure = None, factor: Optional[float] = None,
                  verify: bool = True) -> "SparseFamily":
        factor = self.factor if factor is None else factor
        cubes = tuple(cubes)
        if verify:
            return SparseFamily.build(self.grid, cubes, carrier, factor)
        return SparseFamily(self.grid, cubes, carrier, factor, verified=False)


def random_sparse_family(grid: Grid, carrier: Measure = None, factor: float = 0.5,
                         density: float = 0.5, seed: int = 0) -> SparseFamily:
    """Grow a random sparse family.

    The root is admitted first so the output is never empty.  The remaining
    cubes are visited in a random order and each is admitted with probability
    ``density`` when both its own inner union and the inner unions of its
    member ancestors stay within ``factor`` of their carrier mass.
    """
    factor = _check_factor(factor)
    if not 0.0 < density <= 1.0:
        raise ParameterError(f"density must lie in (0, 1], got {density}")
    rng = np.random.default_rng(seed)
    depth = grid.depth
    masses = _Masses(carrier, depth)
    root = grid.root
    members: dict[Cube, np.ndarray] = {root: np.zeros(1 << depth, dtype=bool)}
    rest = [c for c in grid.cubes() if c.level > 0]
    order = rng.permutation(len(rest))
    draws = rng.random(len(rest))
    for k in order:
        if draws[k] >= density:
            continue
        cube = rest[k]
        cmask = _cube_mask(cube, depth)
        inner = np.zeros(1 << depth, dtype=bool)
        for c in members:
            if cube.strictly_contains(c):
                inner |= _cube_mask(c, depth)
        if masses.of(inner) > factor * masses.cube(cube):
            continue
        updated = []
        for a in cube.ancestors():
            if a not in members:
                continue
            union = members[a] | cmask
            if masses.of(union) > factor * masses.cube(a):
                break
            updated.append((a, union))
        else:
            for a, union in updated:
                members[a] = union
            members[cube] = inner
    return SparseFamily.build(grid, members.keys(), carrier, factor)


def disjoint_parts(family: SparseFamily) -> dict[Cube, np.ndarray]:
    """``E_Q = Q minus the members strictly inside Q``, as leaf masks on the family grid."""
    family.require_verified()
    depth = family.grid.depth
    cubes = list(family.cubes)
    parts = {}
    for q, union in zip(cubes, _inner_unions(cubes, depth)):
        parts[q] = _cube_mask(q, depth) & ~union
    return parts


def _bitmask(cube: Cube, depth: int) -> int:
    width = 1 << (depth - cube.level)
    return ((1 << width) - 1) << (cube.index * width)


def enumerate_sparse_subfamilies(family: SparseFamily, carrier: Measure = None, factor: float = 0.5,
                                 greedy: bool = False,
                                 priority: Optional[Iterable[float]] = None) -> Iterator[SparseFamily]:
    """Carrier-sparse subfamilies of ``family``.

    Exhaustive mode yields every sparse subset (the empty one included) and is
    capped at :data:`EXHAUSTIVE_CAP` cubes.  Greedy mode yields one maximal
    sparse subset per starting cube: cubes are taken in ``priority`` order
    (descending; default is family order) and admitted while sparsity holds.
    """
    factor = _check_factor(factor)
    cubes = list(family.cubes)
    depth = family.grid.depth
    if greedy:
        yield from _greedy_subfamilies(family, cubes, carrier, factor, priority)
        return
    if len(cubes) > EXHAUSTIVE_CAP:
        raise CapacityError(
            f"exhaustive enumeration is capped at {EXHAUSTIVE_CAP} cubes (family has {len(cubes)}); use greedy mode"
        )
    for subset in _sparse_subsets(cubes, carrier, factor, depth):
        sub = family.subfamily(subset, carrier=carrier, factor=factor, verify=False)
        if not is_sparse(sub.cubes, carrier, factor, grid=family.grid):
            raise AssertionError("enumerator produced a non-sparse subset")
        yield SparseFamily(family.grid, sub.cubes, carrier, factor, verified=True)


def _sparse_subsets(cubes: list[Cube], carrier: Measure, factor: float, depth: int) -> Iterator[tuple[Cube, ...]]:
    """Depth-first enumeration over coarse-to-fine ordered cubes.

    Subsets of a sparse family are sparse, so a failed extension prunes its
    whole subtree.  A new cube is finer than or disjoint from every chosen one,
    which means only its chosen ancestors need rechecking.
    """
    leaf = _leaf_weights(carrier, depth)
    order = sorted(cubes)
    bits = [_bitmask(c, depth) for c in order]
    cube_mass = [float(leaf[c.leaf_slice(depth)].sum()) for c in order]

    def mass_of(mask: int) -> float:
        idx = [i for i in range(1 << depth) if mask >> i & 1]
        return float(leaf[idx].sum()) if idx else 0.0

    chosen: list[int] = []
    cover: dict[int, int] = {}

    def rec(start: int):
        yield tuple(order[i] for i in chosen)
        for j in range(start, len(order)):
            cj = order[j]
            touched = []
            ok = True
            for i in chosen:
                if order[i].strictly_contains(cj):
                    new = cover[i] | bits[j]
                    if new != cover[i] and mass_of(new) > factor * cube_mass[i] * (1 + _SPARSE_RTOL):
                        ok = False
                        break
                    touched.append((i, cover[i], new))
            if not ok:
                continue
            for i, _, new in touched:
                cover[i] = new
            chosen.append(j)
            cover[j] = 0
            yield from rec(j + 1)
            chosen.pop()
            del cover[j]
            for i, old, _ in touched:
                cover[i] = old

    yield from rec(0)


def max_weight_sparse_subset(cubes: list[Cube], scores: Iterable[float], carrier: Measure, factor: float,
                             depth: int) -> tuple[tuple[Cube, ...], float]:
    """Sparse subset of ``cubes`` maximising the sum of nonnegative ``scores``.

    Branch and bound over the same coarse-to-fine include/exclude tree as the
    exhaustive enumerator; a branch is cut when its score plus every remaining
    score cannot beat the incumbent.
    """
    leaf = _leaf_weights(carrier, depth)
    order = sorted(range(len(cubes)), key=lambda i: cubes[i])
    cs = [cubes[i] for i in order]
    sc = [float(x) for x in np.asarray(list(scores), dtype=float)[order]]
    if any(x < 0 for x in sc):
        raise ParameterError("scores must be nonnegative")
    bits = [_bitmask(c, depth) for c in cs]
    cube_mass = [float(leaf[c.leaf_slice(depth)].sum()) for c in cs]
    suffix = np.concatenate([np.cumsum(sc[::-1])[::-1], [0.0]])
    cache: dict[int, float] = {}

    def mass_of(mask: int) -> float:
        m = cache.get(mask)
        if m is None:
            m = float(sum(leaf[i] for i in range(1 << depth) if mask >> i & 1))
            cache[mask] = m
        return m

    chosen: list[int] = []
    cover: dict[int, int] = {}
    best = [-1.0, ()]

    def rec(j: int, value: float):
        if value + suffix[j] <= best[0]:
            return
        if j == len(cs):
            best[0], best[1] = value, tuple(cs[i] for i in chosen)
            return
        touched = []
        ok = True
        for i in chosen:
            if cs[i].strictly_contains(cs[j]):
                new = cover[i] | bits[j]
                if new != cover[i] and mass_of(new) > factor * cube_mass[i] * (1 + _SPARSE_RTOL):
                    ok = False
                    break
                touched.append((i, cover[i], new))
        if ok:
            for i, _, new in touched:
                cover[i] = new
            chosen.append(j)
            cover[j] = 0
            rec(j + 1, value + sc[j])
            chosen.pop()
            del cover[j]
            for i, old, _ in touched:
                cover[i] = old
        rec(j + 1, value)

    rec(0, 0.0)
    return best[1], best[0]


def _greedy_subfamilies(family: SparseFamily, cubes: list[Cube], carrier: Measure, factor: float,
                        priority: Optional[Iterable[float]]) -> Iterator[SparseFamily]:
    depth = family.grid.depth
    masses = _Masses(carrier, depth)
    if priority is None:
        ranked = list(range(len(cubes)))
    else:
        prio = np.asarray(list(priority), dtype=float)
        ranked = list(np.argsort(-prio, kind="stable"))
    seen = set()
    for start in range(len(ranked)):
        order = ranked[start:] + ranked[:start]
        chosen: list[Cube] = []
        for j in order:
            candidate = chosen + [cubes[j]]
            if _sparse_with(candidate, masses, factor):
                chosen = candidate
        key = tuple(sorted(chosen))
        if key in seen:
            continue
        seen.add(key)
        yield SparseFamily(family.grid, key, carrier, factor, verified=True)


def _sparse_with(cubes: list[Cube], masses: _Masses, factor: float) -> bool:
    depth = masses.depth
    cubes = sorted(cubes)
    for q, union in zip(cubes, _inner_unions(cubes, depth)):
        if masses.of(union) > factor * masses.cube(q) * (1 + _SPARSE_RTOL):
            return False
    return True


# --- text format -----------------------------------------------------------

def format_family(family: SparseFamily) -> str:
    lines = [f"depth {family.grid.depth}"]
    lines += [f"{c.level} {c.index}" for c in family.cubes]
    return "\n".join(lines) + "\n"


def parse_family(text: str, carrier: Measure = None, factor: float = 0.5) -> SparseFamily:
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or lines[0][0] != "depth":
        raise StructuralError("family text must start with 'depth L'")
    grid = Grid(int(lines[0][1]))
    cubes = [Cube(int(a), int(b)) for a, b in lines[1:]]
    return SparseFamily.build(grid, cubes, carrier, factor)


def read_family(path: Union[str, Path], carrier: Measure = None, factor: float = 0.5) -> SparseFamily:
    return parse_family(Path(path).read_text(), carrier, factor)


def write_family(family: SparseFamily, path: Union[str, Path]) -> None:
    Path(path).write_text(format_family(family))
