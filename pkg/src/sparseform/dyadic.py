"""Dyadic grid on [0, 1), step functions on its leaves and the dyadic maximal operator.

A :class:`Grid` of depth ``L`` has ``2**L`` leaves of length ``2**-L``.  A
:class:`Cube` is addressed by ``(level, index)`` and covers
``[index * 2**-level, (index + 1) * 2**-level)``.  Every function or weight is a
:class:`StepFn`, i.e. a vector of leaf values.

Averages are read off a mean pyramid built by pairwise halving, so
``average(f, Q)`` is the same number no matter which route asked for it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np

from .exceptions import DegenerateWeightError, DomainError, StructuralError

MAX_DEPTH = 16


@dataclass(frozen=True)
class Grid:
    depth: int

    def __post_init__(self):
        if not isinstance(self.depth, (int, np.integer)) or not 0 <= self.depth <= MAX_DEPTH:
            raise StructuralError(f"grid depth must be an integer in [0, {MAX_DEPTH}], got {self.depth!r}")
        object.__setattr__(self, "depth", int(self.depth))

    @property
    def n_leaves(self) -> int:
        return 1 << self.depth

    @property
    def leaf_length(self) -> float:
        return 2.0 ** -self.depth

    @property
    def root(self) -> "Cube":
        return Cube(0, 0)

    def cubes(self) -> Iterator["Cube"]:
        """All cubes, coarse to fine, left to right."""
        for level in range(self.depth + 1):
            for index in range(1 << level):
                yield Cube(level, index)

    @property
    def n_cubes(self) -> int:
        return (1 << (self.depth + 1)) - 1

    def __contains__(self, cube) -> bool:
        return isinstance(cube, Cube) and cube.level <= self.depth

    def check(self, cube: "Cube") -> "Cube":
        if cube not in self:
            raise StructuralError(f"{cube} lies below grid depth {self.depth}")
        return cube


@dataclass(frozen=True, order=True)
class Cube:
    level: int
    index: int

    def __post_init__(self):
        if self.level < 0 or not 0 <= self.index < (1 << self.level):
            raise StructuralError(f"invalid dyadic cube (level={self.level}, index={self.index})")

    @property
    def length(self) -> float:
        return 2.0 ** -self.level

    @property
    def interval(self) -> tuple[float, float]:
        return self.index * self.length, (self.index + 1) * self.length

    def parent(self) -> "Cube":
        if self.level == 0:
            raise StructuralError("the root cube has no parent")
        return Cube(self.level - 1, self.index >> 1)

    def children(self) -> tuple["Cube", "Cube"]:
        return Cube(self.level + 1, 2 * self.index), Cube(self.level + 1, 2 * self.index + 1)

    def ancestors(self) -> Iterator["Cube"]:
        """Strict ancestors, nearest first."""
        level, index = self.level, self.index
        while level > 0:
            level -= 1
            index >>= 1
            yield Cube(level, index)

    def contains(self, other: "Cube") -> bool:
        """``other ⊆ self``."""
        if other.level < self.level:
            return False
        return (other.index >> (other.level - self.level)) == self.index

    def strictly_contains(self, other: "Cube") -> bool:
        return other.level > self.level and self.contains(other)

    def leaf_slice(self, depth: int) -> slice:
        if self.level > depth:
            raise StructuralError(f"{self} lies below grid depth {depth}")
        width = 1 << (depth - self.level)
        return slice(self.index * width, (self.index + 1) * width)

    def __str__(self) -> str:
        a, b = self.interval
        return f"[{a:g},{b:g})"


@dataclass(frozen=True, eq=False)
class StepFn:
    """A function constant on each leaf of ``grid``.

    ``values`` is copied into a read-only float64 array of length ``2**depth``.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (self.grid.n_leaves,):
            raise StructuralError(
                f"expected {self.grid.n_leaves} leaf values for depth {self.grid.depth}, got shape {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "StepFn":
        return cls(grid, np.full(grid.n_leaves, float(c)))

    @classmethod
    def indicator(cls, grid: Grid, cube: Cube) -> "StepFn":
        values = np.zeros(grid.n_leaves)
        values[cube.leaf_slice(grid.depth)] = 1.0
        return cls(grid, values)

    @cached_property
    def pyramid(self) -> tuple[np.ndarray, ...]:
        """``pyramid[l][k]`` is the mean over cube ``(l, k)``, by pairwise halving."""
        levels = [self.values]
        current = self.values
        for _ in range(self.grid.depth):
            current = 0.5 * (current[0::2] + current[1::2])
            levels.append(current)
        return tuple(reversed(levels))

    def is_positive(self) -> bool:
        return bool(np.all(self.values > 0) and np.all(np.isfinite(self.values)))

    def require_weight(self, name: str = "weight") -> "StepFn":
        if not np.all(np.isfinite(self.values)):
            raise DomainError(f"{name} has non-finite leaf values")
        if np.any(self.values <= 0):
            raise DomainError(f"{name} must be strictly positive on every leaf")
        return self

    def _same_grid(self, other: "StepFn") -> None:
        if other.grid != self.grid:
            raise StructuralError(f"grid mismatch: depth {self.grid.depth} vs {other.grid.depth}")

    def map(self, fn) -> "StepFn":
        return StepFn(self.grid, fn(self.values))

    def __mul__(self, other):
        if isinstance(other, StepFn):
            self._same_grid(other)
            return StepFn(self.grid, self.values * other.values)
        return StepFn(self.grid, self.values * float(other))

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, StepFn):
            self._same_grid(other)
            return StepFn(self.grid, self.values + other.values)
        return StepFn(self.grid, self.values + float(other))

    def __pow__(self, exponent: float) -> "StepFn":
        return StepFn(self.grid, self.values ** float(exponent))

    def __abs__(self) -> "StepFn":
        return StepFn(self.grid, np.abs(self.values))

    def restrict(self, cube: Cube) -> np.ndarray:
        return self.values[cube.leaf_slice(self.grid.depth)]


Measure = Optional[StepFn]
"""A carrier measure: ``None`` stands for Lebesgue measure, a StepFn for ``w dx``."""


def average(f: StepFn, Q: Cube) -> float:
    """Mean of ``f`` over ``Q``."""
    f.grid.check(Q)
    return float(f.pyramid[Q.level][Q.index])


def weighted_average(f: StepFn, w: StepFn, Q: Cube) -> float:
    """``∫_Q f w / ∫_Q w``."""
    f._same_grid(w)
    mass = average(w, Q)
    if mass <= 0:
        raise DegenerateWeightError(f"weight has zero mass on {Q}")
    return average(f * w, Q) / mass


def integrate(f: StepFn, Q: Cube, w: Measure = None) -> float:
    """``∫_Q f dw``; ``w=None`` integrates against Lebesgue measure."""
    if w is not None:
        f = f * w
    return average(f, Q) * Q.length


def mass(w: Measure, Q: Cube, grid: Optional[Grid] = None) -> float:
    """Measure of ``Q`` under the carrier ``w`` (Lebesgue when ``w`` is None)."""
    if w is None:
        if grid is not None:
            grid.check(Q)
        return Q.length
    return average(w, Q) * Q.length


def level_averages(values: np.ndarray, level: int) -> np.ndarray:
    """Means of a leaf vector over every cube of ``level`` (plain reshape, not the pyramid)."""
    return values.reshape(1 << level, -1).mean(axis=1)


def dyadic_maximal(v: StepFn, Q: Cube) -> StepFn:
    """Dyadic maximal function of ``v·1_Q`` localised to subcubes of ``Q``.

    At a leaf ``x ∈ Q`` the value is the largest ``⟨v⟩_{Q'}`` over dyadic
    ``x ∈ Q' ⊆ Q``; outside ``Q`` it is zero.
    """
    grid = v.grid
    grid.check(Q)
    L = grid.depth
    out = np.zeros(grid.n_leaves)
    sl = Q.leaf_slice(L)
    running = np.full(sl.stop - sl.start, v.pyramid[Q.level][Q.index])
    for level in range(Q.level + 1, L + 1):
        width = 1 << (L - level)
        lo = Q.index << (level - Q.level)
        hi = (Q.index + 1) << (level - Q.level)
        running = np.maximum(running, np.repeat(v.pyramid[level][lo:hi], width))
    out[sl] = running
    return StepFn(grid, out)


def maximal_integrals(v: StepFn) -> list[np.ndarray]:
    """``∫_Q M(v 1_Q) dx`` for every cube, returned level by level.

    Vectorised over all cubes of a level; agrees with integrating
    :func:`dyadic_maximal` cube by cube.
    """
    L = v.grid.depth
    pyr = v.pyramid
    n = v.grid.n_leaves
    result = []
    for top in range(L + 1):
        width_top = 1 << (L - top)
        running = np.repeat(pyr[top], width_top)
        for level in range(top + 1, L + 1):
            running = np.maximum(running, np.repeat(pyr[level], 1 << (L - level)))
        result.append(running.reshape(1 << top, width_top).sum(axis=1) / n)
    return result


# --- text format -----------------------------------------------------------

def format_stepfn(f: StepFn) -> str:
    return f"depth {f.grid.depth}\n" + " ".join(repr(float(x)) for x in f.values) + "\n"


def parse_stepfn(text: str) -> StepFn:
    tokens = text.split()
    if len(tokens) < 2 or tokens[0] != "depth":
        raise StructuralError("step function text must start with 'depth L'")
    grid = Grid(int(tokens[1]))
    values = [float(t) for t in tokens[2:]]
    if len(values) != grid.n_leaves:
        raise StructuralError(f"expected {grid.n_leaves} leaf values, found {len(values)}")
    return StepFn(grid, np.array(values))


def read_stepfn(path: Union[str, Path]) -> StepFn:
    return parse_stepfn(Path(path).read_text())


def write_stepfn(f: StepFn, path: Union[str, Path]) -> None:
    Path(path).write_text(format_stepfn(f))
