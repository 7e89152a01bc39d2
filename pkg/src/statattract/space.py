"""One-dimensional state spaces, uniform grids, cell sets and Lebesgue sampling.

The ambient space is either the circle (unit circumference, coordinates in
[0, 1) with wraparound metric) or the interval [0, 1].  A ``Grid`` splits the
space into ``size`` half-open cells ``[i/G, (i+1)/G)`` of Lebesgue measure
exactly ``1/G``; a ``CellSet`` is a union of closed grid cells and is the
finite stand-in for a candidate compact set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = [
    "StateSpace",
    "CIRCLE",
    "INTERVAL",
    "Grid",
    "CellSet",
    "cell_of",
    "eps_neighborhood",
    "lebesgue_fraction",
    "sample_lebesgue",
]


@dataclass(frozen=True)
class StateSpace:
    """Ambient 1D space, ``kind`` is ``"circle"`` or ``"interval"``."""

    kind: str

    def __post_init__(self) -> None:
        if self.kind not in ("circle", "interval"):
            raise ValueError(f"unknown state space kind: {self.kind!r}")

    @property
    def is_circle(self) -> bool:
        return self.kind == "circle"

    def distance(self, x, y):
        """Metric distance; on the circle this is at most 1/2."""
        d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        if self.is_circle:
            d = np.minimum(d, 1.0 - d)
        return d if d.ndim else float(d)

    def contains(self, x: float) -> bool:
        if self.is_circle:
            return 0.0 <= x < 1.0
        return 0.0 <= x <= 1.0


CIRCLE = StateSpace("circle")
INTERVAL = StateSpace("interval")


@dataclass(frozen=True)
class Grid:
    """Uniform partition of a state space into ``size`` half-open cells."""

    space: StateSpace
    size: int

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError("grid size must be a positive integer")

    @property
    def is_power_of_two(self) -> bool:
        return self.size & (self.size - 1) == 0

    def cell_of(self, x: float) -> int:
        """Cell index of a point; the right endpoint folds into the last cell
        on the interval and wraps to cell 0 on the circle."""
        if self.space.is_circle:
            x = x - np.floor(x)
            if x >= 1.0:
                x = 0.0
        i = int(x * self.size)
        if i >= self.size:  # x == 1.0 exactly, or rounding at the far edge
            i = 0 if self.space.is_circle else self.size - 1
        return i

    def cells_of(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`cell_of`."""
        xs = np.asarray(xs, dtype=float)
        if self.space.is_circle:
            xs = xs - np.floor(xs)
            xs = np.where(xs >= 1.0, 0.0, xs)
        idx = (xs * self.size).astype(np.int64)
        np.clip(idx, 0, self.size - 1, out=idx)
        return idx

    def cell_center(self, i: int) -> float:
        return (i + 0.5) / self.size

    def cell_index_distance(self, i: int, j: int) -> int:
        d = abs(i - j)
        if self.space.is_circle:
            d = min(d, self.size - d)
        return d

    def cell_distance(self, i: int, j: int) -> float:
        """Distance between the closed extents of two cells.

        Adjacent cells share an endpoint, so their distance is 0; this
        over-approximates neighborhoods, consistent with candidate sets
        being closed.
        """
        d = self.cell_index_distance(i, j)
        return max(0, d - 1) / self.size

    def full_set(self) -> "CellSet":
        return CellSet(self, frozenset(range(self.size)))


@dataclass(frozen=True)
class CellSet:
    """Union of closed grid cells, identified by their indices."""

    grid: Grid
    members: frozenset

    def __post_init__(self) -> None:
        members = frozenset(int(i) for i in self.members)
        object.__setattr__(self, "members", members)
        if members and (min(members) < 0 or max(members) >= self.grid.size):
            raise ValueError("cell index out of range for grid")

    @classmethod
    def of(cls, grid: Grid, cells: Iterable[int]) -> "CellSet":
        return cls(grid, frozenset(cells))

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, i: int) -> bool:
        return i in self.members

    @property
    def indices(self) -> np.ndarray:
        return np.array(sorted(self.members), dtype=np.int64)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.grid.size, dtype=bool)
        if self.members:
            m[self.indices] = True
        return m

    def union(self, other: "CellSet") -> "CellSet":
        self._check_grid(other)
        return CellSet(self.grid, self.members | other.members)

    def intersection(self, other: "CellSet") -> "CellSet":
        self._check_grid(other)
        return CellSet(self.grid, self.members & other.members)

    def complement(self) -> "CellSet":
        return CellSet(self.grid, frozenset(range(self.grid.size)) - self.members)

    def difference(self, other: "CellSet") -> "CellSet":
        self._check_grid(other)
        return CellSet(self.grid, self.members - other.members)

    def _check_grid(self, other: "CellSet") -> None:
        if other.grid != self.grid:
            raise ValueError("cell sets live on different grids")


def cell_of(grid: Grid, x: float) -> int:
    return grid.cell_of(x)


def _index_distances(grid: Grid, members: np.ndarray) -> np.ndarray:
    """Index distance from every cell to the nearest member cell."""
    G = grid.size
    ks = np.sort(members)
    js = np.arange(G)
    if grid.space.is_circle:
        # wrap by tiling candidates one period left and right
        cand = np.concatenate([ks - G, ks, ks + G])
    else:
        cand = ks
    pos = np.searchsorted(cand, js)
    lo = np.clip(pos - 1, 0, len(cand) - 1)
    hi = np.clip(pos, 0, len(cand) - 1)
    return np.minimum(np.abs(js - cand[lo]), np.abs(js - cand[hi]))


def eps_neighborhood(K: CellSet, eps: float) -> CellSet:
    """All cells whose closed extent lies within distance < ``eps`` of ``K``."""
    if len(K) == 0:
        raise ValueError("empty candidate set")
    if eps <= 0:
        raise ValueError("eps must be positive")
    grid = K.grid
    d_idx = _index_distances(grid, K.indices)
    # metric distance between closed extents is max(0, d_idx - 1) / G
    inside = np.maximum(d_idx - 1, 0) < eps * grid.size
    return CellSet(grid, frozenset(np.nonzero(inside)[0].tolist()))


def lebesgue_fraction(K: CellSet) -> float:
    """Normalized Lebesgue measure of the cell union, ``|K| / G``."""
    return len(K) / K.grid.size


def sample_lebesgue(grid: Grid, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. uniform points on the space, reproducible from ``seed``."""
    if n < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    return rng.random(n)
