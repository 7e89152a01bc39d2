"""Discrete-time maps with uniform stepping and checkpointed orbit traces.

Built-in maps
-------------
``doubling``      2x mod 1 on the circle.
``rotation``      x + theta mod 1 on the circle.
``contraction``   f(0) = 1, f(x) = x/2 on the interval; the empirical
                  measures of every orbit converge to the point mass at 0.
``intermittent``  x + x**(1+gamma) mod 1 on the circle, gamma > 0; 0 is a
                  neutral fixed point.  For gamma >= 1 Lebesgue-a.e. orbit's
                  empirical measures converge to the point mass at 0, the 1D
                  stand-in for the saddle-with-neutral-direction phenomenon
                  on the torus (documented as an analogue, not that system).
``two_basin``     piecewise-linear degree-1 circle homeomorphism fixing
                  0, 1/4, 1/2, 3/4 with 1/4 and 3/4 attracting (slope 1/2)
                  and 0 and 1/2 repelling (slope 3/2); the two basins are
                  (0, 1/2) and (1/2, 1), each of Lebesgue measure 1/2.

Orbits are accumulated on a grid and checkpointed on a geometric schedule;
the snapshot at checkpoint ``n`` is the gridded empirical measure of the
first ``n`` orbit points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .space import CIRCLE, INTERVAL, Grid, StateSpace

__all__ = [
    "MapSystem",
    "OrbitTrace",
    "NumericRangeError",
    "make_map",
    "MAP_NAMES",
    "step",
    "geometric_schedule",
    "run_orbit",
    "run_orbits",
]

_CHUNK = 8192
_MIN_POSITIVE = 2.3e-308  # smallest normal double; keeps contraction orbits off 0


class NumericRangeError(RuntimeError):
    """Raised when an orbit leaves the representable numeric range."""


def _wrap01(x: np.ndarray) -> np.ndarray:
    """Modular reduction by subtract-floor with a clamp into [0, 1)."""
    x = x - np.floor(x)
    return np.where(x >= 1.0, 0.0, x)


@dataclass(frozen=True)
class MapSystem:
    """A named deterministic point-to-point map on a 1D state space.

    ``step_fn`` acts on float arrays.  ``exact_cells`` is an optional exact
    orbit integrator (used by the doubling map, whose float64 orbits collapse
    onto 0 after 53 iterates because each step shifts the mantissa).
    """

    name: str
    space: StateSpace
    params: tuple
    step_fn: Callable[[np.ndarray], np.ndarray]
    exact_cells: Optional[Callable[[float, int, Grid], np.ndarray]] = None

    def param(self, key: str) -> float:
        return dict(self.params)[key]


def _doubling_step(x: np.ndarray) -> np.ndarray:
    return _wrap01(2.0 * x)


def _doubling_exact_cells(x0: float, n: int, grid: Grid) -> np.ndarray:
    """Exact orbit cells of the doubling map via binary-shift sampling.

    The orbit of ``2x mod 1`` is the bit shift on binary expansions.  The
    initial point keeps the 53 mantissa bits of ``x0`` and continues with
    pseudorandom bits seeded from the bit pattern of ``x0``, i.e. we iterate
    exactly on a Lebesgue-typical point within 2**-53 of ``x0``.  Plain
    float64 iteration would reach 0 after 53 steps and stay there.
    """
    G = grid.size
    seed = int(np.float64(x0).view(np.uint64))
    rng = np.random.default_rng(seed)
    total = n + 53
    raw = rng.integers(0, 256, size=(total + 7) // 8, dtype=np.uint8)
    bits = np.unpackbits(raw)[:total]
    frac = float(x0) - math.floor(float(x0))
    for b in range(min(53, total)):
        frac *= 2.0
        bit = int(frac)
        bits[b] = bit
        frac -= bit
    if grid.is_power_of_two:
        g = int(np.log2(G))
        cells = np.zeros(n, dtype=np.int64)
        for b in range(g):
            cells <<= 1
            cells += bits[b:b + n]
        return cells
    x = np.zeros(n)
    w = 0.5
    for b in range(53):
        x += w * bits[b:b + n]
        w *= 0.5
    return grid.cells_of(x)


def _contraction_step(x: np.ndarray) -> np.ndarray:
    # max() keeps strictly positive orbits strictly positive: a float
    # underflow to 0 would spuriously trigger f(0) = 1.
    return np.where(x == 0.0, 1.0, np.maximum(0.5 * x, _MIN_POSITIVE))


_TB_KNOTS = (0.0, 0.125, 0.375, 0.5)


def _two_basin_half(u: np.ndarray) -> np.ndarray:
    # piecewise linear on [0, 1/2): slopes 3/2, 1/2, 3/2 around the
    # attracting fixed point 1/4; arithmetic around 1/4 is exact so orbits
    # settle on the fixed point instead of chattering across a cell edge
    return np.where(
        u < 0.125,
        1.5 * u,
        np.where(u < 0.375, 0.25 + 0.5 * (u - 0.25), 0.5 + 1.5 * (u - 0.5)),
    )


def _two_basin_step(x: np.ndarray) -> np.ndarray:
    upper = x >= 0.5
    u = np.where(upper, x - 0.5, x)
    y = _two_basin_half(u)
    return np.where(upper, 0.5 + y, y)


def make_map(name: str, params: Optional[Mapping[str, float]] = None) -> MapSystem:
    """Construct a built-in map by name; raises ``KeyError`` on unknown names."""
    p = dict(params or {})
    if name == "doubling":
        return MapSystem("doubling", CIRCLE, (), _doubling_step, _doubling_exact_cells)
    if name == "rotation":
        theta = float(p.get("theta", (math.sqrt(5.0) - 1.0) / 2.0))
        return MapSystem("rotation", CIRCLE, (("theta", theta),),
                         lambda x, _t=theta: _wrap01(x + _t))
    if name == "contraction":
        return MapSystem("contraction", INTERVAL, (), _contraction_step)
    if name == "intermittent":
        gamma = float(p.get("gamma", 1.5))
        if gamma <= 0:
            raise ValueError("intermittent map needs gamma > 0")
        return MapSystem("intermittent", CIRCLE, (("gamma", gamma),),
                         lambda x, _g=gamma: _wrap01(x + np.power(x, 1.0 + _g)))
    if name == "two_basin":
        return MapSystem("two_basin", CIRCLE, (), _two_basin_step)
    raise KeyError(f"unknown map name: {name!r}")


MAP_NAMES = ("doubling", "rotation", "contraction", "intermittent", "two_basin")


def step(sys: MapSystem, x: float) -> float:
    """Single application of the map to one point."""
    return float(sys.step_fn(np.asarray([x], dtype=float))[0])


@dataclass(frozen=True)
class OrbitTrace:
    """Checkpointed empirical accumulators of one orbit.

    ``counts[k]`` holds the per-cell visit counts of the first
    ``checkpoints[k]`` orbit points, so each row sums to its checkpoint
    exactly.
    """

    x0: float
    grid: Grid
    checkpoints: tuple
    counts: np.ndarray  # shape (len(checkpoints), G), int64, cumulative

    def __post_init__(self) -> None:
        c = self.counts
        c.flags.writeable = False
        sums = c.sum(axis=1)
        if not np.array_equal(sums, np.asarray(self.checkpoints, dtype=np.int64)):
            raise AssertionError("checkpoint counts do not sum to n")

    @property
    def n_max(self) -> int:
        return int(self.checkpoints[-1])

    def occupancies(self) -> np.ndarray:
        """Per-checkpoint empirical weights, shape (K, G)."""
        n = np.asarray(self.checkpoints, dtype=float)[:, None]
        return self.counts / n

    def tail_slice(self, fraction: float = 1.0 / 3.0) -> slice:
        k = len(self.checkpoints)
        return slice(k - max(1, math.ceil(k * fraction)), k)

    def accumulator_at(self, k: int):
        from .empirical import EmpiricalAccumulator

        return EmpiricalAccumulator(self.grid, self.counts[k].copy(),
                                    int(self.checkpoints[k]))

    def snapshot_at(self, k: int):
        from .empirical import snapshot

        return snapshot(self.accumulator_at(k))


def geometric_schedule(n_max: int, n1: int = 1000, rho: float = 1.5) -> tuple:
    """Checkpoints ``ceil(n1 * rho**k)`` capped by and including ``n_max``."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    pts = []
    v = float(n1)
    while v < n_max:
        c = math.ceil(v)
        if c >= n_max:
            break
        if not pts or c > pts[-1]:
            pts.append(c)
        v *= rho
    pts.append(n_max)
    return tuple(pts)


def _validate_schedule(schedule: Sequence[int], n_max: int) -> tuple:
    sched = tuple(int(s) for s in schedule)
    if not sched:
        raise ValueError("schedule must not be empty")
    if any(s < 1 or s > n_max for s in sched):
        raise ValueError("schedule entries must lie in [1, n_max]")
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise ValueError("schedule must be strictly increasing")
    return sched


def _run_batch(sys: MapSystem, x0s: np.ndarray, grid: Grid,
               schedule: tuple) -> np.ndarray:
    """Step all initial conditions together; returns cumulative counts of
    shape (n_ics, len(schedule), G)."""
    m = len(x0s)
    G = grid.size
    counts = np.zeros((m, G), dtype=np.int64)
    snaps = np.empty((m, len(schedule), G), dtype=np.int64)
    x = np.array(x0s, dtype=float)
    offsets = (np.arange(m, dtype=np.int64) * G)[None, :]
    done = 0
    for k, ck in enumerate(schedule):
        while done < ck:
            block = min(_CHUNK, ck - done)
            cells = np.empty((block, m), dtype=np.int64)
            for t in range(block):
                cells[t] = grid.cells_of(x)
                x = sys.step_fn(x)
            flat = np.bincount((cells + offsets).ravel(), minlength=m * G)
            counts += flat.reshape(m, G)
            done += block
        if not np.all(np.isfinite(x)):
            raise NumericRangeError("orbit escaped numeric range")
        snaps[:, k, :] = counts
    return snaps


def _run_exact(sys: MapSystem, x0: float, grid: Grid, schedule: tuple) -> np.ndarray:
    n_max = schedule[-1]
    counts = np.zeros(grid.size, dtype=np.int64)
    snaps = np.empty((len(schedule), grid.size), dtype=np.int64)
    cells = sys.exact_cells(x0, n_max, grid)
    done = 0
    for k, ck in enumerate(schedule):
        counts += np.bincount(cells[done:ck], minlength=grid.size)
        done = ck
        snaps[k] = counts
    return snaps


def run_orbit(sys: MapSystem, x0: float, n_max: int, grid: Grid,
              schedule: Optional[Sequence[int]] = None) -> OrbitTrace:
    """Accumulate one orbit on the grid and snapshot it at each checkpoint."""
    sched = _validate_schedule(schedule or geometric_schedule(n_max), n_max)
    if not np.isfinite(x0):
        raise NumericRangeError("orbit escaped numeric range")
    if sys.exact_cells is not None:
        snaps = _run_exact(sys, x0, grid, sched)
    else:
        snaps = _run_batch(sys, np.asarray([x0]), grid, sched)[0]
    return OrbitTrace(float(x0), grid, sched, snaps)


def run_orbits(sys: MapSystem, x0s: Sequence[float], n_max: int, grid: Grid,
               schedule: Optional[Sequence[int]] = None,
               workers: int = 1) -> list:
    """Traces for a batch of initial conditions.

    Results are a pure function of ``(sys, x0s, n_max, grid, schedule)`` and
    do not depend on ``workers``; the worker count only partitions the batch.
    """
    sched = _validate_schedule(schedule or geometric_schedule(n_max), n_max)
    x0s = np.asarray(list(x0s), dtype=float)
    if x0s.ndim != 1 or len(x0s) == 0:
        raise ValueError("need at least one initial condition")
    if not np.all(np.isfinite(x0s)):
        raise NumericRangeError("orbit escaped numeric range")

    if sys.exact_cells is not None:
        all_snaps = [_run_exact(sys, float(x0), grid, sched) for x0 in x0s]
        return [OrbitTrace(float(x0), grid, sched, s)
                for x0, s in zip(x0s, all_snaps)]

    workers = max(1, int(workers))
    if workers == 1 or len(x0s) < 2 * workers:
        snaps = _run_batch(sys, x0s, grid, sched)
    else:
        from concurrent.futures import ThreadPoolExecutor

        parts = np.array_split(np.arange(len(x0s)), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda idx: _run_batch(sys, x0s[idx], grid, sched), parts))
        snaps = np.concatenate(results, axis=0)
    return [OrbitTrace(float(x0), grid, sched, snaps[i])
            for i, x0 in enumerate(x0s)]
