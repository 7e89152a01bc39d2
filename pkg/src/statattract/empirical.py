"""Gridded probability measures, mergeable empirical accumulators, a
multi-scale weak* metric, visit-frequency statistics and classification of
weak*-limit sets of empirical measures.

The metric used throughout is the dyadic multi-scale distance

    D(mu, nu) = sum_{l=0}^{log2 G} 2^{-l} * (1/2) * sum_{blocks at level l}
                |mu(block) - nu(block)|,

where level ``l`` splits the grid into ``2^l`` equal blocks.  ``D`` is a true
metric on gridded measures, bounded by 2, exactly computable in O(G), and two
point masses get closer as their cells get closer in the dyadic tree, which is
what makes it a faithful weak*-style distance at grid resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .space import CellSet, Grid, eps_neighborhood

__all__ = [
    "GriddedMeasure",
    "EmpiricalAccumulator",
    "LimitSetClass",
    "merge",
    "snapshot",
    "weakstar_dist",
    "visit_frequency",
    "limit_set_classify",
    "srb_like_estimate",
    "TAU_POINT",
    "TAU_SEGMENT",
    "TAU_LINE",
]

# Classification thresholds, in metric units (the metric is bounded by 2).
TAU_POINT = 0.02
TAU_SEGMENT = 0.2
TAU_LINE = 0.05

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class GriddedMeasure:
    """Probability weights on grid cells."""

    grid: Grid
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.grid.size,):
            raise ValueError("weight vector does not match grid size")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > _WEIGHT_TOL:
            raise ValueError("weights must sum to 1")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @classmethod
    def point_mass(cls, grid: Grid, cell: int) -> "GriddedMeasure":
        w = np.zeros(grid.size)
        w[cell] = 1.0
        return cls(grid, w)

    @classmethod
    def uniform(cls, grid: Grid) -> "GriddedMeasure":
        return cls(grid, np.full(grid.size, 1.0 / grid.size))

    def mix(self, other: "GriddedMeasure", t: float) -> "GriddedMeasure":
        """Convex combination ``t * self + (1 - t) * other``."""
        if other.grid != self.grid:
            raise ValueError("grid mismatch")
        return GriddedMeasure(self.grid, t * self.weights + (1.0 - t) * other.weights)

    def support(self, tau: float = 0.0) -> CellSet:
        return CellSet(self.grid, frozenset(np.nonzero(self.weights > tau)[0].tolist()))


@dataclass
class EmpiricalAccumulator:
    """Integer visit counts per cell; the partial sums of an orbit's
    sequence of empirical measures."""

    grid: Grid
    counts: np.ndarray
    n: int

    @classmethod
    def empty(cls, grid: Grid) -> "EmpiricalAccumulator":
        return cls(grid, np.zeros(grid.size, dtype=np.int64), 0)

    @classmethod
    def from_cells(cls, grid: Grid, cells: np.ndarray) -> "EmpiricalAccumulator":
        counts = np.bincount(np.asarray(cells, dtype=np.int64), minlength=grid.size)
        return cls(grid, counts.astype(np.int64), int(len(cells)))

    def check(self) -> None:
        if int(self.counts.sum()) != self.n:
            raise AssertionError("counts do not sum to n")


def merge(a: EmpiricalAccumulator, b: EmpiricalAccumulator) -> EmpiricalAccumulator:
    """Cellwise sum; exact on integers, so associative and commutative."""
    if a.grid != b.grid:
        raise ValueError("grid mismatch")
    return EmpiricalAccumulator(a.grid, a.counts + b.counts, a.n + b.n)


def snapshot(acc: EmpiricalAccumulator) -> GriddedMeasure:
    if acc.n < 1:
        raise ValueError("cannot take a snapshot of an empty accumulator")
    return GriddedMeasure(acc.grid, acc.counts / acc.n)


def _require_dyadic(grid: Grid) -> int:
    if not grid.is_power_of_two:
        raise ValueError("weak* metric requires a power-of-two grid size")
    return int(np.log2(grid.size))


def weakstar_dist(mu: GriddedMeasure, nu: GriddedMeasure) -> float:
    """Multi-scale dyadic metric between two gridded measures."""
    if mu.grid != nu.grid:
        raise ValueError("grid mismatch")
    levels = _require_dyadic(mu.grid)
    diff = mu.weights - nu.weights
    total = 0.0
    weight = 2.0 ** (-levels)
    for _ in range(levels + 1):
        total += weight * 0.5 * np.abs(diff).sum()
        weight *= 2.0
        if diff.size > 1:
            diff = diff.reshape(-1, 2).sum(axis=1)
    return float(total)


def _level_features(weights: np.ndarray, levels: int) -> np.ndarray:
    """Scaled dyadic block sums of a (k, G) weight matrix.

    The L1 distance between feature rows equals ``weakstar_dist`` of the
    underlying measures, which turns pairwise-distance work into one
    vectorized pass.
    """
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    k = w.shape[0]
    parts = []
    cur = w
    scale = 0.5 * 2.0 ** (-levels)
    for _ in range(levels + 1):
        parts.append(cur * scale)
        scale *= 2.0
        if cur.shape[1] > 1:
            cur = cur.reshape(k, -1, 2).sum(axis=2)
    return np.concatenate(parts, axis=1)


def _features_of(measures: Sequence[GriddedMeasure]) -> np.ndarray:
    levels = _require_dyadic(measures[0].grid)
    return _level_features(np.stack([m.weights for m in measures]), levels)


def _pairwise_l1(a: np.ndarray, b: np.ndarray, chunk: int = 256) -> np.ndarray:
    out = np.empty((a.shape[0], b.shape[0]))
    for lo in range(0, a.shape[0], chunk):
        hi = min(lo + chunk, a.shape[0])
        out[lo:hi] = np.abs(a[lo:hi, None, :] - b[None, :, :]).sum(axis=2)
    return out


def _dist_matrix(measures: Sequence[GriddedMeasure]) -> np.ndarray:
    feats = _features_of(measures)
    return _pairwise_l1(feats, feats)


def visit_frequency(trace, K: CellSet, eps: float):
    """Per-checkpoint frequency of visits to the eps-neighborhood of ``K``.

    Returns a list of ``(n, omega)`` pairs, one per checkpoint of the trace,
    where ``omega`` is the fraction of the first ``n`` orbit points whose cell
    lies in ``eps_neighborhood(K, eps)``.
    """
    if len(K) == 0:
        raise ValueError("empty candidate set")
    nbhd_mask = eps_neighborhood(K, eps).mask()
    if hasattr(trace, "counts"):
        # integer counts make saturation exact: omega == 1.0 when the
        # neighborhood covers every visited cell
        sums = trace.counts[:, nbhd_mask].sum(axis=1)
        omegas = sums / np.asarray(trace.checkpoints, dtype=float)
    else:
        omegas = trace.occupancies() @ nbhd_mask.astype(float)
    return list(zip(trace.checkpoints, omegas.tolist()))


@dataclass(frozen=True)
class LimitSetClass:
    """Classified weak*-limit set of one orbit's tail snapshots.

    ``tag`` is one of ``"point"``, ``"segment"``, ``"cluster"``,
    ``"undetermined"``; ``measures`` holds the representative(s): the point
    measure, the two segment endpoints, or one measure per cluster.
    """

    tag: str
    measures: tuple = ()
    samples: tuple = ()
    diagnostics: dict = field(default_factory=dict)


def _chord_offsets(snaps: Sequence[GriddedMeasure], a: GriddedMeasure,
                   b: GriddedMeasure, npts: int = 201) -> np.ndarray:
    """Distance of each snapshot to the chord of interpolated mixtures."""
    levels = _require_dyadic(a.grid)
    ts = np.linspace(0.0, 1.0, npts)[:, None]
    chord = (1.0 - ts) * a.weights[None, :] + ts * b.weights[None, :]
    chord_feats = _level_features(chord, levels)
    snap_feats = _features_of(snaps)
    return _pairwise_l1(snap_feats, chord_feats).min(axis=1)


def _single_linkage_groups(dmat: np.ndarray, link: float) -> list:
    k = dmat.shape[0]
    group = np.full(k, -1, dtype=int)
    current = 0
    for i in range(k):
        if group[i] >= 0:
            continue
        stack = [i]
        group[i] = current
        while stack:
            u = stack.pop()
            nbrs = np.nonzero((group < 0) & (dmat[u] < link))[0]
            group[nbrs] = current
            stack.extend(nbrs.tolist())
        current += 1
    return [np.nonzero(group == g)[0] for g in range(current)]


def limit_set_classify(snapshots: Sequence[GriddedMeasure],
                       tau_pt: float = TAU_POINT,
                       tau_seg: float = TAU_SEGMENT,
                       tau_line: float = TAU_LINE) -> LimitSetClass:
    """Classify a tail of empirical snapshots as point / segment / cluster.

    Point: all tail snapshots within ``tau_pt`` of each other.  Segment: the
    diameter pair spans more than ``tau_seg``, some third snapshot is more
    than ``tau_seg`` away from both endpoints, and every snapshot lies within
    ``tau_line`` of the chord of mixtures between the endpoints.  Cluster:
    at least two groups, each of diameter below ``tau_pt``, separated by more
    than ``tau_seg``.  Anything else is undetermined.
    """
    snaps = tuple(snapshots)
    if len(snaps) < 8:
        raise ValueError("need at least 8 tail snapshots to classify")
    dmat = _dist_matrix(snaps)
    diam = float(dmat.max())
    diagnostics = {
        "tail_dispersion": diam,
        "mean_pairwise": float(dmat[np.triu_indices(len(snaps), 1)].mean()),
    }
    if diam < tau_pt:
        # average the tail for a stable representative
        mean_w = np.mean([s.weights for s in snaps], axis=0)
        rep = GriddedMeasure(snaps[0].grid, mean_w / mean_w.sum())
        return LimitSetClass("point", (rep,), snaps, diagnostics)

    i, j = np.unravel_index(np.argmax(dmat), dmat.shape)
    mu_a, mu_b = snaps[i], snaps[j]
    if diam > tau_seg:
        interior = np.any((dmat[i] > tau_seg) & (dmat[j] > tau_seg))
        if interior:
            off = float(_chord_offsets(snaps, mu_a, mu_b).max())
            diagnostics["max_chord_offset"] = off
            if off < tau_line:
                return LimitSetClass("segment", (mu_a, mu_b), snaps, diagnostics)

    groups = _single_linkage_groups(dmat, tau_pt)
    if len(groups) >= 2:
        diameters = [float(dmat[np.ix_(g, g)].max()) for g in groups]
        separation = min(
            float(dmat[np.ix_(g1, g2)].min())
            for a_, g1 in enumerate(groups)
            for g2 in groups[a_ + 1:]
        )
        diagnostics["group_separation"] = separation
        if max(diameters) < tau_pt and separation > tau_seg:
            reps = []
            for g in groups:
                mean_w = np.mean([snaps[u].weights for u in g], axis=0)
                reps.append(GriddedMeasure(snaps[0].grid, mean_w / mean_w.sum()))
            return LimitSetClass("cluster", tuple(reps), snaps, diagnostics)

    return LimitSetClass("undetermined", (), snaps, diagnostics)


def srb_like_estimate(classes: Sequence[LimitSetClass],
                      tau_pt: float = TAU_POINT) -> list:
    """Greedy ``tau_pt``-net of representative measures over all tail
    snapshots of all classified initial conditions.

    Every tail snapshot ends up within ``tau_pt`` of some representative and
    every representative is itself one of the snapshots.  Returns
    ``(measure, multiplicity)`` pairs; multiplicities are the fraction of
    snapshots nearest to each representative and sum to 1.
    """
    all_snaps = [s for c in classes for s in c.samples]
    if not all_snaps:
        raise ValueError("no classified initial conditions")
    feats = _features_of(all_snaps)
    # walk snapshots latest-first so representatives are the most converged
    # exemplars of their tau_pt-ball
    rep_idx: list = []
    for i in reversed(range(len(all_snaps))):
        if not rep_idx or np.abs(feats[rep_idx] - feats[i]).sum(axis=1).min() > tau_pt:
            rep_idx.append(i)
    reps = [all_snaps[i] for i in rep_idx]
    nearest = _pairwise_l1(feats, feats[rep_idx]).argmin(axis=1)
    counts = np.bincount(nearest, minlength=len(reps)).astype(float)
    weights = counts / counts.sum()
    return list(zip(reps, weights.tolist()))
