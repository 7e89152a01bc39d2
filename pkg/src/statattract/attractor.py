"""Basins of statistical attraction and greedy minimal observable attractors.

A trace lies in the estimated basin of a cell set K when, for every epsilon
of a decreasing ladder, the tail visit frequency of the epsilon-neighborhood
of K stays above 1 - delta_tol.  Minimal attractors are found by greedy cell
removal in ascending order of tail occupation, stopping before the attracted
fraction drops below the target alpha.

Two finite-resolution refinements of the plain greedy are needed to keep the
estimator meaningful on a grid:

* cells whose tail occupation (averaged over attracted traces) is below
  ``tau_zero`` are statistically irrelevant and removed freely;
* a statistically relevant cell whose removal leaves every ladder
  neighborhood unchanged (possible because adjacent closed cells are at
  distance 0) is not removable: such a removal would shrink the set without
  changing anything the frequency estimator can observe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .empirical import limit_set_classify, srb_like_estimate
from .space import CellSet, Grid, eps_neighborhood

__all__ = [
    "AlphaUnreachableError",
    "BasinVerdict",
    "BasinEstimate",
    "AttractorReport",
    "Decomposition",
    "DecompositionEntry",
    "default_ladder",
    "in_basin",
    "basin_estimate",
    "basin_fraction",
    "minimal_alpha_attractor",
    "minimal_restricted",
    "minimal_attracting",
    "decompose",
    "DELTA_TOL",
]

DELTA_TOL = 0.05


class AlphaUnreachableError(RuntimeError):
    """Raised when even the full space attracts less than alpha."""


def default_ladder(grid: Grid) -> tuple:
    """Decreasing epsilon ladder {0.2, 0.1, 0.05, 2/G}, clipped so the
    smallest rung is exactly 2/G."""
    floor_eps = 2.0 / grid.size
    rungs = [e for e in (0.2, 0.1, 0.05) if e > floor_eps]
    return tuple(rungs + [floor_eps])


def _validate_ladder(ladder: Sequence[float], grid: Grid) -> tuple:
    lad = tuple(float(e) for e in ladder)
    if not lad:
        raise ValueError("epsilon ladder must not be empty")
    if any(b >= a for a, b in zip(lad, lad[1:])):
        raise ValueError("epsilon ladder must be strictly decreasing")
    if lad[-1] < 2.0 / grid.size - 1e-15:
        raise ValueError("smallest epsilon must be at least 2/G")
    return lad


def _tau_zero(grid: Grid) -> float:
    # a quarter of the uniform share: below this a cell is statistically
    # irrelevant at the given grid resolution
    return 0.25 / grid.size


@dataclass(frozen=True)
class BasinVerdict:
    in_basin: bool
    scores: dict  # epsilon -> min tail visit frequency


@dataclass(frozen=True)
class BasinEstimate:
    K: CellSet
    ladder: tuple
    delta_tol: float
    verdicts: tuple  # of BasinVerdict, one per trace
    fraction: float


def _tail_occ(trace) -> np.ndarray:
    return trace.occupancies()[trace.tail_slice()]


def _nbhd_masks(K: CellSet, ladder: Sequence[float]) -> list:
    return [eps_neighborhood(K, eps).mask().astype(float) for eps in ladder]


def _verdict_matrix(tails: list, K: CellSet, ladder: Sequence[float],
                    delta_tol: float) -> tuple:
    """Per-trace verdicts and per-(trace, epsilon) min tail frequencies."""
    masks = _nbhd_masks(K, ladder)
    n = len(tails)
    mins = np.empty((n, len(masks)))
    for j, m in enumerate(masks):
        for i, tail in enumerate(tails):
            mins[i, j] = float((tail @ m).min())
    verdicts = np.all(mins >= 1.0 - delta_tol, axis=1)
    return verdicts, mins


def in_basin(trace, K: CellSet, ladder: Optional[Sequence[float]] = None,
             delta_tol: float = DELTA_TOL) -> BasinVerdict:
    """Basin membership verdict for one trace, with per-epsilon scores."""
    if len(K) == 0:
        raise ValueError("empty candidate set")
    lad = _validate_ladder(
        default_ladder(trace.grid) if ladder is None else ladder, trace.grid)
    verdicts, mins = _verdict_matrix([_tail_occ(trace)], K, lad, delta_tol)
    return BasinVerdict(bool(verdicts[0]), dict(zip(lad, mins[0].tolist())))


def basin_estimate(traces: Sequence, K: CellSet,
                   ladder: Optional[Sequence[float]] = None,
                   delta_tol: float = DELTA_TOL) -> BasinEstimate:
    if not traces:
        raise ValueError("need at least one trace")
    if len(K) == 0:
        raise ValueError("empty candidate set")
    grid = traces[0].grid
    lad = _validate_ladder(
        default_ladder(grid) if ladder is None else ladder, grid)
    tails = [_tail_occ(t) for t in traces]
    verdicts, mins = _verdict_matrix(tails, K, lad, delta_tol)
    vs = tuple(
        BasinVerdict(bool(v), dict(zip(lad, row.tolist())))
        for v, row in zip(verdicts, mins)
    )
    return BasinEstimate(K, lad, delta_tol, vs, float(verdicts.mean()))


def basin_fraction(traces: Sequence, K: CellSet,
                   ladder: Optional[Sequence[float]] = None,
                   delta_tol: float = DELTA_TOL) -> float:
    return basin_estimate(traces, K, ladder, delta_tol).fraction


@dataclass(frozen=True)
class AttractorReport:
    """Greedy minimal attractor estimate with its removal audit trail."""

    cells: CellSet
    alpha: Optional[float]
    fraction: float
    removal_trace: tuple  # of (cell, fraction after commit)
    certificate: str
    diagnostics: dict = field(default_factory=dict)
    support_cells: Optional[CellSet] = None
    support_symmetric_difference: Optional[CellSet] = None


@dataclass(frozen=True)
class DecompositionEntry:
    report: AttractorReport
    alpha_i: float
    basin_fraction: float
    residual_fraction: float


@dataclass(frozen=True)
class Decomposition:
    entries: tuple
    covered_fraction: float


def _removal_invisible(K: CellSet, cell: int, ladder: Sequence[float]) -> bool:
    """True when dropping ``cell`` changes no ladder neighborhood."""
    reduced = CellSet(K.grid, K.members - {cell})
    if len(reduced) == 0:
        return False
    for eps in ladder:
        before = eps_neighborhood(K, eps).members
        after = eps_neighborhood(reduced, eps).members
        if before != after:
            return False
    return True


def _greedy_minimal(traces: Sequence, grid: Grid, ladder: tuple,
                    delta_tol: float,
                    accept: Callable[[np.ndarray], bool],
                    relevance_mask: np.ndarray) -> tuple:
    """Shared greedy descent.  ``accept`` maps a per-trace verdict vector to
    whether a candidate set is still good enough; ``relevance_mask`` selects
    the traces whose occupation drives the removal order."""
    tails = [_tail_occ(t) for t in traces]
    tail_means = np.stack([t.mean(axis=0) for t in tails])  # (n_traces, G)
    tau_zero = _tau_zero(grid)

    K = grid.full_set()
    verdicts, _ = _verdict_matrix(tails, K, ladder, delta_tol)
    if not accept(verdicts):
        raise AlphaUnreachableError("alpha unreachable")
    removal_trace: list = []
    certificate = ""

    def occupation_order(verd: np.ndarray) -> tuple:
        rel = verd & relevance_mask
        if not rel.any():
            rel = relevance_mask
        occ = tail_means[rel].mean(axis=0)
        members = K.indices
        order = members[np.lexsort((members, occ[members]))]
        return occ, order

    while True:
        occ, order = occupation_order(verdicts)
        zero_cells = [int(c) for c in order if occ[c] < tau_zero]
        if len(zero_cells) >= len(K):
            zero_cells = zero_cells[: len(K) - 1]
        if zero_cells:
            candidate = CellSet(grid, K.members - set(zero_cells))
            verd2, _ = _verdict_matrix(tails, candidate, ladder, delta_tol)
            if accept(verd2):
                # frequencies are monotone in K, so every intermediate
                # single-cell state of this batch was acceptable too
                K = candidate
                verdicts = verd2
                frac = float(verd2.mean())
                removal_trace.extend((c, frac) for c in zero_cells)
                continue
            committed = False
            for c in zero_cells:
                candidate = CellSet(grid, K.members - {c})
                verd2, _ = _verdict_matrix(tails, candidate, ladder, delta_tol)
                if not accept(verd2):
                    certificate = (
                        f"removing cell {c} drops the attracted fraction "
                        f"below target")
                    break
                K = candidate
                verdicts = verd2
                removal_trace.append((c, float(verd2.mean())))
                committed = True
            if certificate:
                break
            if committed:
                continue
        if len(K) == 1:
            certificate = "removing the last cell would empty the candidate set"
            break
        cell = int(order[0])
        if _removal_invisible(K, cell, ladder) and occ[cell] >= tau_zero:
            certificate = (
                f"cell {cell} carries tail occupation {occ[cell]:.3g} but its "
                f"removal is invisible to every ladder neighborhood")
            break
        candidate = CellSet(grid, K.members - {cell})
        verd2, _ = _verdict_matrix(tails, candidate, ladder, delta_tol)
        if not accept(verd2):
            certificate = (
                f"removing cell {cell} drops the attracted fraction below target")
            break
        K = candidate
        verdicts = verd2
        removal_trace.append((cell, float(verd2.mean())))

    return K, verdicts, tuple(removal_trace), certificate


def _f_image_occupancy(K: CellSet, map_sys, tail_means: np.ndarray,
                       relevant: np.ndarray) -> float:
    """Tail occupation of the image cells of K; K cannot be exactly
    f-invariant on a grid, so this is reported as a diagnostic instead."""
    grid = K.grid
    centers = np.array([grid.cell_center(int(c)) for c in K.indices])
    image_cells = np.unique(grid.cells_of(map_sys.step_fn(centers)))
    sel = relevant if relevant.any() else np.ones(len(tail_means), dtype=bool)
    return float(tail_means[sel][:, image_cells].sum(axis=1).mean())


def _finish_report(traces, grid, ladder, delta_tol, alpha, K, verdicts,
                   removal_trace, certificate, map_sys,
                   relevance_mask) -> AttractorReport:
    tail_means = np.stack([_tail_occ(t).mean(axis=0) for t in traces])
    relevant = verdicts & relevance_mask
    diagnostics = {
        "n_traces": len(traces),
        "kept_cells": len(K),
        "tau_zero": _tau_zero(grid),
        "mean_tail_occupation_of_K": float(
            tail_means[relevant][:, K.indices].sum(axis=1).mean())
        if relevant.any() else 0.0,
    }
    if map_sys is not None:
        diagnostics["f_image_occupancy"] = _f_image_occupancy(
            K, map_sys, tail_means, relevant)
    return AttractorReport(
        cells=K,
        alpha=alpha,
        fraction=float(verdicts.mean()),
        removal_trace=removal_trace,
        certificate=certificate,
        diagnostics=diagnostics,
    )


def minimal_alpha_attractor(traces: Sequence, alpha: float, grid: Grid,
                            ladder: Optional[Sequence[float]] = None,
                            delta_tol: float = DELTA_TOL,
                            map_sys=None) -> AttractorReport:
    """Greedy estimate of a minimal alpha-observable statistical attractor."""
    return minimal_restricted(traces, np.ones(len(traces), dtype=bool),
                              alpha, grid, ladder, delta_tol, map_sys)


def minimal_restricted(traces: Sequence, mask: Sequence[bool], alpha: float,
                       grid: Grid,
                       ladder: Optional[Sequence[float]] = None,
                       delta_tol: float = DELTA_TOL,
                       map_sys=None) -> AttractorReport:
    """Minimal attractor with the attracted fraction counted only over the
    masked traces (still normalized by the total trace count)."""
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must lie in (0, 1]")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (len(traces),):
        raise ValueError("mask length does not match traces")
    lad = _validate_ladder(
        default_ladder(grid) if ladder is None else ladder, grid)
    n_total = len(traces)
    if mask.sum() / n_total < alpha:
        raise AlphaUnreachableError("alpha unreachable")

    def accept(verdicts: np.ndarray) -> bool:
        return (verdicts & mask).sum() / n_total >= alpha

    K, verdicts, removal_trace, certificate = _greedy_minimal(
        traces, grid, lad, delta_tol, accept, mask)
    report = _finish_report(traces, grid, lad, delta_tol, alpha, K, verdicts,
                            removal_trace, certificate, map_sys, mask)
    restricted_fraction = float((verdicts & mask).sum() / n_total)
    report.diagnostics["restricted_fraction"] = restricted_fraction
    return report


def minimal_attracting(traces: Sequence, mask: Optional[Sequence[bool]] = None,
                       ladder: Optional[Sequence[float]] = None,
                       delta_tol: float = DELTA_TOL,
                       map_sys=None,
                       tau_supp: Optional[float] = None) -> AttractorReport:
    """Smallest greedy cell set whose basin contains every masked trace,
    cross-checked against the union of supports of the SRB-like estimate.

    The report carries both constructions and their symmetric difference.
    """
    if mask is None:
        mask = np.ones(len(traces), dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("mask must select at least one trace")
    grid = traces[0].grid
    lad = _validate_ladder(
        default_ladder(grid) if ladder is None else ladder, grid)

    def accept(verdicts: np.ndarray) -> bool:
        return bool(verdicts[mask].all())

    K, verdicts, removal_trace, certificate = _greedy_minimal(
        traces, grid, lad, delta_tol, accept, mask)
    report = _finish_report(traces, grid, lad, delta_tol, None, K, verdicts,
                            removal_trace, certificate, map_sys, mask)

    if tau_supp is None:
        tau_supp = 0.25 / grid.size
    classes = []
    for i in np.nonzero(mask)[0]:
        t = traces[i]
        snaps = [_measure_from_occ_row(grid, row)
                 for row in t.occupancies()[t.tail_slice()]]
        classes.append(limit_set_classify(snaps) if len(snaps) >= 8
                       else _raw_class(snaps))
    reps = srb_like_estimate(classes)
    support = frozenset()
    for measure, _w in reps:
        support |= frozenset(np.nonzero(measure.weights > tau_supp)[0].tolist())
    support_set = CellSet(grid, support)
    sym_diff = CellSet(grid, (K.members - support) | (support - K.members))
    return AttractorReport(
        cells=report.cells,
        alpha=report.alpha,
        fraction=report.fraction,
        removal_trace=report.removal_trace,
        certificate=report.certificate,
        diagnostics={**report.diagnostics, "tau_supp": tau_supp},
        support_cells=support_set,
        support_symmetric_difference=sym_diff,
    )


def _measure_from_occ_row(grid: Grid, row: np.ndarray):
    from .empirical import GriddedMeasure

    total = row.sum()
    return GriddedMeasure(grid, row / total)


def _raw_class(snaps):
    from .empirical import LimitSetClass

    return LimitSetClass("undetermined", (), tuple(snaps), {})


def decompose(traces: Sequence, alpha: float, grid: Grid,
              ladder: Optional[Sequence[float]] = None,
              delta_tol: float = DELTA_TOL,
              map_sys=None) -> Decomposition:
    """Basin-peeling decomposition: repeatedly take a minimal attractor
    restricted to the not-yet-attracted traces, remove what it attracts, and
    finish with one attractor attracting the remainder once that remainder
    falls below alpha.  Produces at most floor(1/alpha) + 1 attractors."""
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must lie in (0, 1]")
    lad = _validate_ladder(
        default_ladder(grid) if ladder is None else ladder, grid)
    tails = [_tail_occ(t) for t in traces]
    n_total = len(traces)
    budget = math.floor(1.0 / alpha) + 1

    remaining = np.ones(n_total, dtype=bool)
    entries: list = []
    while remaining.mean() > delta_tol and len(entries) < budget:
        rem_frac = float(remaining.mean())
        if rem_frac >= alpha:
            report = minimal_restricted(traces, remaining, alpha, grid, lad,
                                        delta_tol, map_sys)
            alpha_i = alpha
        else:
            report = minimal_attracting(traces, remaining, lad, delta_tol,
                                        map_sys)
            alpha_i = rem_frac
        verdicts, _ = _verdict_matrix(tails, report.cells, lad, delta_tol)
        attracted = verdicts & remaining
        if not attracted.any():
            break
        peeled = float(attracted.sum() / n_total)
        remaining = remaining & ~attracted
        entries.append(DecompositionEntry(
            report=report,
            alpha_i=alpha_i,
            basin_fraction=peeled,
            residual_fraction=float(remaining.mean()),
        ))
    return Decomposition(tuple(entries), covered_fraction=1.0 - float(remaining.mean()))
