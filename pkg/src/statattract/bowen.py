"""Reduced symbolic model of a heteroclinic cycle between two saddles.

An orbit shuttles between neighborhoods U1, U2 of two saddle fixed points
x1, x2 with expanding eigenvalues sigma1, sigma2 > 1.  On the i-th approach
the orbit arrives at distance d (resp. d') from the local stable manifold
of x2 (resp. x1); writing L = -ln d and L' = -ln d', the time spent near a
saddle is N = L / ln(sigma), and the return maps of the three regimes act on
(L, L') as

    A (hyperdissipative near x2, weakly dissipative near x1):
        L  <- L'**2 + ln r,     L' <- L'        + ln r
    B (weakly dissipative near both):
        L  <- L'    + ln r,     L' <- L         + ln r
    C (hyperdissipative near both):
        L  <- L'**2 + ln r,     L' <- L**2      + ln r

with a fixed per-transit contraction ratio r in [2, 3].  Under A the visit
frequency of U1 tends to 0, under B it converges to an explicit constant
t(sigma1, sigma2), and under C the staying times grow doubly exponentially so
the frequency sweeps between 0 and 1 forever.

Everything is carried in log domain: distances as L = -ln d, staying times
as ln N, cumulative occupation times by log-sum-exp.  Visit frequencies are
ratios of sums and stay representable even when d underflows doubly
exponentially.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .space import INTERVAL, Grid

__all__ = [
    "SaddleParams",
    "RegimeRule",
    "RULE_A",
    "RULE_B",
    "RULE_C",
    "BowenLedger",
    "SymbolicTrace",
    "CycleOverflowError",
    "staying_time",
    "predicted_t",
    "run_cycles",
    "classify_regime",
    "RegimeVerdict",
    "default_saddle_params",
    "symbolic_trace",
    "ledger_snapshots",
    "BOWEN_GRID",
    "CELL_X1",
    "CELL_X2",
    "CELL_TRANSIT",
]

L_CAP = 1e100
_NEG_INF = float("-inf")

# Symbolic state space: the two saddles and the transit symbol embedded in a
# small dyadic grid so the measure / metric machinery applies unchanged.
BOWEN_GRID = Grid(INTERVAL, 8)
CELL_X1 = 0
CELL_X2 = 4
CELL_TRANSIT = 6
BOWEN_LADDER = (0.25,)


class CycleOverflowError(RuntimeError):
    """Raised when log-distances leave the representable float range."""


@dataclass(frozen=True)
class SaddleParams:
    """Parameters of the two-saddle cycle.

    ``L0_prime`` is the initial value of -ln d' (first approach distance to
    x1), ``transit_k`` the step cost of each half-transit, and ``r`` the
    per-transit distance division factor.
    """

    sigma1: float
    sigma2: float
    L0_prime: float = 3.0
    transit_k: int = 10
    r: float = 2.0

    def __post_init__(self) -> None:
        if not (self.sigma1 > 1.0 and self.sigma2 > 1.0):
            raise ValueError("expanding eigenvalues must exceed 1")
        if not self.L0_prime > 0:
            raise ValueError("L0_prime must be positive")
        if self.transit_k < 0:
            raise ValueError("transit cost must be nonnegative")
        if not (2.0 <= self.r <= 3.0):
            raise ValueError("dissipation ratio must lie in [2, 3]")


@dataclass(frozen=True)
class RegimeRule:
    """Log-domain coupling of the approach distances; tag in {A, B, C}."""

    tag: str

    def __post_init__(self) -> None:
        if self.tag not in ("A", "B", "C"):
            raise ValueError("regime tag must be A, B or C")

    def next_L(self, L_prime: float, ln_r: float) -> float:
        if self.tag == "B":
            return L_prime + ln_r
        return L_prime * L_prime + ln_r

    def next_L_prime(self, L_prime: float, L_new: float, ln_r: float) -> float:
        if self.tag == "A":
            return L_prime + ln_r
        if self.tag == "B":
            return L_new + ln_r
        return L_new * L_new + ln_r


RULE_A = RegimeRule("A")
RULE_B = RegimeRule("B")
RULE_C = RegimeRule("C")


def default_saddle_params(rule: RegimeRule, sigma1: float, sigma2: float,
                          L0_prime: float = 3.0, transit_k: int = 10,
                          r: Optional[float] = None) -> SaddleParams:
    """Per-regime defaults: r = 2.5 where a branch is hyperdissipative
    (A, C), r = 2.0 for the weakly dissipative regime B."""
    if r is None:
        r = 2.0 if rule.tag == "B" else 2.5
    return SaddleParams(sigma1, sigma2, L0_prime, transit_k, r)


def staying_time(L: float, sigma: float) -> float:
    """ln of the staying time N = L / ln(sigma) near a saddle."""
    if not L > 0:
        raise ValueError("log-distance must be positive")
    if not sigma > 1:
        raise ValueError("eigenvalue must exceed 1")
    return math.log(L) - math.log(math.log(sigma))


def predicted_t(sigma1: float, sigma2: float) -> float:
    """Limit visit frequency of U1 in regime B.

    Evaluates (1 + q) / (2 + q + 1/q) with q = ln(sigma2)/ln(sigma1); this
    equals ln(sigma2) / (ln(sigma1) + ln(sigma2)).
    """
    if not (sigma1 > 1 and sigma2 > 1):
        raise ValueError("eigenvalues must exceed 1")
    q = math.log(sigma2) / math.log(sigma1)
    return (1.0 + q) / (2.0 + q + 1.0 / q)


@dataclass
class BowenLedger:
    """Log-domain staying times and cumulative visit frequencies.

    ``samples`` arrays are aligned: one entry per recorded stopping time.
    At each of them omega_u1 + omega_u2 + omega_transit = 1 up to float
    rounding (the three shares come out of one log-sum-exp denominator).
    """

    params: SaddleParams
    rule: RegimeRule
    visit_index: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    saddle: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    ln_n: np.ndarray = field(default_factory=lambda: np.empty(0))
    omega_u1: np.ndarray = field(default_factory=lambda: np.empty(0))
    omega_u2: np.ndarray = field(default_factory=lambda: np.empty(0))
    omega_transit: np.ndarray = field(default_factory=lambda: np.empty(0))
    is_boundary: np.ndarray = field(default_factory=lambda: np.empty(0, bool))
    stays: list = field(default_factory=list)  # (visit, saddle, ln_N)
    ln_T1: float = _NEG_INF
    ln_T2: float = _NEG_INF
    ln_T_transit: float = _NEG_INF
    cycles_run: int = 0
    truncated: bool = False

    @property
    def n_samples(self) -> int:
        return len(self.ln_n)

    def tail_slice(self, fraction: float = 1.0 / 3.0) -> slice:
        k = self.n_samples
        return slice(k - max(1, math.ceil(k * fraction)), k)


def _lse(a: float, b: float) -> float:
    if a == _NEG_INF:
        return b
    if b == _NEG_INF:
        return a
    m = a if a > b else b
    return m + math.log(math.exp(a - m) + math.exp(b - m))


def _stay_stopping_logs(ln_N: float, ln_n0: float, ln_ratio: float) -> np.ndarray:
    """Intra-stay stopping times (as ln s, ending exactly at ln_N).

    When a stay is at least as long as all accumulated history the visit
    frequency sweeps across (0, 1) within the stay, so stopping times follow
    a geometric ladder fine enough to resolve the sweep.  Otherwise the
    frequency barely moves and the quarter points suffice.
    """
    if ln_n0 == _NEG_INF or ln_N >= ln_n0:
        if ln_N <= 0:
            return np.array([ln_N])
        ladder = np.arange(0.0, ln_N, ln_ratio)
        return np.append(ladder, ln_N)
    return ln_N + np.log(np.array([0.25, 0.5, 0.75, 1.0]))


def run_cycles(params: SaddleParams, rule: RegimeRule, m: int,
               sample_ratio: float = 1.05) -> BowenLedger:
    """Run ``m`` full cycles (one stay at each saddle plus two half-transits)
    and record visit frequencies at stay boundaries and intra-stay stopping
    times.

    For rule C the recursion is halted once a log-distance exceeds
    ``L_CAP`` = 1e100 and the ledger is marked truncated.
    """
    if m < 1:
        raise ValueError("need at least one cycle")
    ledger = BowenLedger(params=params, rule=rule)
    ln_r = math.log(params.r)
    ln_k = math.log(params.transit_k) if params.transit_k > 0 else _NEG_INF
    ln_ratio = math.log(sample_ratio)

    vis_idx: list = []
    saddles: list = []
    ln_ns: list = []
    w1s: list = []
    w2s: list = []
    wtrs: list = []
    bounds: list = []

    ln_T1 = ln_T2 = ln_Ttr = _NEG_INF
    L_prime = params.L0_prime

    def record_stay(visit: int, saddle: int, ln_N: float) -> None:
        nonlocal ln_T1, ln_T2
        ln_n0 = _lse(_lse(ln_T1, ln_T2), ln_Ttr)
        ln_s = _stay_stopping_logs(ln_N, ln_n0, ln_ratio)
        if saddle == 1:
            ln_t1 = np.logaddexp(ln_T1, ln_s)
            ln_t2 = np.full_like(ln_s, ln_T2)
        else:
            ln_t1 = np.full_like(ln_s, ln_T1)
            ln_t2 = np.logaddexp(ln_T2, ln_s)
        ln_n = np.logaddexp(np.logaddexp(ln_t1, ln_t2), ln_Ttr)
        vis_idx.append(np.full(len(ln_s), visit, dtype=np.int64))
        saddles.append(np.full(len(ln_s), saddle, dtype=np.int64))
        ln_ns.append(ln_n)
        w1s.append(np.exp(ln_t1 - ln_n))
        w2s.append(np.exp(ln_t2 - ln_n))
        wtrs.append(np.exp(ln_Ttr - ln_n) if ln_Ttr != _NEG_INF
                    else np.zeros(len(ln_s)))
        flags = np.zeros(len(ln_s), dtype=bool)
        flags[-1] = True
        bounds.append(flags)
        ledger.stays.append((visit, saddle, ln_N))
        if saddle == 1:
            ln_T1 = _lse(ln_T1, ln_N)
        else:
            ln_T2 = _lse(ln_T2, ln_N)

    def check(L_val: float) -> bool:
        """True when the run must truncate at this value."""
        if math.isinf(L_val) or math.isnan(L_val):
            raise CycleOverflowError("cycle depth exceeds representable range")
        if rule.tag == "C" and L_val > L_CAP:
            ledger.truncated = True
            return True
        return False

    for i in range(1, m + 1):
        record_stay(i, 1, staying_time(L_prime, params.sigma1))
        ln_Ttr = _lse(ln_Ttr, ln_k)
        L = rule.next_L(L_prime, ln_r)
        if check(L):
            break
        record_stay(i, 2, staying_time(L, params.sigma2))
        ln_Ttr = _lse(ln_Ttr, ln_k)
        L_prime = rule.next_L_prime(L_prime, L, ln_r)
        ledger.cycles_run = i
        if check(L_prime):
            break

    ledger.visit_index = np.concatenate(vis_idx)
    ledger.saddle = np.concatenate(saddles)
    ledger.ln_n = np.concatenate(ln_ns)
    ledger.omega_u1 = np.concatenate(w1s)
    ledger.omega_u2 = np.concatenate(w2s)
    ledger.omega_transit = np.concatenate(wtrs)
    ledger.is_boundary = np.concatenate(bounds)
    ledger.ln_T1 = ln_T1
    ledger.ln_T2 = ln_T2
    ledger.ln_T_transit = ln_Ttr
    return ledger


@dataclass(frozen=True)
class RegimeVerdict:
    """One of the three asymptotic statistical behaviors."""

    kind: str  # "convergent_to_x2" | "convergent_mix" | "oscillatory"
    t_hat: Optional[float] = None
    lo: Optional[float] = None
    hi: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)


def classify_regime(ledger: BowenLedger,
                    decay_tol: float = 0.05,
                    mix_spread: float = 0.02,
                    oscillation_spread: float = 0.5) -> RegimeVerdict:
    """Classify the tail of the recorded visit frequencies.

    convergent_to_x2: all tail omega(U1) below ``decay_tol`` with the
    U1-stay-end subsequence decreasing.  convergent_mix: tail spread below
    ``mix_spread``; the estimate ``t_hat`` is the tail mean.  oscillatory:
    tail spread above ``oscillation_spread``.  Raises on any other pattern.
    """
    if ledger.n_samples < 20:
        raise ValueError("inconclusive ledger: fewer than 20 stopping times")
    tail = ledger.omega_u1[ledger.tail_slice()]
    spread = float(tail.max() - tail.min())
    diagnostics = {"tail_spread": spread, "tail_mean": float(tail.mean())}

    if np.all(tail < decay_tol):
        ends = ledger.omega_u1[ledger.is_boundary & (ledger.saddle == 1)]
        ends = ends[-10:]
        if len(ends) >= 3 and np.all(np.diff(ends) < 0):
            return RegimeVerdict("convergent_to_x2", diagnostics=diagnostics)
    if spread < mix_spread:
        return RegimeVerdict("convergent_mix", t_hat=float(tail.mean()),
                             diagnostics=diagnostics)
    if spread > oscillation_spread:
        return RegimeVerdict("oscillatory", lo=float(tail.min()),
                             hi=float(tail.max()), diagnostics=diagnostics)
    raise ValueError("inconclusive ledger")


@dataclass(frozen=True)
class SymbolicTrace:
    """Ledger frequencies embedded on the symbolic grid.

    Duck-type compatible with ``OrbitTrace`` as far as the basin machinery
    needs: ``grid``, ``checkpoints`` (here ln n, log domain), per-checkpoint
    ``occupancies`` and a ``tail_slice``.
    """

    grid: Grid
    checkpoints: tuple
    occ: np.ndarray

    def occupancies(self) -> np.ndarray:
        return self.occ

    def tail_slice(self, fraction: float = 1.0 / 3.0) -> slice:
        k = len(self.checkpoints)
        return slice(k - max(1, math.ceil(k * fraction)), k)


def symbolic_trace(ledger: BowenLedger) -> SymbolicTrace:
    """Embed the ledger's frequency samples as occupancies on BOWEN_GRID."""
    k = ledger.n_samples
    occ = np.zeros((k, BOWEN_GRID.size))
    occ[:, CELL_X1] = ledger.omega_u1
    occ[:, CELL_X2] = ledger.omega_u2
    occ[:, CELL_TRANSIT] = ledger.omega_transit
    occ /= occ.sum(axis=1, keepdims=True)
    return SymbolicTrace(BOWEN_GRID, tuple(ledger.ln_n.tolist()), occ)


def ledger_snapshots(ledger: BowenLedger, tail_only: bool = True) -> list:
    """Ledger samples as gridded measures (both saddle atoms plus transit)."""
    from .empirical import GriddedMeasure

    trace = symbolic_trace(ledger)
    rows = trace.occ[trace.tail_slice()] if tail_only else trace.occ
    return [GriddedMeasure(BOWEN_GRID, row) for row in rows]
