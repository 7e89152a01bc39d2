"""Numerical laboratory for statistical attractors of discrete-time
dynamical systems: empirical measures along orbits, minimal observable
attractors and their basins, weak*-limit-set classification, and a reduced
symbolic model of the heteroclinic two-saddle cycle with its three
statistical regimes."""

from .attractor import (
    AlphaUnreachableError,
    AttractorReport,
    BasinEstimate,
    BasinVerdict,
    Decomposition,
    basin_estimate,
    basin_fraction,
    decompose,
    default_ladder,
    in_basin,
    minimal_alpha_attractor,
    minimal_attracting,
    minimal_restricted,
)
from .bowen import (
    BowenLedger,
    CycleOverflowError,
    RegimeRule,
    RegimeVerdict,
    RULE_A,
    RULE_B,
    RULE_C,
    SaddleParams,
    classify_regime,
    default_saddle_params,
    ledger_snapshots,
    predicted_t,
    run_cycles,
    staying_time,
    symbolic_trace,
)
from .dynamics import (
    MapSystem,
    NumericRangeError,
    OrbitTrace,
    geometric_schedule,
    make_map,
    run_orbit,
    run_orbits,
    step,
)
from .empirical import (
    EmpiricalAccumulator,
    GriddedMeasure,
    LimitSetClass,
    limit_set_classify,
    merge,
    snapshot,
    srb_like_estimate,
    visit_frequency,
    weakstar_dist,
)
from .space import (
    CIRCLE,
    INTERVAL,
    CellSet,
    Grid,
    StateSpace,
    cell_of,
    eps_neighborhood,
    lebesgue_fraction,
    sample_lebesgue,
)

__version__ = "0.1.0"
