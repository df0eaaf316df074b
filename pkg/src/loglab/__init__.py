"""loglab: Monte Carlo laboratory for truncated quartic Gibbs measures
built over a log-correlated Gaussian field on the torus."""

from .backend import BACKEND, USE_NUMBA
from .fields import (
    DealiasingError,
    GridField,
    Lattice,
    LatticeSizeError,
    SpectralField,
    WickVariance,
    build_lattice,
    dyadic_block,
    embed,
    fast_grid_size,
    field_from_coeff,
    from_grid,
    grid_mean,
    project,
    sample_field,
    smooth,
    to_grid,
    wick_sigma,
)
from .wick import (
    ChaosStats,
    SumBudgetError,
    chaos_diagnostics,
    chaos_second_moment,
    hermite,
    interaction_cross_moment,
    quartic_interaction,
    renormalized_mass,
    shifted_quartic_interaction,
)
from .estimators import (
    AtomReport,
    CauchyRow,
    EstimateRecord,
    EstimatorOverflowError,
    FunctionalBank,
    MCConfig,
    atom_check,
    cauchy_table,
    estimate_capped_gain,
    estimate_partition,
    heavy_tail_flag,
    make_stream,
    record_from_values,
    sample_functionals,
)
from .drift import (
    BumpProfile,
    DriftField,
    ProfileMoments,
    ShiftedEventReport,
    WitnessConfig,
    build_profile_field,
    default_profile,
    make_drift,
    profile_moments,
    shifted_event_probability,
    witness_deterministic_part,
    witness_lower_bound,
)
from .scan import (
    ScanConfig,
    ScanResult,
    ScanRow,
    Schedule,
    cap_rule,
    cell_id_of,
    classify_column,
    crossover_bracket,
    run_scan,
)
from .verify import (
    SUITES,
    CheckResult,
    format_table,
    rows_pass,
    run_suite,
)

__version__ = "0.1.0"
