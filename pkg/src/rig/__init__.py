"""Simulation and analytics for ER x 1D-geometric random intersection graphs."""

__version__ = "0.1.0"

from .analytic import (
    MomentReport,
    UndefinedRatioError,
    a_circle,
    a_interval,
    b_tilde_circle,
    ell,
    first_moment_circle,
    first_moment_interval,
    first_moment_interval_upper,
    moment_report,
    pair_moment_circle_exact,
    pair_moment_circle_upper,
    pair_moment_interval_quadrature,
    probability_bounds,
    ratio_upper,
    u_tilde_circle,
)
from .core import (
    GraphSample,
    IsolationCount,
    Metric,
    ModelParams,
    adjacent,
    count_isolated,
    count_isolated_er,
    count_isolated_geo,
    distance,
    intersect_two_er,
    pair_index,
    resample_bits,
    sample,
    trial_stream,
)
from .montecarlo import (
    ErEquivalenceReport,
    NoCrossingError,
    SharedCounts,
    SweepRow,
    TrialConfig,
    crossing_point,
    er_equivalence_test,
    estimate,
    isolated_counts,
    shared_counts,
    sweep,
    sweep_shared,
)
from .oracle import (
    OracleReport,
    exhaustive_small_er,
    mc_utilde,
    quad_first_moment,
    quad_pair_moment,
    run_suite,
)
from .scaling import (
    DeviationReport,
    InfeasibleScalingError,
    classical_critical_er,
    classical_critical_geo,
    deviation_alpha,
    deviation_alpha_prime,
    deviation_beta_geo,
    deviation_report,
    solve_p_for_alpha,
    solve_p_for_alpha_prime,
    solve_r_for_alpha,
    solve_r_for_alpha_prime,
)
