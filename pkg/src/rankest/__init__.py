"""Minimax rank estimation for spiked covariance data.

Core pieces: limiting edge-distribution tables (tracy_widom), windowed
covariance and eigenstructure (linalg_cov), the spiked-model asymptotics
(rmt_model), cost-balanced detection thresholds (minimax_threshold),
sequential rank selection and tracking (rank_select), and array-tracking
experiments (doa_sim).
"""

from .doa_sim import (
    Scenario,
    SignalEvent,
    TrackingTrace,
    read_scenario,
    run_tracking,
    steering_vector,
    sweep_sampling_rate,
    true_subspace,
)
from .linalg_cov import (
    EigenSystem,
    Snapshot,
    SnapshotWindow,
    hermitian_eig,
    push_snapshot,
    read_snapshot_csv,
    sample_covariance,
)
from .minimax_threshold import (
    ThresholdProblem,
    ThresholdSolution,
    boundary_expansion,
    critical_margin_threshold,
    small_margin_threshold,
    solve_minimax_threshold,
)
from .rank_select import (
    CostSchedule,
    RankEstimate,
    RankTracker,
    ThresholdSequence,
    build_threshold_sequence,
    cumulative_exclusion_costs,
    default_lambda0,
    estimate_noise_variance,
    estimate_rank,
    kn_estimate_rank,
)
from .rmt_model import (
    NoiseModel,
    SpikedModel,
    SubcriticalError,
    asymptotic_risk,
    bulk_edge,
    detectability_boundary,
    eigenvector_overlap,
    is_detectable,
    null_standardization,
    spiked_standardization,
)
from .tracy_widom import (
    TracyWidomTable,
    build_cdf,
    solve_hastings_mcleod,
    tw_cdf,
    tw_pdf,
    tw_quantile,
    tw_table,
    tw_tail_lower,
    tw_tail_upper,
)

__all__ = [
    "CostSchedule",
    "EigenSystem",
    "NoiseModel",
    "RankEstimate",
    "RankTracker",
    "Scenario",
    "SignalEvent",
    "Snapshot",
    "SnapshotWindow",
    "SpikedModel",
    "SubcriticalError",
    "ThresholdProblem",
    "ThresholdSequence",
    "ThresholdSolution",
    "TrackingTrace",
    "TracyWidomTable",
    "asymptotic_risk",
    "boundary_expansion",
    "build_cdf",
    "build_threshold_sequence",
    "bulk_edge",
    "critical_margin_threshold",
    "cumulative_exclusion_costs",
    "default_lambda0",
    "detectability_boundary",
    "eigenvector_overlap",
    "estimate_noise_variance",
    "estimate_rank",
    "hermitian_eig",
    "is_detectable",
    "kn_estimate_rank",
    "null_standardization",
    "push_snapshot",
    "read_scenario",
    "read_snapshot_csv",
    "run_tracking",
    "sample_covariance",
    "small_margin_threshold",
    "solve_hastings_mcleod",
    "solve_minimax_threshold",
    "spiked_standardization",
    "steering_vector",
    "sweep_sampling_rate",
    "true_subspace",
    "tw_cdf",
    "tw_pdf",
    "tw_quantile",
    "tw_table",
    "tw_tail_lower",
    "tw_tail_upper",
]
