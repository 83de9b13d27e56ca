"""tempsteer: temporal steering of qubit channels.

Quantifies how strongly a qubit channel lets earlier preparations steer
later measurement outcomes, evaluates the mutually-unbiased-basis QKD
security bounds (BB84 and the six-state protocol) against individual
attacks, computes the temporal steerable weight by an in-repo semidefinite
solver, and validates everything against seeded Monte Carlo protocol
simulations.
"""

from .assemblage import (
    Assemblage,
    Reconstruction,
    StrategyTable,
    TomographyCounts,
    build_assemblage,
    check_consistency,
    lhs_assemblage,
    offdiagonal_remainder,
    reconstruct,
    strategy_table,
)
from .channels import (
    BranchOutcome,
    Channel,
    ChannelError,
    ChannelReport,
    make_channel,
    preset_catalog,
    validate,
)
from .metrics import (
    FidelityTable,
    SecurityVerdict,
    SteeringSummary,
    bhatia_davis_slack,
    branch_resolved_steering,
    channel_statistics,
    fidelity_table,
    individual_attack_qber,
    monogamy_threshold,
    qber,
    qber_lower_bound,
    qber_upper_bound,
    s_threshold,
    security_verdict,
    steering_parameter,
    steering_parameter_from_statistics,
    summarize,
    symmetric_noise_s,
    variance_identity_residual,
)
from .qubit import (
    DensityMatrix,
    ValidationError,
    bloch_vector,
    density_from_bloch,
    fidelity_to_pure,
    hermitian_eigvals,
    mub_ket,
    mub_projector,
    mub_state,
    pauli,
)
from .report import SteeringReport, analytic_report
from .sdp import (
    SdpProblem,
    SdpSolution,
    SolverError,
    WeightResult,
    build_weight_sdp,
    solve,
    steerable_weight,
    unitary_invariance_check,
)
from .simulate import (
    RoundLog,
    RoundRecord,
    SessionConfig,
    SessionResult,
    analyze,
    estimate_qber,
    run_and_analyze,
    run_session,
    sift,
)

__version__ = "0.1.0"

__all__ = [
    "Assemblage", "BranchOutcome", "Channel", "ChannelError", "ChannelReport",
    "DensityMatrix", "FidelityTable", "Reconstruction", "RoundLog",
    "RoundRecord", "SdpProblem", "SdpSolution", "SecurityVerdict",
    "SessionConfig", "SessionResult", "SolverError", "SteeringReport",
    "SteeringSummary", "StrategyTable", "TomographyCounts", "ValidationError",
    "WeightResult", "analytic_report", "analyze", "bhatia_davis_slack",
    "bloch_vector", "branch_resolved_steering", "build_assemblage",
    "build_weight_sdp", "channel_statistics", "check_consistency",
    "density_from_bloch", "estimate_qber", "fidelity_table",
    "fidelity_to_pure", "hermitian_eigvals", "individual_attack_qber",
    "lhs_assemblage", "make_channel", "monogamy_threshold", "mub_ket",
    "mub_projector", "mub_state", "offdiagonal_remainder", "pauli",
    "preset_catalog", "qber", "qber_lower_bound", "qber_upper_bound",
    "reconstruct", "run_and_analyze", "run_session", "s_threshold",
    "security_verdict", "sift", "solve", "steerable_weight",
    "steering_parameter", "steering_parameter_from_statistics",
    "strategy_table", "summarize", "symmetric_noise_s",
    "unitary_invariance_check", "validate", "variance_identity_residual",
    "__version__",
]
