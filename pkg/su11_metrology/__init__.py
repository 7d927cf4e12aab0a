"""SU(1,1) Metrology - QFI bounds and phase-sensitivity limits under photon loss and phase diffusion."""

__version__ = "0.1.0"

from .bounds import (
    BoundBreakdown,
    ClosedFormCheck,
    NoiseParams,
    VariationalParams,
    bound_breakdown,
    braced_objective,
    c_q_objective,
    delta_phi_bound,
    diffusion_floor,
    gamma_lambda_closed_form,
    loss_ceiling,
    minimize_gamma,
    minimize_gamma_numeric,
    optimal_c_phi,
    optimal_lambda,
    qfi_lossless,
)
from .critical import (
    InputRule,
    SensitivityPoint,
    SweepConfig,
    ThresholdResult,
    ThresholdStatus,
    alpha_locked_input,
    beta_critical,
    critical_curve,
    diffusion_sweep,
    eta_critical,
    evaluate_point,
    hl,
    input_for_total,
    loss_surface,
    n_total,
    sensitivity_surface,
    sql,
)
from .exceptions import (
    BracketFailure,
    DegenerateMoments,
    IllConditioned,
    NonPositivePhotonNumber,
    Su11MetrologyError,
    TruncationOverflow,
    ZeroInformation,
)
from .fock import (
    FockDensityMatrix,
    FockVector,
    apply_phase,
    build_state,
    dephase_channel,
    estimate_cutoff,
    exact_moments,
    fidelity_qfi,
    kraus_cq_check,
    loss_channel,
    mixed_qfi,
    noisy_state,
    pure_qfi,
)
from .gaussian import (
    GaussianState,
    InputSpec,
    PhotonMoments,
    PumpSpec,
    apply_loss,
    apply_nbs,
    photon_moments,
    prepare_input,
    propagate,
    symplectic_eigenvalues,
)
from .verification import CheckResult, run_oracle_suite

__all__ = [
    # Gaussian engine
    "InputSpec",
    "PumpSpec",
    "GaussianState",
    "PhotonMoments",
    "prepare_input",
    "apply_nbs",
    "apply_loss",
    "photon_moments",
    "propagate",
    "symplectic_eigenvalues",
    # Bounds
    "NoiseParams",
    "VariationalParams",
    "ClosedFormCheck",
    "BoundBreakdown",
    "qfi_lossless",
    "braced_objective",
    "c_q_objective",
    "minimize_gamma",
    "minimize_gamma_numeric",
    "diffusion_floor",
    "optimal_lambda",
    "optimal_c_phi",
    "loss_ceiling",
    "gamma_lambda_closed_form",
    "bound_breakdown",
    "delta_phi_bound",
    # Critical noise levels
    "InputRule",
    "ThresholdStatus",
    "SweepConfig",
    "ThresholdResult",
    "SensitivityPoint",
    "n_total",
    "sql",
    "hl",
    "evaluate_point",
    "alpha_locked_input",
    "input_for_total",
    "beta_critical",
    "eta_critical",
    "diffusion_sweep",
    "loss_surface",
    "sensitivity_surface",
    "critical_curve",
    # Fock oracle
    "FockVector",
    "FockDensityMatrix",
    "build_state",
    "estimate_cutoff",
    "apply_phase",
    "loss_channel",
    "dephase_channel",
    "noisy_state",
    "exact_moments",
    "pure_qfi",
    "fidelity_qfi",
    "mixed_qfi",
    "kraus_cq_check",
    # Verification
    "CheckResult",
    "run_oracle_suite",
    # Errors
    "Su11MetrologyError",
    "DegenerateMoments",
    "ZeroInformation",
    "NonPositivePhotonNumber",
    "BracketFailure",
    "TruncationOverflow",
    "IllConditioned",
]
