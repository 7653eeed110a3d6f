"""Kernel-based stability certificates for sampled nonlinear dynamics.

The package learns a one-step transfer operator from snapshot pairs in a
weighted reproducing kernel space, then turns the fitted operator into
computable stability artifacts: a Lyapunov-type value function, a damped
attraction indicator, level-set certificates, and probabilistic error
bounds for all of them.
"""

from .certificates import (
    BoundReport,
    LyapunovEstimate,
    ZubovEstimate,
    accumulated_costs,
    bound_report,
    build_lyapunov,
    build_zubov,
    c_nu,
    concentration_epsilons,
    doa_level_threshold,
    estimate_mu_table,
    generalization_bound,
    grid_eval,
    lyapunov_error_bound,
    lyapunov_value,
    lyapunov_values,
    mu_from_table,
    truncation_horizon,
    zubov_error_bound,
    zubov_value,
    zubov_values,
)
from .config import CertificateConfig, OutputConfig, RunConfig, SamplingConfig, load_config
from .dynsys import (
    DomainSpec,
    SnapshotDataset,
    SystemSpec,
    check_decay_ratio,
    make_dataset,
    oracle_lyapunov,
    oracle_lyapunov_batch,
    oracle_zubov,
    oracle_zubov_batch,
    sample_uniform,
    step,
    trajectory,
    vector_field,
)
from .eigsolve import Pencil, cholesky_spd, generalized_eig_topr, symmetric_eig
from .errors import (
    ContractionViolatedError,
    DegenerateDomainError,
    DivergenceError,
    EtaMismatchError,
    IntegrationBlowupError,
    InvalidInputError,
    KoopcertError,
    NotPositiveDefiniteError,
    SolverFailureError,
    SpectralAnomalyError,
)
from .estimator import (
    EtaSpec,
    FitDiagnostics,
    KoopmanModel,
    RRRConfig,
    adjoint_coeffs,
    empirical_risk,
    fit_koopman,
    fit_zubov_koopman,
    forward_coeffs,
    heldout_risk,
    hs_norm,
    normalize_columns,
    op_norm,
    operator_norm_bound,
    predict_observable,
    regularized_objective,
    theta_from_factors,
)
from .io import (
    fmt,
    read_dataset,
    read_model,
    roundtrip_check,
    write_dataset,
    write_grid,
    write_model,
    write_report,
)
from .kernels import (
    KernelSpec,
    WeightedKernelSpec,
    WeightSpec,
    base_gram,
    eval_weight,
    eval_weighted_kernel,
    gram,
    weight_values,
)

__version__ = "0.1.0"
