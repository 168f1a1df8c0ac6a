"""Robust estimation of discretely observed affine-drift diffusions.

Minimum density power divergence fits of ``dX = (B X + b) dt + Sigma^{1/2} dW``
from Euler-discretized observations, with the matching large-sample
covariances and the drift Wald test.
"""

__version__ = "0.1.0"

from .estimator import FitResult, MdpdeConfig, fit, ols_init
from .exceptions import (
    DomainError,
    InitializationError,
    NumericalFailure,
    SimulationDiverged,
    SingularMatrixError,
)
from .inference import (
    InferenceReport,
    b_matrix_hat,
    cov_vech_sigma,
    inference_report,
    joint_covariance,
    psi_limit,
    sigma_beta,
    tilted_gaussian_moments,
    wald_test,
    xi_ell_matrices,
)
from .linalg import basis_S, spd_from_log_chol, spd_to_log_chol, sym_sqrt, trace_product, unvech, vech
from .objective import DiffusionParams, ObjectiveValue, objective, residuals
from .simulate import ContaminationSpec, DriftAffine, SamplePath, contaminate, simulate_path, step_size
