"""Weighted-target self-distillation of kernel ridge regression.

A small numpy/scipy library for studying what happens when a kernel
ridge regressor is repeatedly retrained on a blend of its own
predictions and the original targets: iterative chains, closed forms at
any finite or infinite step, per-eigendirection shrinkage diagnostics,
and the tolerance-constrained variant with its collapse regimes.
"""

from .constrained import (
    ConstrainedChain,
    ConstrainedConfig,
    ConstraintInfeasibleError,
    Regime,
    RegimeClassification,
    classify_regime,
    constrained_step,
    constraint_value,
    generalized_b_closed,
    generalized_b_step,
    run_constrained_chain,
    solve_multiplier,
)
from .datasets import Dataset, generate_sine
from .distill import (
    DistillChain,
    DistillConfig,
    convergence_rate_bound,
    direct_predict_at,
    direct_predictions,
    limit_predict_at,
    limit_predictions,
    run_chain,
)
from .experiment import (
    ExperimentConfig,
    SineSpec,
    load_config,
    parse_config,
    read_dataset_csv,
    run_constrained,
    run_experiment,
    run_spectral_report,
    write_dataset_csv,
)
from .kernels import KernelSpec, cross_kernel, gram_matrix, kernel_eval, kernel_vector
from .krr import KrrFit, fit_weighted, predict
from .linalg import (
    FactorizationError,
    GramDecomposition,
    RegularizedSolver,
    eig_sym,
    solve_regularized,
)
from .spectral import (
    SpectralState,
    a_diagonal,
    b_closed,
    b_step,
    basis_representation,
    ratio_closed,
    ratio_sign_predictor,
    rk_ratios,
)

__version__ = "0.1.0"

__all__ = [
    "KernelSpec", "kernel_eval", "gram_matrix", "kernel_vector", "cross_kernel",
    "GramDecomposition", "FactorizationError", "eig_sym", "solve_regularized",
    "RegularizedSolver",
    "KrrFit", "fit_weighted", "predict",
    "DistillConfig", "DistillChain", "run_chain", "direct_predictions",
    "direct_predict_at", "limit_predictions", "limit_predict_at",
    "convergence_rate_bound",
    "SpectralState", "a_diagonal", "b_step", "b_closed", "ratio_closed",
    "ratio_sign_predictor", "basis_representation", "rk_ratios",
    "Regime", "RegimeClassification", "ConstrainedConfig", "ConstrainedChain",
    "ConstraintInfeasibleError", "classify_regime", "constraint_value",
    "solve_multiplier", "constrained_step", "run_constrained_chain",
    "generalized_b_step", "generalized_b_closed",
    "Dataset", "generate_sine",
    "SineSpec", "ExperimentConfig", "parse_config", "load_config",
    "read_dataset_csv", "write_dataset_csv", "run_experiment",
    "run_spectral_report", "run_constrained",
    "__version__",
]
