"""The self-distillation engine.

Three mutually checkable routes to the same predictions:

* :func:`run_chain` iterates the definition, refitting on the blend of
  original targets and the previous step's predictions;
* :func:`direct_predictions` / :func:`direct_predict_at` jump to any
  finite step in closed form, evaluated per eigendirection so that
  large step counts stay numerically stable;
* :func:`limit_predictions` / :func:`limit_predict_at` give the
  infinite-step limit, which for positive ground-truth weight is plain
  kernel ridge regression with the penalty amplified to ``lam / alpha``.

The per-step error contracts linearly with ratio
``(1 - alpha) * d_max / (d_max + lam)`` (:func:`convergence_rate_bound`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelSpec
from .krr import KrrFit, fit_weighted
from .linalg import GramDecomposition, RegularizedSolver, eig_sym, solve_regularized
from .spectral import b_closed

__all__ = [
    "DistillConfig",
    "DistillChain",
    "run_chain",
    "direct_predictions",
    "direct_predict_at",
    "limit_predictions",
    "limit_predict_at",
    "convergence_rate_bound",
]


@dataclass(frozen=True)
class DistillConfig:
    """Chain parameters: ground-truth weight, ridge penalty, step count.

    ``convergence_tol`` is the absolute infinity-norm threshold on
    consecutive training predictions below which the chain is flagged
    converged.  The default is strict; chains still terminate quickly
    because the contraction is geometric.
    """

    alpha: float
    lam: float
    steps: int
    convergence_tol: float = 1e-10

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.convergence_tol < 0:
            raise ValueError(f"convergence_tol must be >= 0, got {self.convergence_tol}")


@dataclass
class DistillChain:
    """A fully recorded chain.

    ``predictions[t]`` is the training-prediction vector after step
    ``t`` (``predictions[0]`` is the original target vector), ``fits[t-1]``
    the regressor fitted at step ``t``, and ``converged_at`` the first
    step whose predictions moved less than the configured tolerance.
    """

    config: DistillConfig
    predictions: list = field(default_factory=list)
    fits: list = field(default_factory=list)
    converged_at: int | None = None


def run_chain(K, y, config: DistillConfig, *, inputs=None, kernel: KernelSpec | None = None) -> DistillChain:
    """Iterate the distillation recursion for ``config.steps`` steps.

    Each step refits on ``alpha * y + (1 - alpha) * y_prev`` and records
    both the fit and its training predictions ``K @ c``.  A single
    factorization of ``K + lam*I`` is shared by all steps.

    Passing ``inputs``/``kernel`` attaches them to the per-step fits so
    they can be evaluated at new points with :func:`selfdistill.krr.predict`.
    """
    y = np.asarray(y, dtype=float).ravel()
    K = np.asarray(K, dtype=float)
    solver = RegularizedSolver(K, config.lam)
    chain = DistillChain(config=config, predictions=[y.copy()])
    y_prev = y
    for tau in range(1, config.steps + 1):
        fit = fit_weighted(
            K, y, y_prev, config.alpha, config.lam,
            inputs=inputs, kernel=kernel, solver=solver,
        )
        y_tau = K @ fit.dual_coefficients
        chain.fits.append(fit)
        chain.predictions.append(y_tau)
        if chain.converged_at is None and np.max(np.abs(y_tau - y_prev)) <= config.convergence_tol:
            chain.converged_at = tau
        y_prev = y_tau
    return chain


def direct_predictions(
    K, y, alpha: float, lam: float, tau: int, *, decomposition: GramDecomposition | None = None
) -> np.ndarray:
    """Training predictions after ``tau`` steps, without iterating.

    Works in the eigenbasis: the step-``tau`` smoother is diagonal
    there, with entries given by :func:`selfdistill.spectral.b_closed`,
    so the result is ``V diag(B) V^T y``.  Scalar geometric sums replace
    matrix powers, which keeps large ``tau`` exact and cheap.

    ``alpha`` must be strictly below 1; at ``alpha = 1`` every step
    repeats the initial fit, so use :func:`run_chain`.
    """
    y = np.asarray(y, dtype=float).ravel()
    if alpha == 1.0:
        raise ValueError("alpha = 1 yields a constant chain; use run_chain")
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    if int(tau) < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    decomp = eig_sym(K) if decomposition is None else decomposition
    b = b_closed(decomp.eigenvalues / (decomp.eigenvalues + lam), alpha, int(tau))
    V = decomp.eigenvectors
    return V @ (b * (V.T @ y))


def direct_predict_at(
    K,
    y,
    kernel_vec,
    alpha: float,
    lam: float,
    tau: int,
    *,
    decomposition: GramDecomposition | None = None,
    solver: RegularizedSolver | None = None,
) -> float:
    """Prediction at a new point after ``tau`` steps, without iterating.

    The step-``tau`` prediction splits into ``alpha`` times the initial
    fit plus ``1 - alpha`` times a plain ridge fit on the step
    ``tau - 1`` training predictions:
    ``alpha * k^T (K+lam I)^{-1} y + (1-alpha) * k^T (K+lam I)^{-1} y_prev``
    with ``k = kappa(x, X)``.
    """
    y = np.asarray(y, dtype=float).ravel()
    kernel_vec = np.asarray(kernel_vec, dtype=float).ravel()
    if kernel_vec.shape != y.shape:
        raise ValueError("kernel_vec must have one entry per training point")
    if solver is None:
        solver = RegularizedSolver(K, lam)
    if int(tau) == 1:
        y_prev = y
    else:
        y_prev = direct_predictions(K, y, alpha, lam, int(tau) - 1, decomposition=decomposition)
    t_initial = kernel_vec @ solver.solve(y)
    t_distill = kernel_vec @ solver.solve(y_prev)
    return float(alpha * t_initial + (1.0 - alpha) * t_distill)


def limit_predictions(K, y, alpha: float, lam: float) -> np.ndarray:
    """Infinite-step training predictions ``alpha K (alpha K + lam I)^{-1} y``.

    For ``alpha > 0`` this equals classical kernel ridge regression with
    the amplified penalty ``lam / alpha``; for ``alpha = 0`` the chain
    collapses to the zero vector.
    """
    y = np.asarray(y, dtype=float).ravel()
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    if alpha == 0.0:
        return np.zeros_like(y)
    K = np.asarray(K, dtype=float)
    return alpha * (K @ solve_regularized(alpha * K, lam, y))


def limit_predict_at(K, y, kernel_vec, alpha: float, lam: float) -> float:
    """Infinite-step prediction at a new point.

    The limit prediction is ``alpha`` times the initial ridge prediction
    plus ``1 - alpha`` times a ridge prediction (same penalty ``lam``)
    fitted on the limit training targets; collapsing the algebra, it
    equals the plain ridge prediction with the amplified penalty
    ``lam / alpha`` on the original targets.  For ``alpha = 0`` the
    limit is identically zero and 0.0 is returned.
    """
    y = np.asarray(y, dtype=float).ravel()
    kernel_vec = np.asarray(kernel_vec, dtype=float).ravel()
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if alpha == 0.0:
        return 0.0
    solver = RegularizedSolver(K, lam)
    t_initial = kernel_vec @ solver.solve(y)
    t_on_limit = kernel_vec @ solver.solve(limit_predictions(K, y, alpha, lam))
    return float(alpha * t_initial + (1.0 - alpha) * t_on_limit)


def convergence_rate_bound(D, alpha: float, lam: float) -> float:
    """Spectral radius of the per-step error map, always below 1.

    The error relative to the infinite-step limit contracts by at least
    ``rho = (1 - alpha) * d_max / (d_max + lam)`` per step.
    """
    D = np.asarray(D, dtype=float)
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    d_max = float(np.max(D)) if D.size else 0.0
    if d_max < 0:
        raise ValueError("eigenvalues must be nonnegative")
    return (1.0 - alpha) * d_max / (d_max + lam)
