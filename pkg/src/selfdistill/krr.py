"""Weighted-target kernel ridge regression.

The fit minimizes a two-target objective: ``alpha`` weights the squared
error against the first target vector, ``1 - alpha`` against the second,
plus an l2 penalty ``lam`` on the (feature-space) weights.  The solution
is kept in dual form, one coefficient per training point, so the same
code path serves every kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, cross_kernel, kernel_vector
from .linalg import RegularizedSolver

__all__ = ["KrrFit", "fit_weighted", "predict"]


@dataclass(frozen=True)
class KrrFit:
    """A fitted weighted ridge regressor in dual form.

    ``dual_coefficients`` satisfies
    ``c = (K + lam*I)^{-1} (alpha*y1 + (1-alpha)*y2)``.  ``inputs`` and
    ``kernel`` are optional; without them the fit can only be evaluated
    through precomputed kernel vectors (see :func:`selfdistill.distill.direct_predict_at`).
    """

    dual_coefficients: np.ndarray
    alpha: float
    lam: float
    inputs: np.ndarray | None = None
    kernel: KernelSpec | None = None


def fit_weighted(
    K,
    y1,
    y2,
    alpha: float,
    lam: float,
    *,
    inputs=None,
    kernel: KernelSpec | None = None,
    solver: RegularizedSolver | None = None,
) -> KrrFit:
    """Fit to the weighted target ``alpha*y1 + (1-alpha)*y2``.

    Minimizing the two-target objective is equivalent to ordinary ridge
    regression on the merged target (the objectives differ by a constant
    in the parameters), so the dual coefficients are a single
    regularized solve.  Fitted training predictions are ``K @ c``.

    Parameters
    ----------
    K : ndarray, shape (n, n)
        Gram matrix of the training inputs.
    y1, y2 : ndarray, shape (n,)
        The two target vectors.
    alpha : float
        Weight on ``y1``, in [0, 1].
    lam : float
        Ridge penalty; must be strictly positive.
    inputs, kernel : optional
        Training inputs and kernel to attach for later :func:`predict`.
    solver : RegularizedSolver, optional
        Reusable factorization of ``K + lam*I``; one is built if absent.
    """
    y1 = np.asarray(y1, dtype=float).ravel()
    y2 = np.asarray(y2, dtype=float).ravel()
    if y1.shape != y2.shape:
        raise ValueError(f"targets have mismatched lengths {y1.shape[0]} and {y2.shape[0]}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    if solver is None:
        solver = RegularizedSolver(K, lam)
    elif solver.lam != lam:
        raise ValueError(f"solver was factorized with lam={solver.lam}, fit requested lam={lam}")
    merged = alpha * y1 + (1.0 - alpha) * y2
    if merged.shape[0] != np.asarray(K).shape[0]:
        raise ValueError("target length does not match the Gram matrix")
    c = solver.solve(merged)
    return KrrFit(
        dual_coefficients=c,
        alpha=float(alpha),
        lam=float(lam),
        inputs=None if inputs is None else np.asarray(inputs, dtype=float),
        kernel=kernel,
    )


def predict(fit: KrrFit, x):
    """Evaluate the fit at ``x``: ``kappa(x, X)^T c``.

    ``x`` may be a single point (returns a float) or a 2-d array of
    points (returns a vector).
    """
    if fit.inputs is None or fit.kernel is None:
        raise ValueError("fit carries no training inputs/kernel; attach them in fit_weighted")
    x = np.asarray(x, dtype=float)
    if x.ndim <= 1:
        kv = kernel_vector(fit.kernel, x, fit.inputs)
        return float(kv @ fit.dual_coefficients)
    return cross_kernel(fit.kernel, x, fit.inputs) @ fit.dual_coefficients
