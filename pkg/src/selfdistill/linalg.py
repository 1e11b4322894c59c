"""Symmetric eigendecomposition and regularized SPD solves.

These are the two linear-algebra primitives everything else is built
on: an eigendecomposition with a deterministic sign convention, and
Cholesky-based solves of ``(K + lam*I) s = b`` that never form an
explicit inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, get_lapack_funcs

__all__ = [
    "GramDecomposition",
    "FactorizationError",
    "eig_sym",
    "solve_regularized",
    "RegularizedSolver",
]

SYMMETRY_TOL = 1e-12
EIGENVALUE_CLAMP = 1e-10


class FactorizationError(np.linalg.LinAlgError):
    """Cholesky factorization failed: the matrix is not numerically SPD.

    ``pivot_index`` is the 0-based index of the first pivot that was not
    positive.
    """

    def __init__(self, pivot_index: int):
        self.pivot_index = int(pivot_index)
        super().__init__(
            f"matrix is not positive definite: pivot {self.pivot_index} failed"
        )


@dataclass(frozen=True)
class GramDecomposition:
    """Eigendecomposition ``K = V diag(D) V^T`` of a symmetric PSD matrix.

    Attributes
    ----------
    matrix : ndarray, shape (n, n)
        The decomposed matrix.
    eigenvectors : ndarray, shape (n, n)
        Orthogonal matrix with eigenvectors as columns, one per entry of
        ``eigenvalues``.  Each column is oriented so that its
        largest-magnitude entry is positive (ties broken by lowest index).
    eigenvalues : ndarray, shape (n,)
        Nonnegative eigenvalues in ascending order.  Tiny negatives from
        roundoff are clamped to zero.
    """

    matrix: np.ndarray
    eigenvectors: np.ndarray
    eigenvalues: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def d_max(self) -> float:
        return float(self.eigenvalues[-1])


def _check_square_symmetric(K, tol: float, name: str) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise ValueError(f"{name} contains non-finite entries")
    asym = np.max(np.abs(K - K.T)) if K.size else 0.0
    if asym > tol:
        raise ValueError(f"{name} is not symmetric: max|K - K^T| = {asym:.3e} > {tol:.0e}")
    return K


def eig_sym(K) -> GramDecomposition:
    """Eigendecompose a symmetric PSD matrix with a fixed sign convention.

    Eigenvalues come back ascending.  Negative eigenvalues within
    ``1e-10 * max(d_max, 1)`` of zero are clamped to zero; anything more
    negative means the input was not PSD and raises.

    Raises
    ------
    ValueError
        If ``K`` is not symmetric within 1e-12.
    numpy.linalg.LinAlgError
        If ``K`` has an eigenvalue below the clamping tolerance.
    """
    K = _check_square_symmetric(K, SYMMETRY_TOL, "K")
    D, V = np.linalg.eigh(K)
    # Deterministic orientation: largest-magnitude entry of each column
    # positive; np.argmax picks the lowest index on ties.
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    V = V * signs

    clamp = EIGENVALUE_CLAMP * max(float(D[-1]), 1.0)
    if D[0] < -clamp:
        raise np.linalg.LinAlgError(
            f"matrix is not positive semidefinite: eigenvalue {D[0]:.3e} "
            f"below clamping tolerance -{clamp:.3e}"
        )
    D = np.where(D < 0.0, 0.0, D)
    return GramDecomposition(matrix=K, eigenvectors=V, eigenvalues=D)


class RegularizedSolver:
    """Cached Cholesky factorization of ``K + lam*I``.

    A distillation chain solves against the same ``(K + lam*I)`` at every
    step, so the factorization is computed once and reused.
    """

    def __init__(self, K, lam: float):
        K = _check_square_symmetric(K, 1e-8, "K")
        if not lam > 0:
            raise ValueError(f"regularization lam must be > 0, got {lam}")
        self.lam = float(lam)
        H = K + self.lam * np.eye(K.shape[0])
        potrf, = get_lapack_funcs(("potrf",), (H,))
        c, info = potrf(H, lower=True, overwrite_a=True, clean=False)
        if info > 0:
            raise FactorizationError(pivot_index=info - 1)
        if info < 0:
            raise ValueError(f"illegal value in argument {-info} of the factorization")
        self._factor = (c, True)

    def solve(self, b) -> np.ndarray:
        """Return ``(K + lam*I)^{-1} b`` for a vector or matrix ``b``."""
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self._factor[0].shape[0]:
            raise ValueError(
                f"right-hand side has {b.shape[0]} rows, matrix has {self._factor[0].shape[0]}"
            )
        return cho_solve(self._factor, b)


def solve_regularized(K, lam: float, b) -> np.ndarray:
    """Solve ``(K + lam*I) s = b`` by Cholesky factorization.

    ``K`` must be symmetric PSD (within tolerance) and ``lam > 0``, so the
    shifted matrix is SPD.  ``b`` may be a vector or a matrix of stacked
    right-hand sides.

    Raises
    ------
    FactorizationError
        If ``K + lam*I`` is not numerically positive definite; carries
        the failing pivot index.
    """
    return RegularizedSolver(K, lam).solve(b)
