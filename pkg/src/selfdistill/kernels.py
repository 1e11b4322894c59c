"""Kernel functions and Gram-matrix construction.

Three positive-definite kernel families are supported: Gaussian RBF,
linear, and inhomogeneous polynomial.  Gram matrices are returned
bit-exactly symmetric (the upper triangle is computed and mirrored).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

__all__ = ["KernelSpec", "kernel_eval", "gram_matrix", "kernel_vector", "cross_kernel"]

_KINDS = ("rbf", "linear", "polynomial")


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family with its parameters.

    Use the constructors :meth:`rbf`, :meth:`linear` and
    :meth:`polynomial` rather than instantiating directly.

    Attributes
    ----------
    kind : str
        One of ``"rbf"``, ``"linear"``, ``"polynomial"``.
    gamma : float or None
        Bandwidth of the RBF kernel, ``exp(-gamma * ||a - b||^2)``.
        Must be positive.  Ignored by the other kinds.
    degree : int or None
        Degree of the polynomial kernel, ``(a . b + offset)^degree``.
        Must be >= 1.  Ignored by the other kinds.
    offset : float
        Additive constant of the polynomial kernel.  Must be >= 0.
    """

    kind: str
    gamma: float | None = None
    degree: int | None = None
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "rbf":
            if self.gamma is None or not self.gamma > 0:
                raise ValueError(f"RBF kernel requires gamma > 0, got {self.gamma!r}")
        if self.kind == "polynomial":
            if self.degree is None or int(self.degree) < 1:
                raise ValueError(f"polynomial kernel requires degree >= 1, got {self.degree!r}")
            if self.offset < 0:
                raise ValueError(f"polynomial offset must be >= 0, got {self.offset!r}")

    @classmethod
    def rbf(cls, gamma: float) -> "KernelSpec":
        return cls(kind="rbf", gamma=float(gamma))

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls(kind="linear")

    @classmethod
    def polynomial(cls, degree: int, offset: float = 0.0) -> "KernelSpec":
        return cls(kind="polynomial", degree=int(degree), offset=float(offset))


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"inputs must be a 2-d array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("inputs contain non-finite entries")
    return X


def _apply(spec: KernelSpec, inner: np.ndarray, sqdist: np.ndarray | None) -> np.ndarray:
    if spec.kind == "rbf":
        return np.exp(-spec.gamma * sqdist)
    if spec.kind == "linear":
        return inner
    return (inner + spec.offset) ** spec.degree


def kernel_eval(spec: KernelSpec, a, b) -> float:
    """Evaluate ``kappa(a, b)`` for two points of the same dimension.

    Raises
    ------
    ValueError
        If the points have different lengths or non-finite entries.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("kernel inputs contain non-finite entries")
    diff = a - b
    return float(_apply(spec, a @ b, diff @ diff))


def gram_matrix(spec: KernelSpec, X) -> np.ndarray:
    """Pairwise kernel matrix ``K[i, j] = kappa(x_i, x_j)``.

    The result is exactly symmetric: the upper triangle is computed and
    mirrored, so ``K == K.T`` holds bit for bit.
    """
    X = _as_matrix(X)
    if spec.kind == "rbf":
        # cdist evaluates each pair directly, so the diagonal is exactly 0
        # and the diagonal of K exactly 1.
        K = np.exp(-spec.gamma * cdist(X, X, "sqeuclidean"))
    else:
        K = _apply(spec, X @ X.T, None)
    return np.triu(K) + np.triu(K, 1).T


def cross_kernel(spec: KernelSpec, A, B) -> np.ndarray:
    """Rectangular kernel matrix ``kappa(a_i, b_j)`` between two point sets."""
    A = _as_matrix(A)
    B = _as_matrix(B)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.kind == "rbf":
        return np.exp(-spec.gamma * cdist(A, B, "sqeuclidean"))
    return _apply(spec, A @ B.T, None)


def kernel_vector(spec: KernelSpec, x, X) -> np.ndarray:
    """Vector of kernel values ``kappa(x, x_i)`` against the rows of ``X``."""
    X = _as_matrix(X)
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != X.shape[1]:
        raise ValueError(f"query point has dimension {x.shape[0]}, inputs have {X.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("query point contains non-finite entries")
    if spec.kind == "rbf":
        sq = cdist(x[None, :], X, "sqeuclidean")[0]
        return np.exp(-spec.gamma * sq)
    return _apply(spec, X @ x, None)
