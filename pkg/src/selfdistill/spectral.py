"""Per-eigendirection shrinkage diagnostics for distillation chains.

In the eigenbasis of the Gram matrix the whole chain reduces to a
diagonal story: a fixed smoother diagonal ``A`` with entries
``d/(d + lam)`` and a step-dependent diagonal ``B`` that starts at the
identity and shrinks.  Everything here is elementwise on vectors; no
n-by-n matrices are ever formed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .linalg import GramDecomposition

__all__ = [
    "SpectralState",
    "a_diagonal",
    "b_step",
    "b_closed",
    "ratio_closed",
    "ratio_sign_predictor",
    "basis_representation",
    "rk_ratios",
]

_GEOM_NEAR_ONE = 1e-12


def a_diagonal(D, lam: float) -> np.ndarray:
    """Smoother diagonal ``d_i / (d_i + lam)``, each entry in [0, 1)."""
    D = np.asarray(D, dtype=float)
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    if np.any(D < 0):
        raise ValueError("eigenvalues must be nonnegative")
    return D / (D + lam)


def _check_unit_interval(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if np.any(v < 0) or np.any(v > 1):
        raise ValueError(f"{name} entries must lie in [0, 1]")
    return v


def b_step(A, B_prev, alpha: float) -> np.ndarray:
    """One shrinkage-recursion step: ``A * ((1 - alpha) * B_prev + alpha)``.

    With ``B^(0) = 1`` this recursion generates the per-eigendirection
    shrinkage factors of the chain; ``alpha = 0`` degenerates to plain
    elementwise powers ``A^tau``.
    """
    A = _check_unit_interval(A, "A")
    B_prev = _check_unit_interval(B_prev, "B_prev")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return A * ((1.0 - alpha) * B_prev + alpha)


def b_closed(A, alpha: float, tau: int) -> np.ndarray:
    """Shrinkage diagonal after ``tau`` steps, in closed form.

    Elementwise ``(alpha/(1-alpha)) * sum_{i=1}^{tau-1} ((1-alpha) a)^i
    + (1-alpha)^(tau-1) * a^tau``; equals ``tau`` iterations of
    :func:`b_step` starting from the all-ones vector.

    The geometric sum is evaluated in closed form, with a first-order
    fallback where ``(1-alpha)*a`` is within 1e-12 of 1 (only reachable
    in the lam = 0 boundary, which the rest of the library excludes).

    Raises
    ------
    ValueError
        If ``alpha == 1``; the chain is constant there, use
        :func:`b_step`, which yields ``A`` at every step.
    """
    A = _check_unit_interval(A, "A")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if alpha == 1.0:
        raise ValueError("alpha = 1 has no geometric closed form; use b_step (B = A at every step)")
    tau = int(tau)
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")

    r = (1.0 - alpha) * A
    m = tau - 1
    near_one = np.abs(1.0 - r) <= _GEOM_NEAR_ONE
    denom = np.where(near_one, 1.0, 1.0 - r)
    geom = r * (1.0 - r**m) / denom
    taylor = m + (r - 1.0) * (m * (m + 1) / 2.0)
    geom = np.where(near_one, taylor, geom)
    return (alpha / (1.0 - alpha)) * geom + (1.0 - alpha) ** m * A**tau


def ratio_closed(d_k: float, d_j: float, lam: float, tau: int, alpha: float) -> float:
    """Closed-form ratio ``B_k / B_j`` of two shrinkage entries.

    Only the boundary weights admit a closed form:
    ``((1 + lam/d_j) / (1 + lam/d_k))^tau`` for ``alpha = 0`` and the
    same base with exponent 1 for ``alpha = 1`` (constant in ``tau``).
    """
    if d_j <= 0:
        raise ValueError(f"d_j must be > 0 (ratio undefined), got {d_j}")
    if not d_k > d_j:
        raise ValueError(f"requires d_k > d_j, got d_k={d_k}, d_j={d_j}")
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    if alpha not in (0.0, 1.0):
        raise ValueError(f"closed form exists only for alpha in {{0, 1}}, got {alpha}")
    if int(tau) < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    base = (1.0 + lam / d_j) / (1.0 + lam / d_k)
    exponent = int(tau) if alpha == 0.0 else 1
    return float(base**exponent)


def ratio_sign_predictor(
    b_prev_k: float, b_prev_j: float, a_k: float, a_j: float, alpha: float
) -> int:
    """Predict the sign of the next change of the ratio ``B_k / B_j``.

    For interior weights the ratio of two shrinkage entries is not
    monotone in general, but its next move is determined by the current
    state: the returned sign equals
    ``sgn(B'_k/B'_j - B_k/B_j)`` where ``B'`` is one :func:`b_step`
    ahead.  Zero means the ratio is exactly at its fixed point.

    The equivalence holds on states whose ratio dominates the smoother
    ratio, ``b_prev_k / b_prev_j >= a_k / a_j``.  Every state of a
    fixed-penalty chain satisfies this invariantly from the first step
    on; with step-varying penalties a large jump of the penalty can
    leave it, and there the prediction is not meaningful.

    Raises
    ------
    ValueError
        If ``a_k == a_j``: the equation divides by ``a_k - a_j``.  A
        degenerate eigenvalue pair keeps its ratio constant, so callers
        should treat that case as sign 0 without calling this.
    """
    for name, v in (("b_prev_k", b_prev_k), ("b_prev_j", b_prev_j), ("a_k", a_k), ("a_j", a_j)):
        if not 0.0 < v <= 1.0:
            raise ValueError(f"{name} must be in (0, 1], got {v}")
    if a_k == a_j:
        raise ValueError("a_k == a_j: degenerate eigenvalue pair, ratio is constant")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")

    # Same quantity as ((B_k/B_j - A_k/A_j) * A_j / (B_k (A_k - A_j)) + 1),
    # written over a common denominator: the textbook grouping loses all
    # significant digits at the all-ones state (where t = 0 exactly and
    # the argument is +inf by continuity).
    numer = a_j * b_prev_k - a_k * b_prev_j + b_prev_j * b_prev_k * (a_k - a_j)
    t = numer / (b_prev_j * b_prev_k * (a_k - a_j))
    arg = math.inf if t == 0.0 else 1.0 / t
    return int(np.sign(arg - alpha))


def basis_representation(
    decomp: GramDecomposition, kernel_vec, y, B_tau, *, drop_singular: bool = False
) -> float:
    """Evaluate the chain prediction through the spectral basis.

    Computes ``P(x)^T diag(B_tau) Z`` with ``P(x) = D^{-1} V^T kappa(x, X)``
    and ``Z = V^T y``, which equals the prediction of the chain at the
    step that produced ``B_tau``.

    ``P(x)`` needs ``D^{-1}``, so all eigenvalues must exceed
    ``1e-12 * d_max``.  With ``drop_singular=True`` near-zero coordinates
    are dropped with a warning instead of raising; their ``B`` entries
    are zero on training data, but off the training inputs the dropped
    basis functions are genuinely undefined.
    """
    kernel_vec = np.asarray(kernel_vec, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    B_tau = np.asarray(B_tau, dtype=float).ravel()
    D = decomp.eigenvalues
    if not (kernel_vec.shape == y.shape == B_tau.shape == D.shape):
        raise ValueError("kernel_vec, y and B_tau must all have length n")

    eps_d = 1e-12 * decomp.d_max
    keep = D > eps_d
    if not np.all(keep):
        if not drop_singular:
            raise np.linalg.LinAlgError(
                f"singular basis: {int(np.sum(~keep))} eigenvalue(s) at or below {eps_d:.3e}"
            )
        warnings.warn(
            f"dropping {int(np.sum(~keep))} near-singular basis coordinate(s)",
            RuntimeWarning,
            stacklevel=2,
        )
    V = decomp.eigenvectors[:, keep]
    P = (V.T @ kernel_vec) / D[keep]
    Z = V.T @ y
    return float(P @ (B_tau[keep] * Z))


def rk_ratios(B_tau) -> np.ndarray:
    """Consecutive ratios ``B[k+1] / B[k]`` of a shrinkage diagonal.

    ``B_tau`` must be ordered by ascending eigenvalue.  A zero
    denominator (a fully collapsed coordinate) is reported as ``+inf``.
    """
    B_tau = np.asarray(B_tau, dtype=float)
    if B_tau.ndim != 1 or B_tau.shape[0] < 2:
        raise ValueError("need a 1-d diagonal with at least two entries")
    if np.any(B_tau < 0):
        raise ValueError("shrinkage entries must be nonnegative")
    den = B_tau[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den == 0.0, np.inf, B_tau[1:] / den)
    return out


@dataclass
class SpectralState:
    """A shrinkage-diagonal history alongside its decomposition.

    Holds the fixed smoother diagonal ``a`` and the sequence of
    shrinkage diagonals ``b_history[0] = 1, b_history[1] = a, ...``
    produced by repeated :func:`b_step`.
    """

    decomposition: GramDecomposition
    alpha: float
    lam: float
    a: np.ndarray
    b_history: list = field(default_factory=list)

    @classmethod
    def create(cls, decomposition: GramDecomposition, alpha: float, lam: float) -> "SpectralState":
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {alpha}")
        a = a_diagonal(decomposition.eigenvalues, lam)
        return cls(
            decomposition=decomposition,
            alpha=float(alpha),
            lam=float(lam),
            a=a,
            b_history=[np.ones_like(a)],
        )

    @property
    def tau(self) -> int:
        return len(self.b_history) - 1

    @property
    def b(self) -> np.ndarray:
        """Shrinkage diagonal at the current step."""
        return self.b_history[-1]

    def advance(self, steps: int = 1) -> np.ndarray:
        """Append ``steps`` further shrinkage diagonals; returns the last."""
        if steps < 1:
            raise ValueError(f"steps must be >= 1, got {steps}")
        for _ in range(steps):
            self.b_history.append(b_step(self.a, self.b_history[-1], self.alpha))
        return self.b_history[-1]
