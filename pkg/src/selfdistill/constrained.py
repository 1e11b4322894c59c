"""Tolerance-constrained self-distillation and collapse regimes.

Here each step minimizes a quadratic smoothness functional subject to a
budget ``eps`` on the weighted misfit against both the original targets
and the previous step's predictions.  The step reduces to a ridge-style
solve whose penalty ``lam_tau`` is the KKT multiplier making the misfit
constraint active; ``lam_tau`` changes from step to step and depends on
the previous solution, so there is no closed-form chain, only
simulation.

Whether the chain collapses to the zero function is decided up front by
where ``||y||^2 / N`` falls relative to ``eps`` and ``eps / alpha``
(:func:`classify_regime`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .linalg import GramDecomposition, eig_sym

__all__ = [
    "Regime",
    "RegimeClassification",
    "ConstrainedConfig",
    "ConstrainedChain",
    "ConstraintInfeasibleError",
    "classify_regime",
    "constraint_value",
    "solve_multiplier",
    "constrained_step",
    "run_constrained_chain",
    "generalized_b_step",
    "generalized_b_closed",
]

BISECTION_TOL = 1e-10
BISECTION_MAX_ITER = 200
BOUNDARY_WARN_TOL = 1e-12


class Regime(Enum):
    """The three long-run behaviors of a constrained chain."""

    COLLAPSED = "Collapsed"
    CONVERGES_TO_COLLAPSED = "ConvergesToCollapsed"
    NON_COLLAPSED = "NonCollapsed"


class ConstraintInfeasibleError(ValueError):
    """No function can satisfy the misfit budget.

    ``floor`` is the smallest achievable weighted misfit; the requested
    ``eps`` was below it.
    """

    def __init__(self, floor: float, eps: float):
        self.floor = float(floor)
        self.eps = float(eps)
        super().__init__(
            f"misfit budget eps={eps:.6g} is below the achievable floor {floor:.6g}"
        )


@dataclass(frozen=True)
class RegimeClassification:
    """Outcome of :func:`classify_regime`.

    ``boundary_values`` is ``(eps, eps / alpha, ||y||^2 / N)``.
    ``near_boundary`` flags a target norm within 1e-12 of one of the two
    interval boundaries, where floating point makes the classification
    fragile.
    """

    regime: Regime
    boundary_values: tuple
    near_boundary: bool = False


def classify_regime(y, N: int, eps: float, alpha: float) -> RegimeClassification:
    """Classify the chain by ``t = ||y||^2 / N``.

    ``t in [0, eps]`` collapses immediately (the zero function already
    satisfies the budget); ``t in (eps, eps/alpha]`` collapses after
    finitely many steps; ``t > eps/alpha`` never collapses.  Boundaries
    are classified exactly as written (closed on the right of each
    interval).
    """
    y = np.asarray(y, dtype=float).ravel()
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be strictly inside (0, 1), got {alpha}")
    t = float(y @ y) / N
    upper = eps / alpha
    if t <= eps:
        regime = Regime.COLLAPSED
    elif t <= upper:
        regime = Regime.CONVERGES_TO_COLLAPSED
    else:
        regime = Regime.NON_COLLAPSED
    near = (
        abs(t - eps) <= BOUNDARY_WARN_TOL * (1.0 + abs(eps))
        or abs(t - upper) <= BOUNDARY_WARN_TOL * (1.0 + abs(upper))
    )
    return RegimeClassification(regime=regime, boundary_values=(eps, upper, t), near_boundary=near)


@dataclass(frozen=True)
class ConstrainedConfig:
    """A constrained-chain problem instance.

    ``G`` plays the role of the (1/N-scaled) Gram or Green's matrix of
    the smoothness functional; it must be symmetric PSD.  ``alpha`` is
    restricted to the open interval: at 0 the ground truth is ignored
    entirely and at 1 no distillation happens.
    """

    eps: float
    alpha: float
    G: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be strictly inside (0, 1), got {self.alpha}")
        y = np.asarray(self.y, dtype=float).ravel()
        if not np.all(np.isfinite(y)):
            raise ValueError("targets contain non-finite entries")
        G = np.asarray(self.G, dtype=float)
        if G.shape != (y.shape[0], y.shape[0]):
            raise ValueError(f"G has shape {G.shape}, expected ({y.shape[0]}, {y.shape[0]})")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "G", G)


def constraint_value(f, y, y_prev, alpha: float) -> float:
    """Weighted misfit ``alpha/N ||f - y||^2 + (1-alpha)/N ||f - y_prev||^2``."""
    f = np.asarray(f, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    y_prev = np.asarray(y_prev, dtype=float).ravel()
    n = y.shape[0]
    r1 = f - y
    r2 = f - y_prev
    return float(alpha * (r1 @ r1) + (1.0 - alpha) * (r2 @ r2)) / n


def _shrinkage(d: np.ndarray, lam: float) -> np.ndarray:
    """Eigenbasis smoother ``d/(d + lam)``; handles the lam -> 0+ and inf limits."""
    if lam == 0.0:
        return (d > 0.0).astype(float)
    if math.isinf(lam):
        return np.zeros_like(d)
    return d / (d + lam)


def _misfit_curve(decomp: GramDecomposition, y, y_prev, alpha: float):
    """Return ``C(lam)``, the constraint value of the penalized solution.

    Evaluated in the eigenbasis of ``G`` so that each probe of the
    bisection costs O(n).  ``C`` is nondecreasing in ``lam``: more
    penalty means more shrinkage and a worse fit.
    """
    yh = decomp.eigenvectors.T @ np.asarray(y, dtype=float).ravel()
    ph = decomp.eigenvectors.T @ np.asarray(y_prev, dtype=float).ravel()
    wh = alpha * yh + (1.0 - alpha) * ph
    n = yh.shape[0]
    d = decomp.eigenvalues

    def curve(lam: float) -> float:
        fh = _shrinkage(d, lam) * wh
        r1 = fh - yh
        r2 = fh - ph
        return float(alpha * (r1 @ r1) + (1.0 - alpha) * (r2 @ r2)) / n

    return curve


def solve_multiplier(
    G,
    y,
    y_prev,
    alpha: float,
    eps: float,
    *,
    decomposition: GramDecomposition | None = None,
    tol: float = BISECTION_TOL,
    max_iter: int = BISECTION_MAX_ITER,
) -> float:
    """Penalty ``lam_tau`` at which the misfit constraint becomes active.

    The weighted misfit of the penalized solution is nondecreasing in
    the penalty, so the active multiplier is found by doubling an upper
    bracket and bisecting until the misfit is within ``tol`` of ``eps``.

    Returns 0.0 when the misfit already meets ``eps`` at vanishing
    penalty, and ``math.inf`` when even the zero function satisfies the
    budget (the collapse case; :func:`constrained_step` normally
    intercepts that before calling here).

    Raises
    ------
    ConstraintInfeasibleError
        If ``eps`` is below the achievable misfit floor
        (at best ``alpha*(1-alpha)/N * ||y - y_prev||^2``).
    RuntimeError
        If the bracketing or bisection fails to converge.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be strictly inside (0, 1), got {alpha}")
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    decomp = eig_sym(G) if decomposition is None else decomposition
    curve = _misfit_curve(decomp, y, y_prev, alpha)

    c_floor = curve(0.0)
    if c_floor > eps + tol:
        raise ConstraintInfeasibleError(floor=c_floor, eps=eps)
    if c_floor >= eps:
        return 0.0
    if curve(math.inf) <= eps:
        return math.inf

    hi = 1.0
    lo = 0.0
    while curve(hi) < eps:
        lo = hi
        hi *= 2.0
        if hi > 1e300:
            raise RuntimeError("failed to bracket the active multiplier")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        c_mid = curve(mid)
        if abs(c_mid - eps) <= tol:
            return mid
        if c_mid < eps:
            lo = mid
        else:
            hi = mid
    raise RuntimeError(f"multiplier bisection did not converge in {max_iter} iterations")


def constrained_step(
    G, y, y_prev, alpha: float, eps: float, *, decomposition: GramDecomposition | None = None
):
    """One constrained distillation step: ``(y_next, lam_tau)``.

    First checks whether the zero function satisfies the budget; the
    smoothness functional is minimized by zero, so if feasible it wins
    outright and ``lam_tau`` is reported as ``math.inf``.  Otherwise the
    active multiplier is solved for and the step is the penalized
    solution ``G (G + lam_tau I)^{-1} (alpha y + (1-alpha) y_prev)``.
    """
    y = np.asarray(y, dtype=float).ravel()
    y_prev = np.asarray(y_prev, dtype=float).ravel()
    decomp = eig_sym(G) if decomposition is None else decomposition
    if constraint_value(np.zeros_like(y), y, y_prev, alpha) <= eps:
        return np.zeros_like(y), math.inf
    lam_tau = solve_multiplier(G, y, y_prev, alpha, eps, decomposition=decomp)
    V = decomp.eigenvectors
    wh = V.T @ (alpha * y + (1.0 - alpha) * y_prev)
    y_next = V @ (_shrinkage(decomp.eigenvalues, lam_tau) * wh)
    return y_next, lam_tau


@dataclass
class ConstrainedChain:
    """A simulated constrained chain.

    ``predictions[t]`` is the solution on the training points after step
    ``t`` (index 0 holds the targets), ``multipliers[t-1]`` the per-step
    penalty (``math.inf`` for a zero step), ``misfits[t-1]`` the realized
    constraint value, and ``collapsed_at`` the first step that returned
    the zero vector.
    """

    config: ConstrainedConfig
    classification: RegimeClassification
    predictions: list = field(default_factory=list)
    multipliers: list = field(default_factory=list)
    misfits: list = field(default_factory=list)
    collapsed_at: int | None = None
    infeasible_at: int | None = None
    infeasible_floor: float | None = None


def run_constrained_chain(config: ConstrainedConfig, steps: int) -> ConstrainedChain:
    """Simulate ``steps`` constrained distillation steps.

    There is no closed form for this chain (the multiplier feeds back
    into the next step), so simulation is the only route.  Should a step
    find the budget infeasible, the chain stops and records the step and
    floor in ``infeasible_at`` / ``infeasible_floor`` instead of raising.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    decomp = eig_sym(config.G)
    classification = classify_regime(config.y, config.y.shape[0], config.eps, config.alpha)
    chain = ConstrainedChain(
        config=config, classification=classification, predictions=[config.y.copy()]
    )
    y_prev = config.y
    for tau in range(1, steps + 1):
        try:
            y_next, lam_tau = constrained_step(
                config.G, config.y, y_prev, config.alpha, config.eps, decomposition=decomp
            )
        except ConstraintInfeasibleError as err:
            chain.infeasible_at = tau
            chain.infeasible_floor = err.floor
            break
        chain.predictions.append(y_next)
        chain.multipliers.append(lam_tau)
        chain.misfits.append(constraint_value(y_next, config.y, y_prev, config.alpha))
        if chain.collapsed_at is None and not np.any(y_next):
            chain.collapsed_at = tau
        y_prev = y_next
    return chain


def generalized_b_step(A_tau, B_prev, alpha: float) -> np.ndarray:
    """Shrinkage recursion with a step-dependent smoother diagonal.

    Elementwise ``A_tau * ((1 - alpha) * B_prev + alpha)``; with a
    constant penalty this is exactly the fixed-penalty recursion of
    :func:`selfdistill.spectral.b_step`.
    """
    A_tau = np.asarray(A_tau, dtype=float)
    B_prev = np.asarray(B_prev, dtype=float)
    if np.any(A_tau < 0) or np.any(A_tau > 1) or np.any(B_prev < 0) or np.any(B_prev > 1):
        raise ValueError("A_tau and B_prev entries must lie in [0, 1]")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return A_tau * ((1.0 - alpha) * B_prev + alpha)


def generalized_b_closed(A_seq, alpha: float) -> np.ndarray:
    """Closed double-product form of the step-dependent shrinkage diagonal.

    For smoother diagonals ``A_seq = [A_1, ..., A_tau]`` returns

    ``(alpha/(1-alpha)) * sum_{i=1}^{tau-1} (1-alpha)^{tau-i} prod_{m=i+1}^{tau} A_m
    + (1-alpha)^{tau-1} prod_{m=1}^{tau} A_m``

    which equals iterating :func:`generalized_b_step` from the all-ones
    vector.  Serves as an independent cross-check of the recursion.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    A_seq = [np.asarray(a, dtype=float) for a in A_seq]
    tau = len(A_seq)
    if tau < 1:
        raise ValueError("need at least one smoother diagonal")
    # suffix[i] = prod of A_seq[i:], so suffix[0] covers all steps
    suffix = [None] * (tau + 1)
    suffix[tau] = np.ones_like(A_seq[0])
    for i in range(tau - 1, -1, -1):
        suffix[i] = A_seq[i] * suffix[i + 1]
    total = (1.0 - alpha) ** (tau - 1) * suffix[0]
    if alpha > 0.0:
        acc = np.zeros_like(A_seq[0])
        for i in range(1, tau):
            acc += (1.0 - alpha) ** (tau - i) * suffix[i]
        total = total + (alpha / (1.0 - alpha)) * acc
    return total
