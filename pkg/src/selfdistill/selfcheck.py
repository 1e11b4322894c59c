"""Quick invariant suite over random instances, for the CLI.

Each check exercises one mathematical guarantee of the library on
freshly drawn random instances and reports a single pass/fail line.
This is a smoke check, not the test suite; the pytest suite runs the
same laws with more instances and stricter bookkeeping.
"""

from __future__ import annotations

import math

import numpy as np

from .constrained import (
    ConstrainedConfig,
    classify_regime,
    constraint_value,
    generalized_b_step,
    run_constrained_chain,
    solve_multiplier,
)
from .distill import (
    DistillConfig,
    convergence_rate_bound,
    direct_predictions,
    limit_predictions,
    run_chain,
)
from .linalg import eig_sym, solve_regularized
from .spectral import b_closed, b_step, ratio_closed, ratio_sign_predictor

__all__ = ["run_selfcheck"]


def _random_psd(rng, n: int) -> np.ndarray:
    M = rng.normal(size=(n, n))
    K = M @ M.T / n
    return (K + K.T) / 2.0


def _check_solve_residual(rng):
    worst = 0.0
    for _ in range(25):
        n = int(rng.integers(2, 30))
        K = _random_psd(rng, n)
        lam = float(rng.uniform(0.05, 2.0))
        b = rng.normal(size=n)
        s = solve_regularized(K, lam, b)
        res = np.max(np.abs((K + lam * np.eye(n)) @ s - b))
        worst = max(worst, res / (1.0 + np.max(np.abs(b))))
    return worst <= 1e-8, f"worst relative residual {worst:.2e}"


def _check_eig_reconstruction(rng):
    worst = 0.0
    for _ in range(25):
        n = int(rng.integers(2, 30))
        K = _random_psd(rng, n)
        dec = eig_sym(K)
        resid = np.max(np.abs(dec.eigenvectors @ np.diag(dec.eigenvalues) @ dec.eigenvectors.T - K))
        ortho = np.max(np.abs(dec.eigenvectors.T @ dec.eigenvectors - np.eye(n)))
        worst = max(worst, resid / (1.0 + np.max(np.abs(K))), ortho)
    return worst <= 1e-10, f"worst reconstruction/orthogonality error {worst:.2e}"


def _check_direct_vs_chain(rng):
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 20))
        K = _random_psd(rng, n)
        y = rng.normal(size=n)
        lam = float(rng.uniform(0.1, 1.0))
        dec = eig_sym(K)
        for alpha in (0.0, 0.3, 0.7):
            chain = run_chain(K, y, DistillConfig(alpha, lam, 12))
            for tau in (1, 5, 12):
                direct = direct_predictions(K, y, alpha, lam, tau, decomposition=dec)
                err = np.max(np.abs(direct - chain.predictions[tau]))
                worst = max(worst, err / (1.0 + np.max(np.abs(chain.predictions[tau]))))
    return worst <= 1e-8, f"worst relative gap {worst:.2e}"


def _check_b_monotone(rng):
    for _ in range(20):
        n = int(rng.integers(2, 25))
        a = rng.uniform(0.0, 0.999, size=n)
        alpha = float(rng.uniform(0.0, 0.95))
        b = np.ones(n)
        for _tau in range(25):
            b_next = b_step(a, b, alpha)
            if np.any(b_next < 0) or np.any(b_next > 1):
                return False, "entry left [0, 1]"
            if np.any(b_next >= b + 1e-14):
                return False, "entry failed to decrease"
            b = b_next
    return True, "entries stayed in [0, 1] and decreased"


def _check_ratio_closed(rng):
    worst = 0.0
    for _ in range(200):
        d_j = float(rng.uniform(0.05, 2.0))
        d_k = d_j + float(rng.uniform(0.05, 3.0))
        lam = float(rng.uniform(0.01, 2.0))
        tau = int(rng.integers(1, 15))
        a = np.array([d_k, d_j]) / (np.array([d_k, d_j]) + lam)
        b = np.ones(2)
        for _t in range(tau):
            b = b_step(a, b, 0.0)
        closed = ratio_closed(d_k, d_j, lam, tau, 0.0)
        worst = max(worst, abs(b[0] / b[1] - closed) / closed)
    return worst <= 1e-10, f"worst relative closed-form gap {worst:.2e}"


def _check_sign_predictor(rng):
    bad = 0
    for _ in range(2000):
        a_j = float(rng.uniform(0.05, 0.95))
        a_k = float(rng.uniform(a_j + 1e-3, 1.0))
        alpha = float(rng.uniform(0.01, 0.99))
        # states reachable after at least one step (B_prev = A onward)
        tau_prev = int(rng.integers(1, 12))
        a = np.array([a_k, a_j])
        b = np.ones(2)
        for _t in range(tau_prev):
            b = b_step(a, b, alpha)
        predicted = ratio_sign_predictor(b[0], b[1], a_k, a_j, alpha)
        b_next = b_step(a, b, alpha)
        change = b_next[0] / b_next[1] - b[0] / b[1]
        if predicted != int(np.sign(change)) and abs(change) > 1e-9:
            bad += 1
    return bad == 0, f"{bad} mismatches out of 2000"


def _check_limit(rng):
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 20))
        K = _random_psd(rng, n)
        y = rng.normal(size=n)
        lam = float(rng.uniform(0.1, 1.0))
        for alpha in (0.25, 0.5, 0.9):
            amplified = K @ solve_regularized(K, lam / alpha, y)
            worst = max(worst, np.max(np.abs(limit_predictions(K, y, alpha, lam) - amplified)))
    return worst <= 1e-12, f"worst identity gap {worst:.2e}"


def _check_contraction(rng):
    for _ in range(10):
        n = int(rng.integers(2, 15))
        K = _random_psd(rng, n)
        y = rng.normal(size=n)
        lam = float(rng.uniform(0.1, 1.0))
        alpha = float(rng.uniform(0.2, 0.9))
        dec = eig_sym(K)
        rho = convergence_rate_bound(dec.eigenvalues, alpha, lam)
        limit = limit_predictions(K, y, alpha, lam)
        chain = run_chain(K, y, DistillConfig(alpha, lam, 40))
        errs = [np.linalg.norm(p - limit) for p in chain.predictions]
        # per-step rounding adds ~eps*||y|| of noise to each error vector,
        # so ratios are only resolvable at the 1e-10 slack while the error
        # is large against that noise
        floor = 1e-3 * (1.0 + np.linalg.norm(y))
        for prev, nxt in zip(errs, errs[1:]):
            if prev <= floor or nxt <= floor:
                break
            if nxt > (rho + 1e-10) * prev:
                return False, f"ratio {nxt / prev:.6f} exceeded rho {rho:.6f}"
    return True, "per-step error ratios stayed below the spectral bound"


def _check_zero_collapse(rng):
    for _ in range(10):
        n = int(rng.integers(2, 15))
        K = _random_psd(rng, n)
        y = rng.normal(size=n)
        lam = float(rng.uniform(0.1, 1.0))
        dec = eig_sym(K)
        rho0 = dec.d_max / (dec.d_max + lam)
        chain = run_chain(K, y, DistillConfig(0.0, lam, 60))
        bound = np.linalg.norm(y)
        for tau in range(1, 61):
            bound *= rho0
            if np.linalg.norm(chain.predictions[tau]) > bound * (1.0 + 1e-10):
                return False, f"norm exceeded the collapse bound at step {tau}"
    return True, "chain norms stayed under the geometric collapse bound"


def _check_generalized_reduction(rng):
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 20))
        a = rng.uniform(0.0, 1.0, size=n)
        alpha = float(rng.uniform(0.05, 0.95))
        b_fixed = np.ones(n)
        b_general = np.ones(n)
        for _t in range(25):
            b_fixed = b_step(a, b_fixed, alpha)
            b_general = generalized_b_step(a, b_general, alpha)
            worst = max(worst, np.max(np.abs(b_fixed - b_general)))
    return worst <= 1e-14, f"worst recursion gap {worst:.2e}"


def _check_multiplier(rng):
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 10))
        G = _random_psd(rng, n)
        y = rng.normal(size=n)
        y_prev = y + rng.normal(scale=0.2, size=n)
        alpha = float(rng.uniform(0.2, 0.8))
        floor = constraint_value(alpha * y + (1 - alpha) * y_prev, y, y_prev, alpha)
        ceiling = constraint_value(np.zeros(n), y, y_prev, alpha)
        eps = float(rng.uniform(0.3, 0.7)) * (ceiling - floor) + floor
        lam_tau = solve_multiplier(G, y, y_prev, alpha, eps)
        if not math.isinf(lam_tau) and lam_tau > 0:
            f = G @ solve_regularized(G, lam_tau, alpha * y + (1 - alpha) * y_prev)
            worst = max(worst, abs(constraint_value(f, y, y_prev, alpha) - eps))
    return worst <= 1e-8, f"worst constraint residual {worst:.2e}"


def _check_regimes(rng):
    for _ in range(10):
        n = int(rng.integers(2, 8))
        G = _random_psd(rng, n)
        y = rng.normal(size=n)
        y /= np.linalg.norm(y)
        alpha = float(rng.uniform(0.2, 0.8))
        t = float(y @ y) / n
        # immediate collapse: eps above ||y||^2/n
        eps = 1.5 * t
        chain = run_constrained_chain(ConstrainedConfig(eps=eps, alpha=alpha, G=G, y=y), 3)
        if chain.collapsed_at != 1:
            return False, "collapsed regime did not zero out at step 1"
        # never collapses: eps below alpha * ||y||^2/n
        eps = 0.5 * alpha * t
        chain = run_constrained_chain(ConstrainedConfig(eps=eps, alpha=alpha, G=G, y=y), 30)
        if chain.collapsed_at is not None:
            return False, "non-collapsed regime collapsed"
        if classify_regime(y, n, eps, alpha).regime.value != "NonCollapsed":
            return False, "classification mismatch"
    return True, "collapse behavior matched the classification"


_CHECKS = [
    ("regularized solve residual", _check_solve_residual),
    ("eigendecomposition reconstruction", _check_eig_reconstruction),
    ("direct formula matches iterated chain", _check_direct_vs_chain),
    ("shrinkage diagonal range and decay", _check_b_monotone),
    ("closed-form ratio law (alpha = 0)", _check_ratio_closed),
    ("ratio sign predictor", _check_sign_predictor),
    ("amplified-regularization limit", _check_limit),
    ("linear convergence rate bound", _check_contraction),
    ("zero collapse at alpha = 0", _check_zero_collapse),
    ("generalized recursion reduction", _check_generalized_reduction),
    ("constraint multiplier residual", _check_multiplier),
    ("collapse regime behavior", _check_regimes),
]


def run_selfcheck(seed: int = 0, out=print) -> bool:
    """Run every invariant check; prints one line each, True if all passed."""
    rng = np.random.default_rng(seed)
    all_ok = True
    for name, check in _CHECKS:
        ok, detail = check(rng)
        all_ok &= ok
        out(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return all_ok
