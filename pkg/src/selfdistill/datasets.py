"""Training datasets: validation plus the synthetic sine benchmark."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Dataset", "generate_sine"]


@dataclass(frozen=True)
class Dataset:
    """Inputs ``X`` (n, d) and targets ``y`` (n,), all finite."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"X must be (n, d) with n, d >= 1, got shape {X.shape}")
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"y has {y.shape[0]} entries, X has {X.shape[0]} rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def generate_sine(n_points: int, noise_sigma: float, seed: int) -> Dataset:
    """Noisy sine on an even grid: ``y = sin(2 pi x) + noise``.

    ``X`` is the ``n_points``-point even grid on [0, 1].  The noise is
    i.i.d. Gaussian with standard deviation ``noise_sigma``, drawn from
    a PCG64 generator (``numpy.random.default_rng``) seeded with
    ``seed``, so the same seed reproduces the dataset bit for bit.
    """
    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points}")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
    x = np.linspace(0.0, 1.0, n_points)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, noise_sigma, size=n_points)
    return Dataset(X=x[:, None], y=np.sin(2.0 * np.pi * x) + noise)
