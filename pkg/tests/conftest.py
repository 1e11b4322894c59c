import numpy as np


def random_psd(rng, n: int) -> np.ndarray:
    """Random symmetric PSD matrix with O(1) eigenvalue scale."""
    M = rng.normal(size=(n, n))
    K = M @ M.T / n
    return (K + K.T) / 2.0
