"""Fourier representation of von Mises kernel sums on the circle."""
from __future__ import annotations

import math

import numpy as np
from scipy.special import ive


def n_terms(kappa: float) -> int:
    """Series length after which ``I_k(kappa)/I_0(kappa)`` is below double precision."""
    return int(math.ceil(math.sqrt(80.0 * kappa + 400.0))) + 8


def coef_ratios(kappa: float, K: int) -> np.ndarray:
    """``I_k(kappa) / I_0(kappa)`` for k = 0..K."""
    if kappa <= 0:
        out = np.zeros(K + 1)
        out[0] = 1.0
        return out
    return ive(np.arange(K + 1), kappa) / ive(0, kappa)


def grid_size(K: int, minimum: int) -> int:
    return max(int(minimum), 1 << int(math.ceil(math.log2(2 * K + 2))))


def char_powers(angles: np.ndarray, K: int) -> np.ndarray:
    """Matrix ``exp(i k theta_j)`` for k = 0..K (rows = observations)."""
    return np.exp(1j * np.outer(angles, np.arange(K + 1)))


def grid_values(a: np.ndarray, N: int) -> np.ndarray:
    """Evaluate ``(1/2pi) sum_k a_k e^{ik theta}`` (Hermitian, a_0 real) on N angles."""
    A = np.zeros(N // 2 + 1, dtype=complex)
    m = min(len(a), N // 2)
    A[:m] = a[:m]
    return np.fft.irfft(A, n=N) * (N / (2.0 * np.pi))

