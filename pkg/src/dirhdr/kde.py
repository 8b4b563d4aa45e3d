"""Directional kernel density estimation with the von Mises-Fisher kernel."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .geometry import EvalGrid, unit_vectors
from .vmf import log_norm_const_scaled, sample_vmf_rows

# elements per block of the (points x sample) kernel matrix
_BLOCK = 1 << 22


@dataclass(frozen=True, eq=False)
class KdeEstimate:
    """Kernel density estimate ``f_n(x) = mean_i C_q(k) exp(k x.X_i)`` with ``k = 1/h^2``."""

    sample: np.ndarray
    h: float

    def __post_init__(self):
        x = unit_vectors(self.sample)
        if len(x) < 1:
            raise ValueError("kernel estimate needs at least one observation")
        h = float(self.h)
        if not np.isfinite(h) or h <= 0:
            raise ValueError("bandwidth must be positive and finite")
        object.__setattr__(self, "sample", x)
        object.__setattr__(self, "h", h)

    @property
    def q(self) -> int:
        return self.sample.shape[1] - 1

    @property
    def n(self) -> int:
        return len(self.sample)

    @property
    def kappa(self) -> float:
        return 1.0 / (self.h * self.h)

    def log_pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.q + 1:
            raise ValueError("point dimension does not match the sample")
        out = log_kernel_sum(x, self.sample, self.kappa) - np.log(self.n)
        return out[0] if single else out

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.log_pdf(x))

    def sample_from(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Smoothed bootstrap: pick observations uniformly, then jitter with the kernel."""
        idx = rng.integers(0, self.n, size=int(n))
        return sample_vmf_rows(self.sample[idx], self.kappa, rng)

    sample_points = sample_from


def _log_sum_exp_nonpos(e: np.ndarray) -> np.ndarray:
    """Row-wise log-sum-exp of exponents that are all <= 0."""
    with np.errstate(divide="ignore"):
        raw = np.log(np.exp(e).sum(axis=1)) if e.size else np.full(len(e), -np.inf)
    bad = ~(raw > -600.0)
    if np.any(bad):
        raw[bad] = logsumexp(e[bad], axis=1)
    return raw


def log_kernel_sum(x: np.ndarray, data: np.ndarray, kappa: float) -> np.ndarray:
    """``log sum_i C(k) exp(k x.X_i)`` for each row of `x`, overflow safe.

    Each term is evaluated as ``exp(log C + k) * exp(k (x.X_i - 1))`` so the
    exponent never exceeds zero.
    """
    m = len(x)
    out = np.empty(m)
    lc = log_norm_const_scaled(data.shape[1] - 1, kappa)
    step = max(1, _BLOCK // max(1, len(data)))
    for s in range(0, m, step):
        e = x[s:s + step] @ data.T
        np.minimum(e, 1.0, out=e)
        e -= 1.0
        e *= kappa
        out[s:s + step] = _log_sum_exp_nonpos(e)
    return out + lc


def kde_eval(est: KdeEstimate, x) -> float | np.ndarray:
    return est.pdf(x)


def kde_eval_grid(est: KdeEstimate, grid: EvalGrid) -> np.ndarray:
    if grid.q != est.q:
        raise ValueError("grid and estimate live on different spheres")
    return est.pdf(grid.points)


def kde_loo_values(est: KdeEstimate) -> np.ndarray:
    """Log leave-one-out values ``log f_n^{-i}(X_i)`` for every observation."""
    n = est.n
    if n < 2:
        raise ValueError("leave-one-out needs at least two observations")
    x, k = est.sample, est.kappa
    out = np.empty(n)
    lc = log_norm_const_scaled(est.q, k)
    step = max(1, _BLOCK // n)
    for s in range(0, n, step):
        t = np.minimum(x[s:s + step] @ x.T, 1.0)
        e = k * (t - 1.0)
        rows = np.arange(s, min(n, s + step))
        e[rows - s, rows] = -np.inf
        out[s:s + step] = _log_sum_exp_nonpos(e)
    return out + lc - np.log(n - 1)


def kde_loo_eval(est: KdeEstimate, i: int) -> float:
    """``f_n^{-i}(X_i)``: the estimate without observation `i`, evaluated at it."""
    if est.n < 2:
        raise ValueError("leave-one-out needs at least two observations")
    rest = np.delete(est.sample, i, axis=0)
    return float(np.exp(log_kernel_sum(est.sample[i:i + 1], rest, est.kappa)[0] - np.log(est.n - 1)))
