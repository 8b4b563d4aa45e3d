"""Cross-validation selectors: least squares (h4) and likelihood (h5)."""
from __future__ import annotations

import warnings

import numpy as np

from ..geometry import unit_vectors
from ..kde import _log_sum_exp_nonpos
from ..vmf import log_norm_const, log_norm_const_scaled
from .optimize import SelectorConfig, SelectionResult, minimize_scalar

DEFAULT_INTERVAL = (0.005, 3.0)


class _Pairs:
    """Inner products of a sample with itself, shared across bandwidths."""

    def __init__(self, x):
        self.x = x
        self.n, self.q = len(x), x.shape[1] - 1
        t = np.minimum(x @ x.T, 1.0)
        self.off = t - 1.0
        np.fill_diagonal(self.off, -np.inf)
        iu = np.triu_indices(self.n, 1)
        self.tu = t[iu]

    def loo_log(self, h):
        k = 1.0 / (h * h)
        return (_log_sum_exp_nonpos(k * self.off) + log_norm_const_scaled(self.q, k)
                - np.log(self.n - 1))

    def int_sq(self, h):
        """Exact ``int f_n^2`` from the product of two vMF kernels."""
        k = 1.0 / (h * h)
        lc = log_norm_const(self.q, k)
        rho_off = k * np.sqrt(np.maximum(2.0 + 2.0 * self.tu, 0.0))
        diag = np.exp(2 * lc - log_norm_const(self.q, 2.0 * k))
        off = np.exp(2 * lc - log_norm_const(self.q, rho_off)).sum()
        return (self.n * diag + 2.0 * off) / self.n ** 2


def lscv_objective(sample, h, pairs=None) -> float:
    """``2/n sum f^{-i}(X_i) - int f_n^2`` (to be maximized)."""
    p = pairs or _Pairs(unit_vectors(sample))
    return float(2.0 * np.exp(p.loo_log(h)).mean() - p.int_sq(h))


def lcv_objective(sample, h, pairs=None) -> float:
    """``sum log f^{-i}(X_i)`` (to be maximized)."""
    p = pairs or _Pairs(unit_vectors(sample))
    return float(p.loo_log(h).sum())


def _select(sample, config, objective, name):
    config = config or SelectorConfig()
    x = unit_vectors(sample)
    if len(x) < 2:
        raise ValueError(f"{name} needs at least two observations")
    pairs = _Pairs(x)

    def neg(h):
        v = objective(x, h, pairs)
        if not np.isfinite(v):
            warnings.warn(f"{name}: objective not finite at h={h:.4g}; candidate discarded", RuntimeWarning)
            return np.inf
        return -v

    lo, hi = config.search_interval or DEFAULT_INTERVAL
    res = minimize_scalar(neg, lo, hi, n_grid=config.search_grid or 40, xtol=config.xtol or 1e-6, name=name)
    res.trace = res.trace * np.array([1.0, -1.0])
    return res


def h4_lscv(sample, config: SelectorConfig | None = None) -> SelectionResult:
    return _select(sample, config, lscv_objective, "h4")


def h5_lcv(sample, config: SelectorConfig | None = None) -> SelectionResult:
    return _select(sample, config, lcv_objective, "h5")
