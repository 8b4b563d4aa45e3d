"""Mixture plug-in selector minimizing the circular AMISE."""
from __future__ import annotations

import math

import numpy as np

from ..geometry import TWO_PI, angle_to_unit, unit_vectors
from ..special import bessel_ratio, log_bessel_i
from .em import em_fit_vm_mixture
from .optimize import SelectorConfig, SelectionResult, minimize_scalar

CURVATURE_GRID = 1 << 14


def curvature(density, n_grid: int = CURVATURE_GRID) -> float:
    """``int f''(theta)^2 dtheta`` by periodic central differences."""
    d = TWO_PI / n_grid
    f = np.asarray(density.pdf(angle_to_unit(np.arange(n_grid) * d)))
    f2 = (np.roll(f, -1) - 2.0 * f + np.roll(f, 1)) / (d * d)
    return float(np.sum(f2 * f2) * d)


def amise(h: float, n: int, curv: float) -> float:
    """Asymptotic MISE of the circular vM-kernel estimator at bandwidth h (kappa = 1/h^2)."""
    k = 1.0 / (h * h)
    # I2/I0 = (I1/I0)(I2/I1)
    r = bessel_ratio(0, k) * bessel_ratio(1, k)
    bias = (1.0 - r) ** 2 * curv / 16.0
    var = math.exp(log_bessel_i(0, 2.0 * k) - 2.0 * log_bessel_i(0, k)) / (2.0 * n * math.pi)
    return bias + var


def h3_oliveira(sample, config: SelectorConfig | None = None) -> SelectionResult:
    config = config or SelectorConfig()
    x = unit_vectors(sample)
    if x.shape[1] != 2:
        raise ValueError("h3 is defined for circular data only")
    n = len(x)
    kmax = max(1, min(5, n // 10))
    fit = em_fit_vm_mixture(x, k_range=config.extra.get("k_range", range(1, kmax + 1)),
                            restarts=config.extra.get("restarts", 5), seed=config.seed)
    curv = curvature(fit.model)
    lo, hi = config.search_interval or (0.005, 3.0)
    res = minimize_scalar(lambda h: amise(h, n, curv), lo, hi, n_grid=config.search_grid or 40,
                          xtol=config.xtol or 1e-6, name="h3")
    res.info.update(curvature=curv, k=fit.k, aic=fit.aic, mixture=fit.model)
    return res
