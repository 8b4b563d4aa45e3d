"""Closed-form reference rules: Taylor's circular rule and the directional rule of thumb."""
from __future__ import annotations

import math

import numpy as np

from ..geometry import unit_vectors
from ..special import log_bessel_i
from ..vmf import mean_resultant_to_kappa
from .optimize import DegenerateDataError, SelectionResult, UniformDataError

KAPPA_BRACKET = (1e-8, 1e6)


def kappa_mle(sample) -> float:
    """Maximum likelihood concentration of a single vMF fitted to `sample`."""
    x = unit_vectors(sample)
    rbar = float(np.linalg.norm(x.mean(axis=0)))
    if rbar >= 1.0 - 1e-10:
        raise DegenerateDataError("all observations coincide; concentration diverges")
    k = mean_resultant_to_kappa(rbar, x.shape[1] - 1)
    if k <= KAPPA_BRACKET[0] * (1 + 1e-9):
        raise UniformDataError("mean resultant length is zero; data look uniform")
    return k


def taylor_bandwidth(kappa: float, n: int) -> float:
    # log of 4 sqrt(pi) I0(k)^2 / (3 k^2 I2(2k) n)
    lg = (math.log(4.0) + 0.5 * math.log(math.pi) + 2.0 * log_bessel_i(0, kappa)
          - math.log(3.0) - 2.0 * math.log(kappa) - log_bessel_i(2, 2.0 * kappa) - math.log(n))
    return math.exp(lg / 5.0)


def rot_bandwidth(kappa: float, n: int, q: int) -> float:
    if q == 1:
        # I1(2k) + 3k I2(2k), factored by I2(2k)
        l2 = log_bessel_i(2, 2.0 * kappa)
        l1 = log_bessel_i(1, 2.0 * kappa)
        log_den = l2 + math.log(math.exp(l1 - l2) + 3.0 * kappa)
        lg = (math.log(4.0) + 0.5 * math.log(math.pi) + 2.0 * log_bessel_i(0, kappa)
              - math.log(kappa) - log_den - math.log(n))
        return math.exp(lg / 5.0)
    # sinh/cosh scaled by exp(-2k) to stay finite for large k
    e4 = math.exp(-4.0 * kappa)
    num = 2.0 * math.expm1(-2.0 * kappa) ** 2
    den = kappa * ((1.0 + 4.0 * kappa ** 2) * (1.0 - e4) / 2.0 - kappa * (1.0 + e4)) * n
    return (num / den) ** (1.0 / 6.0)


def h2_taylor(sample, config=None) -> SelectionResult:
    x = unit_vectors(sample)
    if x.shape[1] != 2:
        raise ValueError("h2 is defined for circular data only")
    k = kappa_mle(x)
    return SelectionResult(taylor_bandwidth(k, len(x)), "h2", info={"kappa_hat": k})


def h7_rot(sample, config=None) -> SelectionResult:
    x = unit_vectors(sample)
    k = kappa_mle(x)
    return SelectionResult(rot_bandwidth(k, len(x), x.shape[1] - 1), "h7", info={"kappa_hat": k})
