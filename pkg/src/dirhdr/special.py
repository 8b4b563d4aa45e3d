"""Modified Bessel functions of the first kind and the gamma function.

Values come from the exponentially scaled Bessel routine in scipy, so
``log_bessel_i`` stays finite for concentrations far beyond the overflow point
of ``I_p`` itself.
"""
from __future__ import annotations

import numpy as np
from scipy import special as _sp


def _check(p, z):
    p = np.asarray(p, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(p < -1):
        raise ValueError("Bessel order must be >= -1")
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise ValueError("Bessel argument must be >= 0")
    return p, z


def log_bessel_i(p, z):
    """``log I_p(z)`` for ``z >= 0``, vectorized."""
    p, z = _check(p, z)
    with np.errstate(divide="ignore"):
        scaled = _sp.ive(p, z)
        out = np.log(scaled) + z
    # ive underflows to 0 only for vanishing z; fall back to the leading series term
    tiny = (scaled == 0) & (z > 0)
    if np.any(tiny):
        pb, zb = np.broadcast_arrays(p, z)
        out = np.where(tiny, pb * np.log(np.where(tiny, zb, 1.0) / 2) - _sp.gammaln(pb + 1), out)
    return out[()] if out.ndim == 0 else out


def bessel_i(p, z):
    """``I_p(z)``; overflows to ``inf`` past z ~ 700, use :func:`log_bessel_i` there."""
    p, z = _check(p, z)
    out = _sp.iv(p, z)
    return out[()] if np.ndim(out) == 0 else out


def bessel_ratio(p, z):
    """``I_{p+1}(z) / I_p(z)`` computed without overflow."""
    p, z = _check(p, z)
    out = _sp.ive(p + 1, z) / _sp.ive(p, z)
    return out[()] if np.ndim(out) == 0 else out


def gamma_fn(p):
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ValueError("gamma_fn is defined here for p > 0 only")
    out = _sp.gamma(p)
    return out[()] if out.ndim == 0 else out
