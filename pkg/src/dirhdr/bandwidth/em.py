"""EM fitting of circular von Mises mixtures with AIC model choice."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ive

from ..geometry import TWO_PI, angle_to_unit, unit_to_angle
from ..special import log_bessel_i
from ..vmf import MixtureModel, VonMisesFisher
from .optimize import SelectorError

KAPPA_MAX = 1e5


@dataclass
class MixtureFit:
    model: MixtureModel
    k: int
    loglik: float
    aic: float
    converged: bool = True
    candidates: dict | None = None


def a1_inverse(r):
    """Solve ``I1(k)/I0(k) = r`` elementwise (approximation plus Newton steps)."""
    r = np.clip(np.asarray(r, dtype=float), 1e-12, 1 - 1e-12)
    k = np.where(r < 0.53, 2 * r + r ** 3 + 5 * r ** 5 / 6,
                 np.where(r < 0.85, -0.4 + 1.39 * r + 0.43 / (1 - r), 1 / (r ** 3 - 4 * r ** 2 + 3 * r)))
    k = np.minimum(k, KAPPA_MAX)
    for _ in range(6):
        a = ive(1, k) / ive(0, k)
        da = 1.0 - a / k - a * a
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(da > 1e-14, (a - r) / da, 0.0)
        k = np.clip(k - step, 1e-10, KAPPA_MAX)
    return k


def _loglik_terms(cs, mu, kappa, w):
    # (n, k) matrix of log w_j + log vM(theta_i; mu_j, kappa_j); cs holds (cos, sin) rows
    dirs = np.vstack([np.cos(mu), np.sin(mu)]) * kappa
    return (np.log(w) - np.log(TWO_PI) - log_bessel_i(0, kappa))[None, :] + cs @ dirs


def _log_total(L):
    m = L.max(axis=1)
    return m + np.log(np.exp(L - m[:, None]).sum(axis=1))


def _kmeans_seeds(theta, k, rng, iters=10):
    n = len(theta)
    centers = [theta[rng.integers(n)]]
    for _ in range(1, k):
        d = np.min(1.0 - np.cos(theta[:, None] - np.array(centers)[None, :]), axis=1)
        p = d / d.sum() if d.sum() > 0 else np.full(n, 1.0 / n)
        centers.append(theta[rng.choice(n, p=p)])
    c = np.array(centers)
    for _ in range(iters):
        lab = np.argmax(np.cos(theta[:, None] - c[None, :]), axis=1)
        for j in range(k):
            sel = theta[lab == j]
            if len(sel):
                c[j] = np.arctan2(np.sin(sel).sum(), np.cos(sel).sum())
    lab = np.argmax(np.cos(theta[:, None] - c[None, :]), axis=1)
    w = np.array([max(np.mean(lab == j), 1.0 / n) for j in range(k)])
    r = np.array([np.abs(np.exp(1j * theta[lab == j]).mean()) if np.any(lab == j) else 0.5 for j in range(k)])
    return c, a1_inverse(r), w / w.sum()


def _em(cs, mu, kappa, w, tol, max_iter):
    ll_old = -np.inf
    n = len(cs)
    for _ in range(max_iter):
        L = _loglik_terms(cs, mu, kappa, w)
        tot = _log_total(L)
        ll = float(tot.sum())
        resp = np.exp(L - tot[:, None])
        nk = resp.sum(axis=0)
        if np.any(nk < 1e-8 * n):
            return None
        w = nk / n
        C, S = (resp.T @ cs).T
        mu = np.arctan2(S, C)
        kappa = a1_inverse(np.hypot(C, S) / nk)
        if abs(ll - ll_old) < tol:
            return mu, kappa, w, ll, True
        ll_old = ll
    ll = float(_log_total(_loglik_terms(cs, mu, kappa, w)).sum())
    return mu, kappa, w, ll, False


def em_fit_vm_mixture(sample, k_range=range(1, 6), restarts: int = 5, seed: int = 0,
                      tol: float = 1e-8, max_iter: int = 500) -> MixtureFit:
    """Fit von Mises mixtures for each k in `k_range` and keep the lowest AIC."""
    x = np.asarray(sample, dtype=float)
    theta = unit_to_angle(x) if x.ndim == 2 else np.mod(x, TWO_PI)
    k_range = list(k_range)
    if len(theta) < 10 * max(k_range):
        raise ValueError("need at least 10 observations per mixture component")
    rng = np.random.default_rng(seed)
    cs = np.column_stack([np.cos(theta), np.sin(theta)])
    candidates = {}
    for k in k_range:
        best = None
        for _ in range(restarts):
            mu0, k0, w0 = _kmeans_seeds(theta, k, rng)
            res = _em(cs, mu0, k0, w0, tol, max_iter)
            if res is None or not np.isfinite(res[3]):
                continue
            if best is None or res[3] > best[3]:
                best = res
            if k == 1:
                break  # single component EM is deterministic after one step
        if best is None:
            continue
        mu, kappa, w, ll, conv = best
        comps = tuple(VonMisesFisher(angle_to_unit(m), kk) for m, kk in zip(mu, kappa))
        model = MixtureModel(comps, w / w.sum())
        aic = -2.0 * ll + 2.0 * (3 * k - 1)
        candidates[k] = MixtureFit(model, k, ll, aic, conv)
    if not candidates:
        raise SelectorError("EM failed for every number of components and restart")
    best = min(candidates.values(), key=lambda f: (f.aic, f.k))
    best.candidates = candidates
    return best
