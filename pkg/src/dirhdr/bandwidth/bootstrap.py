"""Bootstrap selectors: the Hausdorff-risk selector for HDRs (h1) and bootstrap MISE (h6)."""
from __future__ import annotations

import math
import warnings

import numpy as np

from ..geometry import TWO_PI, EvalGrid, make_grid, unit_to_angle, unit_vectors
from ..kde import KdeEstimate, kde_eval_grid
from ..levelsets import density_quantile, region_from_values, sphere_crossings
from ..metrics import hausdorff
from ..vmf import log_norm_const
from . import _fourier as fs
from .optimize import SelectorConfig, SelectionResult, minimize_scalar

PENALTY = 2.0
H1_GRID = {1: 4096, 2: 128}
H1_B = {1: 200, 2: 50}
H1_PILOT = {1: "h3", 2: "h5"}


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


# --- h6 -------------------------------------------------------------------

class BootstrapMise:
    """Smoothed-bootstrap MISE of the circular estimator, without resampling.

    Resamples come from the pilot estimate ``f_g``; for a trial bandwidth h
    ``E* f*_h = K_h * f_g`` and ``Var* f*_h = (K_h^2 * f_g - (K_h * f_g)^2) / n``.
    Convolutions are products of Fourier coefficients of the vM kernel; the
    integrals are quadratures on a dense grid.
    """

    def __init__(self, sample, pilot_h: float, h_min: float, n_grid: int = 2048):
        x = unit_vectors(sample)
        if x.shape[1] != 2:
            raise ValueError("bootstrap MISE is implemented for circular data")
        self.n = len(x)
        self.K = fs.n_terms(2.0 / h_min ** 2)
        self.N = fs.grid_size(self.K, n_grid)
        powers = fs.char_powers(unit_to_angle(x), self.K)
        self.c = powers.conj().mean(axis=0)
        self.pilot_coef = self.c * fs.coef_ratios(1.0 / pilot_h ** 2, self.K)
        self.f_pilot = fs.grid_values(self.pilot_coef, self.N)

    def terms(self, h: float):
        k = 1.0 / (h * h)
        rho = fs.coef_ratios(k, self.K)
        mean = fs.grid_values(self.pilot_coef * rho, self.N)
        scale = math.exp(2 * log_norm_const(1, k) - log_norm_const(1, 2 * k))
        sq = scale * fs.grid_values(self.pilot_coef * fs.coef_ratios(2 * k, self.K), self.N)
        w = TWO_PI / self.N
        bias2 = float(np.sum((mean - self.f_pilot) ** 2) * w)
        var = float(np.sum(sq - mean ** 2) * w) / self.n
        return bias2, var

    def __call__(self, h: float) -> float:
        b, v = self.terms(h)
        return b + v


def h6_bootstrap_mise(sample, config: SelectorConfig | None = None) -> SelectionResult:
    config = config or SelectorConfig()
    x = unit_vectors(sample)
    pilot = _pilot_bandwidth(x, config.pilot if config.pilot is not None else "h7", config)
    lo, hi = config.search_interval or (0.005, 3.0)
    obj = BootstrapMise(x, pilot, lo)
    res = minimize_scalar(obj, lo, hi, n_grid=config.search_grid or 40, xtol=config.xtol or 1e-6, name="h6")
    res.info["pilot"] = pilot
    return res


def _pilot_bandwidth(x, pilot, config: SelectorConfig) -> float:
    if isinstance(pilot, (int, float)):
        return float(pilot)
    from . import select_bandwidth

    sub = SelectorConfig(seed=config.seed, grid_resolution=config.grid_resolution)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return select_bandwidth(x, pilot, sub).h


# --- h1 -------------------------------------------------------------------

class _SphereHdr:
    """Fast HDR boundaries on a coarse sphere grid for many bandwidths."""

    def __init__(self, grid: EvalGrid):
        self.grid = grid
        self.pts32 = grid.points.astype(np.float32)

    def prepare(self, x):
        return x.astype(np.float32)

    def boundaries(self, x32, hs):
        # kernel sums without the common constant C(k) e^k / n; float32 is ample here
        g0 = self.pts32 @ x32.T - np.float32(1.0)
        s0 = x32 @ x32.T - np.float32(1.0)
        for h in hs:
            k = np.float32(1.0 / (h * h))
            vals = np.exp(k * g0).sum(axis=1, dtype=np.float64)
            at = np.exp(k * s0).sum(axis=1, dtype=np.float64)
            yield self._crossings(vals, at)

    def _crossings(self, vals, at_sample):
        level, _ = density_quantile(at_sample, self.tau)
        inside = vals >= level
        if inside.all() or not inside.any():
            return None
        pts = sphere_crossings(self.grid, vals, level)
        return pts if len(pts) else None

    def reference(self, est: KdeEstimate):
        vals = kde_eval_grid(est, self.grid)
        return self._crossings(vals, est.pdf(est.sample))


class _CircleHdr:
    """HDR boundaries on the circle through the Fourier series of the estimator."""

    def __init__(self, grid: EvalGrid, K: int):
        self.grid, self.K, self.N = grid, K, grid.size

    def prepare(self, x):
        # sample-point values are interpolated from the fine grid; they only
        # feed the order statistic of the threshold
        theta = unit_to_angle(x)
        u = theta * (self.N / TWO_PI)
        i0 = np.floor(u).astype(int) % self.N
        return fs.char_powers(theta, self.K).conj().mean(axis=0), i0, (i0 + 1) % self.N, u - np.floor(u)

    def boundaries(self, prepared, hs):
        c, i0, i1, frac = prepared
        for h in hs:
            vals = fs.grid_values(c * fs.coef_ratios(1.0 / (h * h), self.K), self.N)
            yield self._crossings(vals, vals[i0] * (1.0 - frac) + vals[i1] * frac)

    def _crossings(self, vals, at_sample):
        level, _ = density_quantile(at_sample, self.tau)
        reg = region_from_values(self.grid, vals, level)
        if not reg.is_proper:
            return None
        ends = np.concatenate([reg.arcs[:, 0], reg.arcs[:, 1]])
        return np.column_stack([np.cos(ends), np.sin(ends)])

    def reference(self, est: KdeEstimate):
        return next(self.boundaries(self.prepare(est.sample), [est.h]))


class HausdorffRisk:
    """Bootstrap mean Hausdorff distance between resample HDR boundaries and the pilot's."""

    def __init__(self, sample, tau: float, pilot_h: float, B: int, seed: int, h_min: float,
                 grid_resolution: int | None = None):
        x = unit_vectors(sample)
        self.q = x.shape[1] - 1
        self.pilot = KdeEstimate(x, pilot_h)
        res = grid_resolution or H1_GRID[self.q]
        if self.q == 1:
            K = fs.n_terms(1.0 / h_min ** 2)
            self.engine = _CircleHdr(make_grid(1, fs.grid_size(K, res)), K)
        else:
            self.engine = _SphereHdr(make_grid(2, res))
        self.engine.tau = tau
        self.reference = self.engine.reference(self.pilot)
        self.resamples = [self.engine.prepare(self.pilot.sample_from(len(x), replicate_rng(seed, b)))
                          for b in range(B)]

    def errors(self, hs):
        """Per-resample errors, shape ``(len(hs), B)``."""
        out = np.full((len(hs), len(self.resamples)), PENALTY)
        if self.reference is None:
            return out
        for b, prep in enumerate(self.resamples):
            for i, pts in enumerate(self.engine.boundaries(prep, hs)):
                if pts is not None:
                    out[i, b] = hausdorff(self.reference, pts)
        return out

    def batch(self, hs):
        return self.errors(list(hs)).mean(axis=1)

    def __call__(self, h):
        return float(self.batch([h])[0])


def h1_bootstrap_hausdorff(sample, config: SelectorConfig | None = None) -> SelectionResult:
    """Bandwidth minimizing the bootstrap risk of the HDR boundary in Hausdorff distance."""
    config = config or SelectorConfig()
    if config.tau is None:
        raise ValueError("h1 needs the HDR level tau")
    x = unit_vectors(sample)
    q = x.shape[1] - 1
    if len(x) < 50:
        raise ValueError("h1 needs at least 50 observations")
    pilot = _pilot_bandwidth(x, config.pilot if config.pilot is not None else H1_PILOT[q], config)
    lo, hi = config.search_interval or (pilot / 8.0, pilot * 8.0)
    risk = HausdorffRisk(x, config.tau, pilot, config.B or H1_B[q], config.seed, lo, config.grid_resolution)
    if risk.reference is None:
        warnings.warn("h1: pilot HDR has no boundary; every candidate gets the maximal penalty",
                      RuntimeWarning, stacklevel=2)
    res = minimize_scalar(risk, lo, hi, n_grid=config.search_grid or 24, xtol=config.xtol or 0.01,
                          batch=risk.batch, name="h1")
    res.info.update(pilot=pilot, B=len(risk.resamples), tau=config.tau)
    return res
