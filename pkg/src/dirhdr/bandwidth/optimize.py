"""Shared configuration, results and the scalar minimizer used by the selectors."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

SELECTOR_IDS = ("h1", "h2", "h3", "h4", "h5", "h6", "h7")


class SelectorError(RuntimeError):
    pass


class UniformDataError(SelectorError):
    """Data look uniform, so a reference concentration cannot be estimated."""


class DegenerateDataError(SelectorError):
    """All observations coincide."""


class BoundaryHitWarning(UserWarning):
    pass


@dataclass
class SelectorConfig:
    search_interval: tuple | None = None
    search_grid: int | None = None
    B: int | None = None
    pilot: str | float | None = None
    tau: float | None = None
    seed: int = 0
    grid_resolution: int | None = None
    xtol: float | None = None
    threshold_mode: str = "sample-values"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.search_interval is not None:
            lo, hi = map(float, self.search_interval)
            if not 0 < lo < hi:
                raise ValueError("search interval must satisfy 0 < h_lo < h_hi")
            self.search_interval = (lo, hi)
        if self.search_grid is not None and self.search_grid < 8:
            raise ValueError("search_grid must be at least 8")
        if self.B is not None and self.B < 1:
            raise ValueError("B must be at least 1")
        if self.tau is not None and not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if isinstance(self.pilot, str) and self.pilot not in SELECTOR_IDS:
            raise ValueError(f"unknown pilot selector {self.pilot!r}")
        if isinstance(self.pilot, (int, float)) and not self.pilot > 0:
            raise ValueError("explicit pilot bandwidth must be positive")


@dataclass
class SelectionResult:
    h: float
    selector: str = ""
    trace: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    boundary_hit: bool = False
    info: dict = field(default_factory=dict)

    def __float__(self):
        return self.h


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def minimize_scalar(objective, lo: float, hi: float, n_grid: int = 24, xtol: float = 1e-6,
                    batch=None, name: str = "") -> SelectionResult:
    """Log-grid scan over ``[lo, hi]`` followed by golden-section refinement.

    `objective` maps a bandwidth to a real value; non-finite values count as
    ``+inf``.  Ties on the grid resolve to the smallest bandwidth.  If the best
    grid point is an endpoint the search stops there and a
    :class:`BoundaryHitWarning` is issued.  `batch`, if given, evaluates a
    list of bandwidths at once and is used for the scan.  `xtol` is the
    refinement tolerance in log-bandwidth.
    """
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    if n_grid < 2:
        raise ValueError("need at least two grid points")
    hs = np.geomspace(lo, hi, n_grid)
    vals = np.asarray(batch(hs) if batch is not None else [objective(h) for h in hs], dtype=float)
    vals = np.where(np.isfinite(vals), vals, np.inf)
    if not np.isfinite(vals).any():
        raise SelectorError(f"{name or 'objective'} is not finite anywhere on the search grid")
    evals = dict(zip(hs.tolist(), vals.tolist()))
    i = int(np.argmin(vals))
    hit = i in (0, n_grid - 1)
    if hit:
        warnings.warn(f"{name or 'selector'}: optimum at search interval edge h={hs[i]:.6g}",
                      BoundaryHitWarning, stacklevel=2)
    else:
        def f(u):
            h = math.exp(u)
            if h not in evals:
                v = float(objective(h))
                evals[h] = v if math.isfinite(v) else math.inf
            return evals[h]

        a, b = math.log(hs[i - 1]), math.log(hs[i + 1])
        c, d = b - _INV_PHI * (b - a), a + _INV_PHI * (b - a)
        fc, fd = f(c), f(d)
        while b - a > xtol:
            if fc <= fd:
                b, d, fd = d, c, fc
                c = b - _INV_PHI * (b - a)
                fc = f(c)
            else:
                a, c, fc = c, d, fd
                d = a + _INV_PHI * (b - a)
                fd = f(d)
    trace = np.array(sorted(evals.items()))
    best = min(evals.items(), key=lambda kv: (kv[1], kv[0]))
    return SelectionResult(float(best[0]), name, trace, hit)
