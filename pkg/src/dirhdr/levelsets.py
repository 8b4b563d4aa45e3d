"""Highest density regions: thresholds, level sets, boundaries and clusters."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import TWO_PI, EvalGrid, angle_to_unit, integrate, unit_to_angle
from .kde import KdeEstimate

# relative range below which a density counts as constant: any set of the
# right measure is then an HDR to within this much probability
FLAT_RTOL = 1e-6


class EmptyBoundary(ValueError):
    """Raised when a region is empty or covers the whole sphere."""


@dataclass(frozen=True)
class ThresholdEstimate:
    tau: float
    value: float
    source: str
    m: int
    j: int


@dataclass(frozen=True, eq=False)
class BoundarySet:
    points: np.ndarray
    q: int

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True, eq=False)
class Region:
    """Super-level set ``{x : f(x) >= level}`` discretized on a grid.

    On the circle `arcs` holds rows ``(start, end)`` with ``start`` in
    ``[0, 2 pi)`` and ``end - start`` the arc length, so ``end`` may exceed
    ``2 pi`` for an arc that wraps through angle zero.
    """

    q: int
    level: float
    grid: EvalGrid
    values: np.ndarray
    mask: np.ndarray
    arcs: np.ndarray | None = None
    density: object = None
    threshold: ThresholdEstimate | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def is_empty(self) -> bool:
        return not self.mask.any()

    @property
    def is_full(self) -> bool:
        return bool(self.mask.all())

    @property
    def is_proper(self) -> bool:
        return not (self.is_empty or self.is_full)

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.density is not None:
            return np.asarray(self.density.pdf(x)) >= self.level
        return self.mask[nearest_grid_index(self.grid, x)]

    def area(self) -> float:
        return integrate(self.grid, self.mask.astype(float))


def nearest_grid_index(grid: EvalGrid, x: np.ndarray) -> np.ndarray:
    out = np.empty(len(x), dtype=int)
    step = max(1, (1 << 22) // grid.size)
    for s in range(0, len(x), step):
        out[s:s + step] = np.argmax(x[s:s + step] @ grid.points.T, axis=1)
    return out


def _pdf(density, x):
    return np.asarray(density.pdf(x), dtype=float)


def draw(density, n: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(density, KdeEstimate):
        return density.sample_from(n, rng)
    return density.sample(n, rng)


# --- thresholds -----------------------------------------------------------

def density_quantile(values, tau: float) -> tuple[float, int]:
    """j-th smallest of `values` with ``j = floor(tau * m)`` clamped to ``[1, m]``."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    v = np.asarray(values, dtype=float).ravel()
    m = len(v)
    if m == 0:
        raise ValueError("no density values")
    j = min(max(int(np.floor(tau * m)), 1), m)
    return float(np.partition(v, j - 1)[j - 1]), j


def estimate_threshold(est, tau: float, mode: str = "sample-values", n_pseudo: int | None = None,
                       rng: np.random.Generator | None = None, sample=None) -> ThresholdEstimate:
    """Estimate the HDR level as a low quantile of the density at sample points.

    ``mode="sample-values"`` uses the observations themselves (or `sample`);
    ``mode="pseudo-sample"`` draws ``n_pseudo`` fresh points from `est`
    (default ``max(10 n, 10**4)``).
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    if sample is None:
        sample = getattr(est, "sample", None)
        if not isinstance(sample, np.ndarray):
            sample = None
    if mode == "sample-values":
        if sample is None:
            raise ValueError("sample-values mode needs sample points")
        if len(sample) < 2:
            raise ValueError("threshold estimation needs at least two points")
        pts = sample
    elif mode == "pseudo-sample":
        if rng is None:
            raise ValueError("pseudo-sample mode needs a random generator")
        n = len(sample) if sample is not None else 1000
        m = int(n_pseudo) if n_pseudo else max(10 * n, 10_000)
        pts = draw(est, m, rng)
    else:
        raise ValueError(f"unknown threshold mode {mode!r}")
    value, j = density_quantile(_pdf(est, pts), tau)
    return ThresholdEstimate(float(tau), value, mode, len(pts), j)


def true_threshold(density, tau: float, grid: EvalGrid, values=None) -> float:
    """HDR level of a known density by sorting grid values and accumulating mass."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    v = _pdf(density, grid.points) if values is None else np.asarray(values, dtype=float)
    # group tied values (whole grid rows for axis-aligned densities), then
    # spread each level's mass between the midpoints to its neighbours
    levels, inv = np.unique(v, return_inverse=True)
    levels, mass = levels[::-1], np.bincount(inv, weights=grid.weights * v)[::-1]
    cum = np.cumsum(mass)
    target = (1.0 - tau) * cum[-1]
    k = min(int(np.searchsorted(cum, target)), len(levels) - 1)
    hi = levels[k] if k == 0 else 0.5 * (levels[k - 1] + levels[k])
    lo = levels[k] if k == len(levels) - 1 else 0.5 * (levels[k] + levels[k + 1])
    frac = (target - (cum[k] - mass[k])) / mass[k] if mass[k] > 0 else 1.0
    return float(hi - (hi - lo) * min(max(frac, 0.0), 1.0))


# --- regions --------------------------------------------------------------

def _circle_runs(mask: np.ndarray):
    prev, nxt = np.roll(mask, 1), np.roll(mask, -1)
    starts = np.flatnonzero(mask & ~prev)
    ends = np.flatnonzero(mask & ~nxt)
    if len(ends) and ends[0] < starts[0]:
        ends = np.roll(ends, -1)
    return starts, ends


def _bisect(g, lo, hi, inside_hi: bool, tol=1e-11):
    """Vectorized bisection for the sign change of `g` on ``[lo, hi]``."""
    lo, hi = lo.copy(), hi.copy()
    while np.max(hi - lo, initial=0.0) > tol:
        mid = 0.5 * (lo + hi)
        ins = g(mid)
        if inside_hi:
            hi, lo = np.where(ins, mid, hi), np.where(ins, lo, mid)
        else:
            lo, hi = np.where(ins, mid, lo), np.where(ins, hi, mid)
    return 0.5 * (lo + hi)


def _circle_arcs(grid: EvalGrid, values, level, density=None) -> np.ndarray:
    mask = values >= level
    if mask.all():
        return np.array([[0.0, TWO_PI]])
    if not mask.any():
        return np.empty((0, 2))
    n = grid.size
    d = TWO_PI / n
    th = grid.angles
    starts, ends = _circle_runs(mask)
    if density is not None:
        g = lambda a: _pdf(density, angle_to_unit(a)) >= level  # noqa: E731
        a0 = _bisect(g, th[starts] - d, th[starts], inside_hi=True)
        a1 = _bisect(g, th[ends], th[ends] + d, inside_hi=False)
    else:
        vs, vp = values[starts], values[(starts - 1) % n]
        a0 = th[starts] - d * (vs - level) / (vs - vp)
        ve, vn = values[ends], values[(ends + 1) % n]
        a1 = th[ends] + d * (ve - level) / (ve - vn)
    start = np.mod(a0, TWO_PI)
    length = np.mod(a1 - a0, TWO_PI)
    arcs = np.column_stack([start, start + length])
    return arcs[np.argsort(arcs[:, 0])]


def region_from_values(grid: EvalGrid, values, level: float, density=None) -> Region:
    values = np.asarray(values, dtype=float)
    vmax = float(values.max())
    if vmax - float(values.min()) <= FLAT_RTOL * abs(vmax):
        # numerically constant density: its level sets are all or nothing
        mask = np.full(values.shape, level <= vmax * (1.0 + FLAT_RTOL))
        arcs = (np.array([[0.0, TWO_PI]]) if mask.all() else np.empty((0, 2))) if grid.q == 1 else None
        return Region(grid.q, float(level), grid, values, mask, arcs, density)
    mask = values >= level
    arcs = _circle_arcs(grid, values, level, density) if grid.q == 1 else None
    return Region(grid.q, float(level), grid, values, mask, arcs, density)


def level_set_fixed(density, t: float, grid: EvalGrid, values=None) -> Region:
    """Region where `density` is at least `t`, on `grid`.

    Circle arc endpoints are refined by bisection on the density itself.
    """
    if not t > 0:
        raise ValueError("level must be positive")
    if density is not None and getattr(density, "q", grid.q) != grid.q:
        raise ValueError("density and grid live on different spheres")
    if values is None:
        values = _pdf(density, grid.points)
    return region_from_values(grid, values, t, density)


def hdr_region(est, tau: float, grid: EvalGrid, mode: str = "sample-values", n_pseudo=None, rng=None,
               values=None) -> Region:
    """Plug-in HDR: level set of `est` at its estimated density quantile."""
    thr = estimate_threshold(est, tau, mode=mode, n_pseudo=n_pseudo, rng=rng)
    reg = level_set_fixed(est, thr.value, grid, values=values)
    object.__setattr__(reg, "threshold", thr)
    return reg


def true_hdr_region(density, tau: float, grid: EvalGrid, threshold_grid: EvalGrid | None = None) -> Region:
    """HDR of a known density; the level comes from `threshold_grid` (default `grid`)."""
    level = true_threshold(density, tau, threshold_grid or grid)
    reg = level_set_fixed(density, level, grid)
    object.__setattr__(reg, "threshold", ThresholdEstimate(float(tau), level, "quadrature", grid.size, 0))
    return reg


# --- boundaries -----------------------------------------------------------

def sphere_crossings(grid: EvalGrid, values, level: float) -> np.ndarray:
    """Level crossings on grid edges, linearly interpolated and put back on the sphere."""
    nlat, nlon = grid.shape
    V = np.asarray(values).reshape(nlat, nlon)
    P = grid.points.reshape(nlat, nlon, 3)
    inside = V >= level
    pieces = []
    # along parallels (pole rows are a single point)
    a, b = V[1:-1], np.roll(V[1:-1], -1, axis=1)
    ia, ib = inside[1:-1], np.roll(inside[1:-1], -1, axis=1)
    r, c = np.nonzero(ia != ib)
    if len(r):
        s = (level - a[r, c]) / (b[r, c] - a[r, c])
        pa, pb = P[1:-1][r, c], P[1:-1][r, (c + 1) % nlon]
        pieces.append(pa + s[:, None] * (pb - pa))
    # along meridians
    a, b = V[:-1], V[1:]
    r, c = np.nonzero(inside[:-1] != inside[1:])
    if len(r):
        s = (level - a[r, c]) / (b[r, c] - a[r, c])
        pa, pb = P[:-1][r, c], P[1:][r, c]
        pieces.append(pa + s[:, None] * (pb - pa))
    if not pieces:
        return np.empty((0, 3))
    pts = np.concatenate(pieces)
    return pts / np.linalg.norm(pts, axis=1)[:, None]


def extract_boundary(region: Region) -> BoundarySet:
    if not region.is_proper:
        raise EmptyBoundary("region is empty or covers the whole sphere")
    if region.q == 1:
        ends = np.concatenate([region.arcs[:, 0], region.arcs[:, 1]])
        return BoundarySet(angle_to_unit(ends), 1)
    if "boundary" not in region._cache:
        region._cache["boundary"] = sphere_crossings(region.grid, region.values, region.level)
    pts = region._cache["boundary"]
    if len(pts) == 0:
        raise EmptyBoundary("no level crossings on the grid")
    return BoundarySet(pts, 2)


def _stitch(lines, tol=1e-9):
    lines = [np.asarray(l) for l in lines]
    merged = True
    while merged:
        merged = False
        for i in range(len(lines)):
            for j in range(len(lines)):
                if i == j:
                    continue
                if np.linalg.norm(lines[i][-1] - lines[j][0]) < tol:
                    lines[i] = np.concatenate([lines[i], lines[j][1:]])
                    del lines[j]
                    merged = True
                    break
            if merged:
                break
    return lines


def boundary_polylines(region: Region) -> list[tuple[np.ndarray, bool]]:
    """Contour lines of a spherical region as ``(xyz vertices, closed)`` pairs.

    Marching squares runs on the longitude/latitude index space with one
    wrapped column so contours crossing the antimeridian stay connected.
    """
    if region.q != 2:
        raise ValueError("polylines are defined for spherical regions")
    from skimage.measure import find_contours

    nlat, nlon = region.grid.shape
    V = region.values.reshape(nlat, nlon)
    padded = np.concatenate([V, V[:, :1]], axis=1)
    out = []
    raw = []
    for c in find_contours(padded, region.level):
        colat = c[:, 0] * (np.pi / (nlat - 1))
        lon = np.deg2rad(-180.0 + c[:, 1] * (360.0 / nlon))
        xyz = np.column_stack([np.sin(colat) * np.cos(lon), np.sin(colat) * np.sin(lon), np.cos(colat)])
        raw.append(xyz)
    for line in _stitch(raw):
        closed = len(line) > 2 and np.linalg.norm(line[0] - line[-1]) < 1e-9
        out.append((line, bool(closed)))
    return out


# --- clusters and probability content ------------------------------------

def count_components(region: Region) -> int:
    if region.is_empty:
        return 0
    if region.q == 1:
        return len(region.arcs)
    from scipy import ndimage

    nlat, nlon = region.grid.shape
    M = region.mask.reshape(nlat, nlon)
    labels, n = ndimage.label(M)
    parent = np.arange(n + 1)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    seam = M[:, 0] & M[:, -1]
    for a, b in zip(labels[seam, 0], labels[seam, -1]):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return len({find(i) for i in range(1, n + 1)})


def region_probability(region: Region, density=None, method: str = "grid", n: int = 100_000,
                       rng: np.random.Generator | None = None) -> float:
    """Probability that `density` assigns to the region (defaults to the region's own density)."""
    density = region.density if density is None else density
    if method == "grid":
        if density is region.density:
            v = region.values
        else:
            v = _pdf(density, region.grid.points)
        p = integrate(region.grid, v * region.mask)
    elif method == "monte-carlo":
        if rng is None:
            raise ValueError("monte-carlo mode needs a random generator")
        p = float(np.mean(region.contains(draw(density, n, rng))))
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(min(max(p, 0.0), 1.0))


def arcs_total_length(arcs: np.ndarray) -> float:
    return float(np.sum(arcs[:, 1] - arcs[:, 0])) if len(arcs) else 0.0


def angle_in_arcs(theta, arcs: np.ndarray) -> np.ndarray:
    theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    out = np.zeros(theta.shape, dtype=bool)
    for a, b in arcs:
        out |= np.mod(theta - a, TWO_PI) < (b - a)
        if b - a >= TWO_PI:
            out[:] = True
    return out


def unit_in_arcs(x, arcs) -> np.ndarray:
    return angle_in_arcs(unit_to_angle(x), arcs)
