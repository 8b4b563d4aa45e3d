"""Geometry of the circle and the sphere.

Points are stored as float arrays of shape ``(m, q + 1)`` where ``q`` is the
manifold dimension (1 for the circle, 2 for the sphere).  A single point may
also be passed as a 1-d array.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi
SURFACE_MEASURE = {1: TWO_PI, 2: 4.0 * np.pi}
MIN_RESOLUTION = 4


def check_q(q: int) -> int:
    if q not in (1, 2):
        raise ValueError(f"sphere dimension must be 1 or 2, got {q!r}")
    return int(q)


def unit_vectors(coords, q: int | None = None) -> np.ndarray:
    """Validate and normalize rows of `coords` onto the unit sphere.

    Returns a 2-d array even for a single point.
    """
    x = np.atleast_2d(np.asarray(coords, dtype=float))
    if x.ndim != 2:
        raise ValueError("coordinates must be a vector or a 2-d array")
    if q is None:
        q = x.shape[1] - 1
    check_q(q)
    if x.shape[1] != q + 1:
        raise ValueError(f"expected {q + 1} coordinates per point, got {x.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("coordinates must be finite")
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0):
        raise ValueError("zero vector cannot be normalized")
    return x / norms[:, None]


def angle_to_unit(theta):
    """Map angles in radians to points on the circle."""
    t = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("angle must be finite")
    t = np.mod(t, TWO_PI)
    return np.stack([np.cos(t), np.sin(t)], axis=-1)


def unit_to_angle(x):
    """Angle in ``[0, 2*pi)`` of circle points."""
    x = np.asarray(x, dtype=float)
    theta = np.mod(np.arctan2(x[..., 1], x[..., 0]), TWO_PI)
    # mod can return exactly 2*pi for tiny negative inputs
    return np.where(theta >= TWO_PI, 0.0, theta)


def lonlat_to_unit(lon, lat):
    """Geographic longitude/latitude in degrees to points on the sphere."""
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    if not (np.all(np.isfinite(lon)) and np.all(np.isfinite(lat))):
        raise ValueError("longitude and latitude must be finite")
    if np.any(np.abs(lat) > 90.0):
        raise ValueError("latitude must lie in [-90, 90]")
    lo, la = np.deg2rad(lon), np.deg2rad(lat)
    return np.stack([np.cos(la) * np.cos(lo), np.cos(la) * np.sin(lo), np.sin(la)], axis=-1)


def unit_to_lonlat(x):
    """Inverse of :func:`lonlat_to_unit`; longitude normalized to [-180, 180)."""
    x = np.asarray(x, dtype=float)
    lat = np.rad2deg(np.arcsin(np.clip(x[..., 2], -1.0, 1.0)))
    lon = np.rad2deg(np.arctan2(x[..., 1], x[..., 0]))
    lon = np.mod(lon + 180.0, 360.0) - 180.0
    return lon, lat


def chord_distance(x, y):
    """Euclidean (chord) distance between unit vectors, broadcasting over rows.

    Uses ``||x - y||`` which equals ``sqrt(2 (1 - x.y))`` on the sphere but
    keeps full precision for nearby points.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise ValueError("points live on spheres of different dimension")
    d = np.linalg.norm(x - y, axis=-1)
    return np.minimum(d, 2.0)


@dataclass(frozen=True, eq=False)
class EvalGrid:
    """Evaluation grid with quadrature weights.

    For ``q == 1`` the points are ``resolution`` equally spaced angles.  For
    ``q == 2`` the grid is an equiangular longitude/latitude lattice stored
    row-major with shape ``(nlat, nlon)``; row 0 is the north pole and the last
    row the south pole (pole rows repeat the pole once per longitude).
    """

    q: int
    points: np.ndarray
    weights: np.ndarray
    shape: tuple
    lon: np.ndarray | None = None
    lat: np.ndarray | None = None
    angles: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def resolution(self) -> int:
        return self.shape[-1]

    def neighbors(self, i: int) -> np.ndarray:
        """Indices adjacent to grid point `i` (periodic in angle/longitude)."""
        if self.q == 1:
            n = self.shape[0]
            return np.array([(i - 1) % n, (i + 1) % n])
        nlat, nlon = self.shape
        r, c = divmod(int(i), nlon)
        out = [r * nlon + (c - 1) % nlon, r * nlon + (c + 1) % nlon]
        if r > 0:
            out.append((r - 1) * nlon + c)
        if r < nlat - 1:
            out.append((r + 1) * nlon + c)
        return np.array(out)

    def reshape(self, values) -> np.ndarray:
        return np.asarray(values).reshape(self.shape)


def clenshaw_curtis_weights(m: int) -> np.ndarray:
    """Clenshaw-Curtis weights for nodes ``cos(k pi / m)``, k = 0..m, on [-1, 1]."""
    k = np.arange(m + 1)
    theta = k * np.pi / m
    w = np.ones(m + 1)
    j = np.arange(1, m // 2 + 1)
    b = np.where(2 * j == m, 1.0, 2.0)
    w -= (b[None, :] / (4.0 * j[None, :] ** 2 - 1.0) * np.cos(2.0 * j[None, :] * theta[:, None])).sum(axis=1)
    c = np.full(m + 1, 2.0)
    c[0] = c[-1] = 1.0
    return c * w / m


def make_grid(q: int, resolution: int | None = None) -> EvalGrid:
    """Build the default evaluation grid for the circle or the sphere.

    Parameters
    ----------
    q : int
        1 for the circle, 2 for the sphere.
    resolution : int
        Number of angles (circle) or longitudes (sphere, must be even).  The
        sphere grid has ``resolution // 2 + 1`` latitude rows including both
        poles.  Defaults to 2048 for the circle and 512 for the sphere.
    """
    check_q(q)
    if resolution is None:
        resolution = 2048 if q == 1 else 512
    resolution = int(resolution)
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be at least {MIN_RESOLUTION}")
    if q == 1:
        angles = np.arange(resolution) * (TWO_PI / resolution)
        weights = np.full(resolution, TWO_PI / resolution)
        return EvalGrid(1, angle_to_unit(angles), weights, (resolution,), angles=angles)

    if resolution % 2:
        raise ValueError("sphere resolution must be even")
    m = resolution // 2
    colat = np.arange(m + 1) * (np.pi / m)
    lat = 90.0 - np.rad2deg(colat)
    lat[0], lat[-1] = 90.0, -90.0
    lon = -180.0 + np.arange(resolution) * (360.0 / resolution)
    row_w = clenshaw_curtis_weights(m) * (TWO_PI / resolution)
    st, ct = np.sin(colat), np.cos(colat)
    lo = np.deg2rad(lon)
    pts = np.empty((m + 1, resolution, 3))
    pts[..., 0] = st[:, None] * np.cos(lo)[None, :]
    pts[..., 1] = st[:, None] * np.sin(lo)[None, :]
    pts[..., 2] = ct[:, None]
    pts[0] = (0.0, 0.0, 1.0)
    pts[-1] = (0.0, 0.0, -1.0)
    weights = np.repeat(row_w, resolution)
    return EvalGrid(2, pts.reshape(-1, 3), weights, (m + 1, resolution), lon=lon, lat=lat)


def integrate(grid: EvalGrid, values) -> float:
    """Quadrature of grid values over the whole circle/sphere."""
    return float(np.dot(grid.weights, np.asarray(values, dtype=float)))


def random_rotation(q: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random proper rotation matrix of R^{q+1}."""
    d = q + 1
    a = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(a)
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q
