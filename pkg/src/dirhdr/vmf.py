"""von Mises-Fisher densities, finite mixtures and exact samplers."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .geometry import SURFACE_MEASURE, angle_to_unit, check_q, lonlat_to_unit, unit_to_angle, unit_vectors
from .special import log_bessel_i


def log_norm_const(q: int, kappa):
    """``log C_q(kappa)`` with ``C_q = kappa^((q-1)/2) / ((2 pi)^((q+1)/2) I_{(q-1)/2}(kappa))``.

    ``kappa == 0`` gives the uniform density on the circle/sphere.
    """
    check_q(q)
    k = np.asarray(kappa, dtype=float)
    if np.any(k < 0):
        raise ValueError("concentration must be non-negative")
    p = (q - 1) / 2.0
    safe = np.where(k > 0, k, 1.0)
    val = p * np.log(safe) - (q + 1) / 2.0 * np.log(2 * np.pi) - log_bessel_i(p, safe)
    out = np.where(k > 0, val, -np.log(SURFACE_MEASURE[q]))
    return out[()] if out.ndim == 0 else out


def log_norm_const_scaled(q: int, kappa):
    """``log C_q(kappa) + kappa``; finite for any kappa, used by the kernel sums."""
    return log_norm_const(q, kappa) + np.asarray(kappa, dtype=float)


def mean_resultant_to_kappa(rbar: float, q: int) -> float:
    """Solve ``A_q(kappa) = rbar`` for the maximum likelihood concentration."""
    from scipy.optimize import brentq

    from .special import bessel_ratio

    p = (q - 1) / 2.0
    lo, hi = 1e-8, 1e6
    f = lambda k: bessel_ratio(p, k) - rbar  # noqa: E731
    if f(lo) >= 0:
        return lo
    if f(hi) <= 0:
        return hi
    return brentq(f, lo, hi, xtol=1e-14, rtol=1e-13)


@dataclass(frozen=True, eq=False)
class VonMisesFisher:
    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        object.__setattr__(self, "mu", unit_vectors(self.mu)[0])
        if not np.isfinite(self.kappa) or self.kappa < 0:
            raise ValueError("kappa must be finite and >= 0")
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def q(self) -> int:
        return len(self.mu) - 1

    def log_pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.q + 1:
            raise ValueError("point dimension does not match the model")
        return log_norm_const(self.q, self.kappa) + self.kappa * (x @ self.mu)

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.log_pdf(x))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return sample_vmf(self, n, rng)


@dataclass(frozen=True, eq=False)
class MixtureModel:
    components: tuple
    weights: np.ndarray
    name: str = ""

    def __post_init__(self):
        comps = tuple(self.components)
        w = np.asarray(self.weights, dtype=float).ravel()
        if not comps:
            raise ValueError("mixture needs at least one component")
        if len(w) != len(comps):
            raise ValueError("one weight per component is required")
        if np.any(w <= 0):
            raise ValueError("mixture weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {w.sum()!r}, not 1")
        if len({c.q for c in comps}) != 1:
            raise ValueError("all components must live on the same sphere")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)

    @property
    def q(self) -> int:
        return self.components[0].q

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for w, c in zip(self.weights, self.components):
            out = out + w * c.pdf(x)
        return out

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return sample_mixture(self, n, rng)


def vmf_log_density(model: VonMisesFisher, x):
    return model.log_pdf(x)


def mixture_density(model: MixtureModel, x):
    return model.pdf(x)


def _best_fisher_offsets(kappa: float, n: int, rng) -> np.ndarray:
    """Angular offsets from the mean for a von Mises law (Best & Fisher rejection)."""
    if kappa < 1e-8:
        return rng.uniform(-np.pi, np.pi, size=n)
    s = np.sqrt(1.0 + 4.0 * kappa * kappa)
    tau = 1.0 + s
    # (tau - sqrt(2 tau)) / (2 kappa) without cancellation at small kappa
    rho = 2.0 * kappa * tau / ((s + 1.0) * (tau + np.sqrt(2.0 * tau)))
    r = (1.0 + rho * rho) / (2.0 * rho)
    out = np.empty(n)
    filled = 0
    while filled < n:
        m = n - filled
        u1, u2, u3 = rng.random((3, m))
        z = np.cos(np.pi * u1)
        f = (1.0 + r * z) / (r + z)
        c = kappa * (r - f)
        with np.errstate(divide="ignore"):
            ok = (c * (2.0 - c) - u2 > 0) | (np.log(c / u2) + 1.0 - c >= 0)
        acc = np.sign(u3[ok] - 0.5) * np.arccos(np.clip(f[ok], -1.0, 1.0))
        out[filled:filled + len(acc)] = acc
        filled += len(acc)
    return out


def _sphere_cosines(kappa: float, n: int, rng) -> np.ndarray:
    """Exact draws of ``w = x . mu`` for the vMF on S^2 (inverse distribution function)."""
    u = 1.0 - rng.random(n)  # (0, 1]
    if kappa < 1e-8:
        return 2.0 * u - 1.0
    w = 1.0 + np.log(u * -np.expm1(-2.0 * kappa) + np.exp(-2.0 * kappa)) / kappa
    return np.clip(w, -1.0, 1.0)


def sample_vmf_rows(mus: np.ndarray, kappa: float, rng: np.random.Generator) -> np.ndarray:
    """One vMF(mu_i, kappa) draw per row of `mus` (all rows share kappa)."""
    mus = np.atleast_2d(mus)
    n, d = mus.shape
    if n == 0:
        return np.empty((0, d))
    if d == 2:
        theta = unit_to_angle(mus) + _best_fisher_offsets(kappa, n, rng)
        return angle_to_unit(theta)
    w = _sphere_cosines(kappa, n, rng)
    v = rng.standard_normal((n, 3))
    v -= (v * mus).sum(axis=1)[:, None] * mus
    v /= np.linalg.norm(v, axis=1)[:, None]
    x = w[:, None] * mus + np.sqrt(np.maximum(0.0, 1.0 - w * w))[:, None] * v
    return x / np.linalg.norm(x, axis=1)[:, None]


def sample_vmf(model: VonMisesFisher, n: int, rng: np.random.Generator) -> np.ndarray:
    n = int(n)
    if n < 0:
        raise ValueError("sample size must be >= 0")
    return sample_vmf_rows(np.repeat(model.mu[None, :], n, axis=0), model.kappa, rng)


def sample_mixture(model: MixtureModel, n: int, rng: np.random.Generator, return_labels: bool = False):
    n = int(n)
    if n < 0:
        raise ValueError("sample size must be >= 0")
    labels = rng.choice(len(model.components), size=n, p=model.weights)
    out = np.empty((n, model.q + 1))
    for j, comp in enumerate(model.components):
        idx = np.flatnonzero(labels == j)
        out[idx] = sample_vmf(comp, len(idx), rng)
    return (out, labels) if return_labels else out


_R2 = 1.0 / np.sqrt(2.0)
_N, _S = (0.0, 0.0, 1.0), (0.0, 0.0, -1.0)
_TABLE = {
    "S1": ([_N], [10], [1.0]),
    "S2": ([_N, _S], [1, 1], [1 / 2, 1 / 2]),
    "S3": ([_N, _S], [10, 1], [1 / 2, 1 / 2]),
    "S4": ([_N, (0.0, _R2, _R2)], [10, 10], [1 / 2, 1 / 2]),
    "S5": ([_N, (0.0, _R2, _R2)], [10, 10], [2 / 5, 3 / 5]),
    "S6": ([_N, (0.0, _R2, _R2)], [10, 5], [1 / 5, 4 / 5]),
    "S7": ([_N, (0.0, 1.0, 0.0), (1.0, 0.0, 0.0)], [5, 5, 5], [1 / 3, 1 / 3, 1 / 3]),
    "S8": ([_N, (0.0, 1.0, 0.0), (1.0, 0.0, 0.0)], [5, 5, 5], [2 / 3, 1 / 6, 1 / 6]),
    "S9": ([_N, (0.0, _R2, _R2), (0.0, 1.0, 0.0)], [10, 10, 10], [1 / 3, 1 / 3, 1 / 3]),
}
BENCHMARK_NAMES = tuple(_TABLE)


def _normalized(w):
    w = np.asarray(w, dtype=float)
    return w / w.sum()


def load_benchmark(name: str) -> MixtureModel:
    """Spherical benchmark mixtures S1..S9."""
    key = name.upper()
    if key not in _TABLE:
        raise KeyError(f"unknown benchmark model {name!r}; expected one of {', '.join(_TABLE)}")
    mus, kappas, weights = _TABLE[key]
    comps = tuple(VonMisesFisher(np.array(m), k) for m, k in zip(mus, kappas))
    return MixtureModel(comps, _normalized(weights), name=key)


def _parse_mean(value) -> np.ndarray:
    if isinstance(value, dict):
        if "angle" in value:
            return angle_to_unit(float(value["angle"]))
        if "angle_deg" in value:
            return angle_to_unit(np.deg2rad(float(value["angle_deg"])))
        if "lonlat" in value:
            lon, lat = value["lonlat"]
            return lonlat_to_unit(float(lon), float(lat))
        if "xyz" in value:
            return unit_vectors(value["xyz"])[0]
        raise ValueError(f"mean needs one of angle, angle_deg, lonlat, xyz: {value!r}")
    if isinstance(value, (int, float)):
        return angle_to_unit(float(value))
    return unit_vectors(value)[0]


def mixture_from_dict(cfg: dict) -> MixtureModel:
    """Build a mixture from a parsed config mapping.

    Expected layout::

        name: C-bimodal          # optional
        components:
          - {mean: {angle: 0.0}, kappa: 4, weight: 0.5}
          - {mean: {angle_deg: 180}, kappa: 4, weight: 0.5}

    A bare number as mean is read as an angle in radians; a list as raw
    coordinates.  Weights must sum to one within 1e-9.
    """
    comps_cfg = cfg.get("components")
    if not comps_cfg:
        raise ValueError("mixture config needs a non-empty 'components' list")
    comps, weights = [], []
    for c in comps_cfg:
        comps.append(VonMisesFisher(_parse_mean(c["mean"]), float(c["kappa"])))
        weights.append(float(c.get("weight", 1.0 if len(comps_cfg) == 1 else np.nan)))
    w = np.asarray(weights)
    if not np.all(np.isfinite(w)):
        raise ValueError("every component of a multi-component mixture needs a weight")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"mixture weights sum to {w.sum()!r}, not 1")
    return MixtureModel(tuple(comps), _normalized(w), name=str(cfg.get("name", "")))


def load_mixture_config(path) -> MixtureModel:
    path = Path(path)
    cfg = yaml.safe_load(path.read_text())
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: mixture config must be a mapping")
    model = mixture_from_dict(cfg)
    if not model.name:
        object.__setattr__(model, "name", path.stem)
    return model


def resolve_model(ref: str) -> MixtureModel:
    """Benchmark name (S1..S9) or path to a mixture config file."""
    if ref.upper() in _TABLE:
        return load_benchmark(ref)
    return load_mixture_config(ref)
