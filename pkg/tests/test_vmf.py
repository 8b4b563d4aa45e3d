import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from dirhdr.geometry import angle_to_unit, integrate, lonlat_to_unit, make_grid
from dirhdr.special import bessel_i
from dirhdr.vmf import (
    BENCHMARK_NAMES,
    MixtureModel,
    VonMisesFisher,
    load_benchmark,
    load_mixture_config,
    log_norm_const,
    mean_resultant_to_kappa,
    mixture_density,
    sample_mixture,
    sample_vmf,
    vmf_log_density,
)

NORTH = np.array([0.0, 0.0, 1.0])


def test_uniform_limits():
    circ = VonMisesFisher(angle_to_unit(1.0), 0.0)
    assert_allclose(vmf_log_density(circ, angle_to_unit(2.5)), -math.log(2 * math.pi), rtol=1e-15)
    sph = VonMisesFisher(NORTH, 1e-8)
    assert_allclose(vmf_log_density(sph, lonlat_to_unit(10, -20)), -math.log(4 * math.pi), atol=1e-6)


def test_circle_mode_value():
    m = VonMisesFisher(angle_to_unit(0.3), 1.0)
    ref = math.e / (2 * math.pi * 1.2660658777520082)
    assert_allclose(m.pdf(angle_to_unit(0.3)), ref, rtol=1e-14)
    assert_allclose(m.log_pdf(angle_to_unit(0.3)), 1 - math.log(2 * math.pi) - 0.2359143585071786, rtol=1e-13)


@pytest.mark.parametrize("kappa", [0.1, 1.0, 10.0, 100.0])
def test_closed_form_constants(kappa):
    assert_allclose(math.exp(log_norm_const(1, kappa)), 1 / (2 * math.pi * bessel_i(0, kappa)), rtol=1e-10)
    assert_allclose(math.exp(log_norm_const(2, kappa)), kappa / (4 * math.pi * math.sinh(kappa)), rtol=1e-10)


def test_large_kappa_finite():
    m = VonMisesFisher(NORTH, 1e6)
    assert np.isfinite(m.log_pdf(NORTH))
    assert_allclose(m.log_pdf(NORTH), math.log(1e6 / (2 * math.pi)), rtol=1e-10)


@pytest.mark.parametrize("name", BENCHMARK_NAMES)
def test_benchmark_normalized(name):
    g = make_grid(2)
    assert abs(integrate(g, load_benchmark(name).pdf(g.points)) - 1) < 1e-6


def test_circle_mixture_normalized(rng):
    g = make_grid(1)
    for _ in range(5):
        k = rng.integers(1, 5)
        comps = tuple(VonMisesFisher(angle_to_unit(a), kap) for a, kap in
                      zip(rng.uniform(0, 2 * np.pi, k), rng.uniform(0, 100, k)))
        m = MixtureModel(comps, rng.dirichlet(np.ones(k)))
        assert abs(integrate(g, m.pdf(g.points)) - 1) < 1e-6


def test_single_component_mode_is_max():
    m = load_benchmark("S1")
    g = make_grid(2, 128)
    assert m.pdf(NORTH) >= m.pdf(g.points).max()


def test_mixture_density_examples():
    s2 = load_benchmark("S2")
    a, b = s2.components
    assert_allclose(mixture_density(s2, NORTH), 0.5 * a.pdf(NORTH) + 0.5 * b.pdf(NORTH), rtol=1e-15)
    one = MixtureModel((a,), np.array([1.0]))
    x = lonlat_to_unit(30, 40)
    assert_allclose(one.pdf(x), a.pdf(x), rtol=1e-15)
    pair = MixtureModel((VonMisesFisher(NORTH, 3.0), VonMisesFisher(-NORTH, 3.0)), np.array([0.5, 0.5]))
    e = lonlat_to_unit(np.array([10.0, 77.0]), np.array([0.0, 0.0]))
    assert_allclose(pair.pdf(e), pair.pdf(-e), rtol=1e-14)


def test_catalog_parameters():
    s1 = load_benchmark("S1")
    assert len(s1.components) == 1 and s1.components[0].kappa == 10
    assert_allclose(s1.components[0].mu, NORTH)
    s3 = load_benchmark("S3")
    assert_allclose([c.kappa for c in s3.components], [10, 1])
    assert_allclose(s3.components[1].mu, -NORTH)
    s4 = load_benchmark("S4")
    assert_allclose(s4.components[1].mu, [0, 1 / math.sqrt(2), 1 / math.sqrt(2)])
    assert_allclose(s4.weights, [0.5, 0.5])
    assert_allclose(load_benchmark("S8").weights, [2 / 3, 1 / 6, 1 / 6])
    with pytest.raises(KeyError):
        load_benchmark("S10")


def test_weights_validated():
    c = VonMisesFisher(NORTH, 1.0)
    with pytest.raises(ValueError):
        MixtureModel((c, c), np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        VonMisesFisher(NORTH, -1.0)


def test_uniform_sampler(rng):
    x = sample_vmf(VonMisesFisher(NORTH, 0.0), 100_000, rng)
    assert np.linalg.norm(x.mean(axis=0)) < 0.02


def test_sampler_mean_resultant(rng):
    x = sample_vmf(VonMisesFisher(NORTH, 10.0), 100_000, rng)
    assert abs(np.linalg.norm(x.mean(axis=0)) - (1 / math.tanh(10) - 0.1)) < 0.01
    c = sample_vmf(VonMisesFisher(angle_to_unit(2.0), 10.0), 100_000, rng)
    A1 = bessel_i(1, 10.0) / bessel_i(0, 10.0)
    assert abs(np.linalg.norm(c.mean(axis=0)) - A1) < 0.01


def test_sampler_deterministic():
    m = load_benchmark("S5")
    a = m.sample(500, np.random.default_rng(7))
    b = m.sample(500, np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_sample_sizes(rng):
    assert sample_mixture(load_benchmark("S1"), 0, rng).shape == (0, 3)
    x = sample_vmf(VonMisesFisher(NORTH, 5.0), 50, rng)
    assert_allclose(np.linalg.norm(x, axis=1), 1, atol=1e-12)


def test_mixture_component_counts(rng):
    m = load_benchmark("S7")
    n = 30_000
    x = sample_mixture(m, n, rng)
    mus = np.array([c.mu for c in m.components])
    counts = np.bincount(np.argmax(x @ mus.T, axis=1), minlength=3)
    # nearest-mean assignment is symmetric across the three equal components
    sd = math.sqrt(n * (1 / 3) * (2 / 3))
    assert np.all(np.abs(counts - n / 3) < 3 * sd)


# a fixed generic rotation keeps bin edges off the quadrature grid lines
_ROT = np.linalg.qr(np.random.default_rng(11).standard_normal((3, 3)))[0]


def _bin_index(x, nlat=6, nlon=8):
    x = x @ _ROT
    z = np.clip(x[:, 2], -1, 1)
    i = np.minimum(((z + 1) / 2 * nlat).astype(int), nlat - 1)
    j = np.minimum(((np.arctan2(x[:, 1], x[:, 0]) + np.pi) / (2 * np.pi) * nlon).astype(int), nlon - 1)
    return i * nlon + j


@pytest.mark.parametrize("name", BENCHMARK_NAMES)
def test_sampler_chi_square(name):
    m = load_benchmark(name)
    g = make_grid(2, 1024)
    probs = np.bincount(_bin_index(g.points), weights=g.weights * m.pdf(g.points), minlength=48)
    x = m.sample(100_000, np.random.default_rng(BENCHMARK_NAMES.index(name)))
    obs = np.bincount(_bin_index(x), minlength=48)
    keep = probs * len(x) > 5
    exp = probs[keep] / probs[keep].sum() * obs[keep].sum()
    _, p = stats.chisquare(obs[keep], exp)
    assert p > 1e-4


def test_circle_sampler_chi_square():
    m = MixtureModel((VonMisesFisher(angle_to_unit(0.5), 4.0), VonMisesFisher(angle_to_unit(3.5), 0.7)),
                     np.array([0.4, 0.6]))
    g = make_grid(1, 4096)
    bins = (g.angles / (2 * np.pi) * 24).astype(int)
    probs = np.bincount(bins, weights=g.weights * m.pdf(g.points), minlength=24)
    x = m.sample(100_000, np.random.default_rng(3))
    ang = np.arctan2(x[:, 1], x[:, 0]) % (2 * np.pi)
    obs = np.bincount(np.minimum((ang / (2 * np.pi) * 24).astype(int), 23), minlength=24)
    _, p = stats.chisquare(obs, probs / probs.sum() * len(x))
    assert p > 1e-4


def test_mixture_config(tmp_path):
    p = tmp_path / "bimodal.yaml"
    p.write_text("components:\n  - {mean: {angle: 0.0}, kappa: 4, weight: 0.5}\n"
                 "  - {mean: {angle_deg: 180}, kappa: 4, weight: 0.5}\n")
    m = load_mixture_config(p)
    assert m.q == 1 and m.name == "bimodal"
    assert_allclose(m.components[1].mu, [-1, 0], atol=1e-15)
    bad = tmp_path / "bad.yaml"
    bad.write_text("components:\n  - {mean: 0.0, kappa: 4, weight: 0.5}\n  - {mean: 1.0, kappa: 4, weight: 0.4}\n")
    with pytest.raises(ValueError):
        load_mixture_config(bad)


def test_kappa_inversion():
    for q, A in ((1, lambda k: bessel_i(1, k) / bessel_i(0, k)), (2, lambda k: 1 / math.tanh(k) - 1 / k)):
        for kappa in (0.5, 5.0, 50.0):
            assert_allclose(mean_resultant_to_kappa(A(kappa), q), kappa, rtol=1e-6)


@pytest.mark.parametrize("kappa", [1e-8, 1e-6, 1e-3])
def test_circle_sampler_small_kappa(kappa):
    x = sample_vmf(VonMisesFisher(np.array([1.0, 0.0]), kappa), 20000, np.random.default_rng(2))
    assert np.all(np.isfinite(x))
    assert abs(x[:, 0].mean()) < 0.03
