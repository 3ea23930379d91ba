import math

import numpy as np
import pytest
from scipy import stats

from octoport.analytic import coherent_means, vacuum_budget
from octoport.circuit import CircuitParams, balanced_params, derive_coefficients
from octoport.detector import DetectorParams, c0, s0
from octoport.errors import ConfigError, DomainError, SimulationOverflow
from octoport.laser import LaserParams
from octoport.mc_sim import (
    CoherentSignal,
    SampleBatch,
    SimConfig,
    empirical_moments,
    poisson_intensities,
    simulate,
    simulate_counts,
)

DET = DetectorParams(kappa_resp=1e3, sigma_el=(0.0, 0.0))


def _budget(cfg):
    co = cfg.coefficients()
    return vacuum_budget(co, s0(cfg.detector), c0(cfg.detector, cfg.laser),
                         sigma_el=cfg.detector.sigma_el_for(co.channels))


def test_balanced_intensities_unit_example():
    J = poisson_intensities(balanced_params(), 2.0)
    np.testing.assert_allclose(J, [1.0, 1.0, 1.0, 1.0], rtol=1e-15)


def test_lossless_circuit_conserves_photon_flux(rng):
    p = CircuitParams(eta=(0.3, 0.6, 0.45, 0.7), psi1=0.4, psi2=2.0)
    f = rng.normal(size=50) + 1j * rng.normal(size=50)
    fs = rng.normal(size=50) + 1j * rng.normal(size=50)
    J = poisson_intensities(p, f, fs)
    total = J.sum(axis=-1)
    np.testing.assert_allclose(total[..., None] if total.ndim == 0 else total, abs(f) ** 2 + abs(fs) ** 2,
                               rtol=1e-12)


def test_interference_contrast():
    # detectors 1 and 3 share a beam splitter: their sum is phase independent
    p = balanced_params()
    phases = np.linspace(0, 2 * np.pi, 9)
    J = poisson_intensities(p, 3.0, np.exp(1j * phases))
    np.testing.assert_allclose(J[:, 0] + J[:, 2], J[0, 0] + J[0, 2], rtol=1e-12)
    assert np.ptp(J[:, 0]) > 0.5


def test_vacuum_intensities_ignore_phases_and_eta1():
    f = np.linspace(0.5, 2.0, 7) * np.exp(0.3j)
    base = poisson_intensities(CircuitParams(eta=(0.5, 0.4, 0.45, 0.6)), f)
    for p in (CircuitParams(eta=(0.5, 0.4, 0.45, 0.6), psi1=1.0, psi2=-2.0),
              CircuitParams(eta=(0.2, 0.4, 0.45, 0.6))):
        np.testing.assert_array_equal(poisson_intensities(p, f), base)


def test_simulated_batch_ignores_phases_and_eta1():
    las = LaserParams(lambda_abs2=1e4, w2=0.5, gamma1=1e3)
    kw = dict(laser=las, detector=DET, regime="finite_lo", m=100, seed=4)
    a = simulate(SimConfig(CircuitParams(eta=(0.5, 0.5, 0.45, 0.5)), **kw)).x
    b = simulate(SimConfig(CircuitParams(eta=(0.5, 0.5, 0.45, 0.5), psi1=0.7, psi2=0.1), **kw)).x
    c = simulate(SimConfig(CircuitParams(eta=(0.3, 0.5, 0.45, 0.5)), **kw)).x
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a, c)


def test_counts_constant_intensity_poisson(rng):
    grid = np.linspace(0, 1, 11)
    counts = np.array([simulate_counts(grid, np.full(11, 7.0), rng).size for _ in range(4000)])
    k = np.arange(16)
    obs = np.array([np.sum(counts == i) for i in k[:-1]] + [np.sum(counts >= 15)])
    exp = np.append(stats.poisson.pmf(k[:-1], 7.0), stats.poisson.sf(14, 7.0)) * counts.size
    assert stats.chisquare(obs, exp).pvalue > 1e-3


def test_counts_time_rescaling_uniform(rng):
    # compensator of J(t) = 10 + 40 t on [0, 1]: 10 t + 20 t**2
    grid = np.linspace(0, 1, 101)
    ev = np.concatenate([simulate_counts(grid, 10 + 40 * grid, rng) for _ in range(300)])
    u = (10 * ev + 20 * ev**2) / 30.0
    assert stats.kstest(u, "uniform").pvalue > 1e-3


def test_counts_zero_and_negative_intensity(rng):
    grid = np.linspace(0, 1, 5)
    assert simulate_counts(grid, np.zeros(5), rng).size == 0
    with pytest.raises(DomainError):
        simulate_counts(grid, [1, -1, 1, 1, 1], rng)
    with pytest.raises(SimulationOverflow):
        simulate_counts(grid, np.full(5, 1e9), rng)


def test_finite_lo_guard():
    las = LaserParams(lambda_abs2=1e14)
    with pytest.raises(SimulationOverflow):
        simulate(SimConfig(balanced_params(), las, DET, regime="finite_lo", m=2))


@pytest.mark.slow
def test_finite_lo_balanced_moments():
    las = LaserParams(lambda_abs2=1e4, w2=0.5, gamma1=1e3)
    cfg = SimConfig(balanced_params(0.9, 1.0), las, DET, regime="finite_lo", m=6000, seed=11)
    mo = empirical_moments(simulate(cfg))
    bud = _budget(cfg)
    assert np.all(np.abs(mo.mean) < 4 * mo.se_mean)
    assert np.all(np.abs(mo.cov - bud.C) < 4 * mo.se_cov)
    corr = mo.cov[0, 1] / math.sqrt(mo.cov[0, 0] * mo.cov[1, 1])
    assert abs(corr) < 4 / math.sqrt(mo.m)


@pytest.mark.slow
def test_finite_and_strong_lo_agree(imbalanced):
    las = LaserParams(lambda_abs2=1e4, w2=0.7, gamma1=2e3)
    kw = dict(circuit=imbalanced, laser=las, detector=DET, m=6000, seed=5)
    f = empirical_moments(simulate(SimConfig(regime="finite_lo", **kw)))
    s = empirical_moments(simulate(SimConfig(regime="strong_lo", **kw)))
    assert np.all(np.abs(f.mean - s.mean) < 4 * np.hypot(f.se_mean, s.se_mean))
    assert np.all(np.abs(f.cov - s.cov) < 4 * np.hypot(f.se_cov, s.se_cov))


def test_strong_lo_matches_budget(imbalanced):
    las = LaserParams(lambda_abs2=1e6, w2=0.5, gamma1=1e3)
    det = DetectorParams(kappa_resp=1e3, sigma_el=(20.0, 5.0))
    cfg = SimConfig(imbalanced, las, det, m=40000, seed=2)
    mo = empirical_moments(simulate(cfg))
    bud = _budget(cfg)
    assert np.all(np.abs(mo.mean - bud.means) < 4 * mo.se_mean)
    assert np.all(np.abs(mo.cov - bud.C) < 4 * mo.se_cov)


def test_strong_lo_coherent_mean(imbalanced):
    w0 = 3e3
    las = LaserParams(lambda_abs2=1e6, omega0=w0, w2=1.0, gamma0=0.0, theta=0.3)
    sig = CoherentSignal(amplitude=40.0 - 25.0j, omega=w0)
    cfg = SimConfig(imbalanced, las, DET, signal=sig, m=20000, seed=8)
    mo = empirical_moments(simulate(cfg))
    expect = coherent_means(cfg.coefficients(), sig, las, DET, DET.tau, strong_lo=True)
    assert np.all(np.abs(mo.mean - expect) < 4 * mo.se_mean)
    vac = coherent_means(cfg.coefficients(), None, las, DET, DET.tau, strong_lo=True)
    assert np.all(np.abs(expect - vac) > 20 * mo.se_mean)


def test_single_mode_one_channel(imbalanced):
    las = LaserParams(lambda_abs2=1e6, w2=0.5, gamma1=1e3)
    cfg = SimConfig(imbalanced, las, DET, mode="single", m=20000, seed=1)
    b = simulate(cfg)
    assert b.channels == 1
    mo = empirical_moments(b)
    bud = _budget(cfg)
    assert abs(mo.cov[0, 0] - bud.C[0, 0]) < 4 * mo.se_cov[0, 0]


def test_seed_reproducible_and_thread_independent(monkeypatch, imbalanced):
    las = LaserParams(lambda_abs2=1e6, w2=0.5, gamma1=1e3)
    cfg = SimConfig(imbalanced, las, DET, m=5000, seed=9)
    monkeypatch.setenv("OCTOPORT_THREADS", "1")
    a = simulate(cfg).x
    monkeypatch.setenv("OCTOPORT_THREADS", "4")
    b = simulate(cfg).x
    np.testing.assert_array_equal(a, b)
    c = simulate(SimConfig(imbalanced, las, DET, m=5000, seed=10)).x
    assert not np.array_equal(a, c)
    monkeypatch.setenv("OCTOPORT_THREADS", "x")
    with pytest.raises(ConfigError):
        simulate(cfg)


def test_empirical_moments_jackknife_oracle(rng):
    x = rng.normal(size=(40, 2)) @ np.array([[1.0, 0.3], [0.0, 2.0]])
    mo = empirical_moments(x)
    loo = np.array([np.cov(np.delete(x, i, axis=0), rowvar=False) for i in range(40)])
    se = np.sqrt(39 / 40 * np.sum((loo - loo.mean(axis=0)) ** 2, axis=0))
    np.testing.assert_allclose(mo.se_cov, se, rtol=1e-10)
    np.testing.assert_allclose(mo.cov, np.cov(x, rowvar=False), rtol=1e-12)
    with pytest.raises(DomainError):
        empirical_moments(x[:2])


def test_csv_round_trip(tmp_path, imbalanced):
    las = LaserParams(lambda_abs2=1e6)
    b = simulate(SimConfig(imbalanced, las, DET, m=50, seed=3))
    b.to_csv(tmp_path / "x.csv")
    back = SampleBatch.from_csv(tmp_path / "x.csv")
    np.testing.assert_array_equal(back.x, b.x)
    assert back.meta["seed"] == 3 and back.meta["m"] == 50


def test_config_validation(imbalanced):
    las = LaserParams(lambda_abs2=1e6)
    with pytest.raises(ConfigError):
        SimConfig(imbalanced, las, DET, regime="exact")
    with pytest.raises(ConfigError):
        SimConfig(imbalanced, las, DET, mode="triple")
    with pytest.raises(DomainError):
        SimConfig(imbalanced, las, DET, m=0)
    with pytest.raises(DomainError):
        SimConfig(imbalanced, LaserParams(lambda_abs2=1e6, w2=0.5, gamma1=1.0), DET)
