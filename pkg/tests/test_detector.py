import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from octoport.detector import (
    DetectorParams,
    c0,
    check_decay,
    r_l_squared,
    response_weights,
    s0,
    s_minus,
    sample_r2,
)
from octoport.errors import ConsistencyError, DomainError
from octoport.laser import LaserParams, rin_covariance, sample_trajectory, sample_windows


def test_s0_closed_form():
    assert s0(DetectorParams(kappa_resp=1.0)) == 0.5
    assert s0(DetectorParams(kappa_resp=2e10)) == 1e10


def test_s0_quadrature_fallback():
    d = DetectorParams(kappa_resp=3.7)
    assert s0(d, response=d.h) == pytest.approx(s0(d), rel=1e-10)


def test_c0_values():
    d = DetectorParams(kappa_resp=1.0)
    assert c0(d, LaserParams(lambda_abs2=1.0, w2=1.0)) == 0.0
    assert c0(d, LaserParams(lambda_abs2=1.0, w2=0.5, gamma1=1.0)) == pytest.approx(2 / 3, rel=1e-14)


def test_c0_double_quadrature_exact_covariance():
    d = DetectorParams(kappa_resp=2.0)
    las = LaserParams(lambda_abs2=1.0, w2=0.3, gamma1=1.3)
    def inner(q):
        # split at the kink of the covariance at r = q
        f = lambda r: d.h(r) * rin_covariance(las, q - r)
        return d.h(q) * (integrate.quad(f, 0, q, epsabs=1e-13)[0] + integrate.quad(f, q, 30, epsabs=1e-13)[0])

    val, _ = integrate.quad(inner, 0, 30, epsabs=1e-12, limit=200)
    assert val == pytest.approx(c0(d, las), rel=1e-7)


def test_c0_quadrature_with_sampled_covariance(rng):
    # RIN covariance estimated from sampled u paths.  For h(t) = k exp(-k t)
    # the double integral of h(q) h(r) c(q - r) reduces to the lag integral
    # of c(s) k exp(-k s) over s >= 0.
    d = DetectorParams(kappa_resp=1.0, tau=14.0)
    las = LaserParams(lambda_abs2=1.0, w2=0.5, gamma1=1.0)
    lags = np.linspace(0, 12, 241)
    u, _ = sample_windows(las, np.zeros(200_000), 12.0, 240, rng, with_phase=False)
    n = u**2 - 1
    emp = np.array([np.mean(n[:, -1] * n[:, -1 - k]) for k in range(241)])
    val = integrate.simpson(emp * d.h(lags), x=lags)
    assert val == pytest.approx(c0(d, las), rel=0.02)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 100.0), st.floats(1.01, 10.0))
def test_c0_decreases_with_gamma1(w2, g1, factor):
    d = DetectorParams(kappa_resp=1.0)
    a = c0(d, LaserParams(lambda_abs2=1.0, w2=w2, gamma1=g1))
    b = c0(d, LaserParams(lambda_abs2=1.0, w2=w2, gamma1=g1 * factor))
    assert b < a


def test_tau_default_and_decay_checks():
    d = DetectorParams(kappa_resp=1e3)
    assert d.tau == pytest.approx(14e-3)
    with pytest.raises(DomainError):
        DetectorParams(kappa_resp=1.0, tau=5.0)
    with pytest.raises(DomainError):
        check_decay(d, LaserParams(lambda_abs2=1.0, w2=0.5, gamma1=500.0))
    check_decay(d, LaserParams(lambda_abs2=1.0, w2=1.0, gamma1=1e-3))  # no RIN, nothing to decay


def test_sample_time_validation():
    with pytest.raises(DomainError):
        DetectorParams(kappa_resp=1.0, sample_times=(14.0, 20.0))
    with pytest.raises(DomainError):
        DetectorParams(kappa_resp=1.0, sample_times=(10.0,))
    d = DetectorParams(kappa_resp=1.0, sample_times=(14.0, 28.0, 50.0))
    assert d.m == 3
    np.testing.assert_array_equal(d.times(), [14.0, 28.0, 50.0])
    with pytest.raises(DomainError):
        DetectorParams(kappa_resp=-1.0)
    with pytest.raises(DomainError):
        DetectorParams(kappa_resp=1.0, sigma_el=(-1.0, 0.0))


@pytest.mark.parametrize("power", [1, 2])
def test_response_weights_exact_for_linear_functions(power):
    k, tau, n = 3.0, 14 / 3.0, 300
    w = response_weights(k, tau, n, power)
    t = np.linspace(0, tau, n + 1)  # t_l = tau
    g = 2.0 + 0.7 * t
    exact, _ = integrate.quad(lambda s: (k * math.exp(-k * (tau - s))) ** power * (2.0 + 0.7 * s), 0, tau,
                              epsabs=0, epsrel=1e-13)
    assert w @ g == pytest.approx(exact, rel=1e-12)


def test_r2_noiseless_exact():
    d = DetectorParams(kappa_resp=2.0)
    las = LaserParams(lambda_abs2=5.0, gamma0=0.0, w2=1.0)
    grid = np.arange(0, 3001) * (d.tau / 1000)
    tr = sample_trajectory(las, grid, 1)
    r2 = r_l_squared(tr, d, 2 * d.tau, las.lambda_abs2)
    assert r2 == pytest.approx(s0(d) * -math.expm1(-2 * 2.0 * d.tau), rel=1e-12)


def test_r2_against_plain_trapezoid():
    d = DetectorParams(kappa_resp=1.0)
    las = LaserParams(lambda_abs2=1.0, w2=0.6, gamma1=2.0, gamma0=0.5)
    grid = np.arange(0, 4001) * (d.tau / 2000)
    tr = sample_trajectory(las, grid, 5)
    t_l = grid[3000]
    sel = (grid >= t_l - d.tau - 1e-12) & (grid <= t_l + 1e-12)
    alt = np.trapezoid(d.h(t_l - grid[sel]) ** 2 * tr.abs2[sel], grid[sel])
    assert r_l_squared(tr, d, t_l, 1.0) == pytest.approx(alt, rel=1e-4)


def test_r2_coverage_errors():
    d = DetectorParams(kappa_resp=1.0)
    las = LaserParams(lambda_abs2=1.0)
    tr = sample_trajectory(las, np.arange(0, 1001) * 0.02, 1)
    with pytest.raises(DomainError):
        r_l_squared(tr, d, 10.0)  # window starts before the grid
    with pytest.raises(DomainError):
        r_l_squared(tr, d, 30.0)  # window ends after the grid
    coarse = sample_trajectory(las, np.arange(0, 101) * 0.5, 1)
    with pytest.raises(DomainError):
        r_l_squared(coarse, d, 20.0)  # too few points in the window


def test_mean_r2_equals_s0():
    d = DetectorParams(kappa_resp=1e3)
    las = LaserParams(lambda_abs2=1e6, w2=0.5, gamma1=1e3)
    r2 = sample_r2(las, d, 10000, seed=3)
    se = r2.std(ddof=1) / math.sqrt(r2.size)
    assert abs(r2.mean() - s0(d)) < 3 * se
    assert np.all(r2 > 0)


def test_s_minus_noiseless():
    d = DetectorParams(kappa_resp=10.0)
    las = LaserParams(lambda_abs2=1.0)
    sm, se = s_minus(sample_r2(las, d, 100, seed=0))
    assert sm == pytest.approx(s0(d) * -math.expm1(-2 * d.kappa_resp * d.tau), rel=1e-12)
    assert se == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("w2,g1", [(0.5, 1e3), (0.9, 5e3), (0.0, 2e3)])
def test_s_minus_below_s0(w2, g1):
    d = DetectorParams(kappa_resp=1e3)
    las = LaserParams(lambda_abs2=1.0, w2=w2, gamma1=g1)
    sm, se = s_minus(sample_r2(las, d, 5000, seed=1), S0=s0(d))
    assert sm <= s0(d) + 3 * se


def test_s_minus_close_to_s0_for_fast_weak_rin():
    d = DetectorParams(kappa_resp=1e3)
    las = LaserParams(lambda_abs2=1.0, w2=0.99, gamma1=1e5)
    sm, _ = s_minus(sample_r2(las, d, 2000, seed=2, dt=d.tau / 2000))
    assert sm / s0(d) >= 0.99


def test_s_minus_consistency_guard():
    with pytest.raises(ConsistencyError):
        s_minus(np.full(10, 2.0), S0=1.0)
    with pytest.raises(DomainError):
        s_minus([1.0])
    with pytest.raises(DomainError):
        s_minus([1.0, -1.0])
