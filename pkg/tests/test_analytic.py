import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from octoport.analytic import (
    coherent_means,
    conditional_law,
    density_bound_check,
    simplified_budget,
    vacuum_budget,
)
from octoport.circuit import CircuitParams, balanced_params, derive_coefficients
from octoport.detector import DetectorParams
from octoport.errors import DomainError
from octoport.laser import LaserParams

unit_open = st.floats(0.02, 0.98)


@st.composite
def budgets(draw):
    p = CircuitParams(
        eta=tuple(draw(unit_open) for _ in range(4)),
        eps=tuple(draw(st.floats(0.05, 1.0)) for _ in range(4)),
        xi=tuple(draw(st.floats(0.1, 10.0)) for _ in range(4)),
    )
    lam2 = draw(st.floats(1e2, 1e16))
    co = derive_coefficients(p, lam2)
    S0 = draw(st.floats(1.0, 1e10))
    C0 = draw(st.floats(0.0, 2.0))
    sig = [draw(st.floats(0.0, 1e3)) * math.sqrt(lam2 * S0) for _ in range(2)]
    return vacuum_budget(co, S0, C0, sigma_el=sig)


def test_balanced_budget_diagonal():
    co = derive_coefficients(balanced_params(0.8, 2.0), 1e6)
    b = vacuum_budget(co, 500.0, 0.3)
    assert b.C[0, 1] == 0.0
    np.testing.assert_array_equal(b.Upsilon, 0.0)
    assert b.E12 == 1.0
    np.testing.assert_array_equal(b.means, 0.0)


def test_worked_parameter_set():
    b = simplified_budget(0.504, 0.9)
    assert b.lambda_abs2 * b.C0 / (2 * b.S0) == pytest.approx(0.5e4)
    np.testing.assert_allclose(b.Upsilon, 0.9 * 0.008**2 * 0.5e4, rtol=1e-10)
    np.testing.assert_allclose(b.Upsilon, 0.288, rtol=1e-10)
    np.testing.assert_allclose(b.Theta, 0.12 / 0.9, rtol=1e-12)
    for eps, eta in [(1.0, 0.5), (0.6, 0.47)]:
        c = simplified_budget(eta, eps)
        np.testing.assert_allclose(c.Upsilon, eps * (1 - 2 * eta) ** 2 * 0.5e4, rtol=1e-10, atol=1e-300)
        np.testing.assert_allclose(c.Theta, 0.12 / eps, rtol=1e-12)
    assert simplified_budget(0.5, 1.0).Upsilon[0] == 0.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0.3, 0.7), st.floats(0.05, 1.0), st.floats(0.1, 5.0), st.floats(0.0, 1.0))
def test_simplified_matches_expanded_circuit(eta, eps, xi, theta):
    lam2, S0, C0 = 1e16, 1e10, 0.01
    simp = simplified_budget(eta, eps, lambda_abs2=lam2, S0=S0, C0=C0, theta=theta, xi=xi)
    p = CircuitParams(eta=(0.5, 0.5, eta, eta), eps=(eps,) * 4, xi=(xi,) * 4)
    sig = math.sqrt(theta * xi**2 * lam2 * S0 / 2)
    full = vacuum_budget(derive_coefficients(p, lam2), S0, C0, sigma_el=[sig, sig])
    for name in ("Sigma2", "Upsilon", "Theta", "means", "kappa2", "kappa3"):
        np.testing.assert_allclose(getattr(simp, name), getattr(full, name), rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(simp.C, full.C, rtol=1e-12, atol=1e-12 * full.C.max())
    assert simp.E12 == pytest.approx(full.E12, rel=1e-12)
    sigma2 = xi**2 * lam2 * S0 * (theta + eps + eps**2 * simp.Upsilon[0] / eps) / 2
    assert simp.Sigma2[0] == pytest.approx(sigma2, rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(budgets())
def test_budget_invariants(b):
    assert b.E12 >= 1.0
    assert b.det_C >= 0
    np.testing.assert_allclose(b.C, b.C.T)
    assert np.all(np.linalg.eigvalsh(b.C) >= -1e-9 * b.C.max())
    # the direct 2x2 determinant cancels when the channels are nearly collinear
    scale = b.C[0, 0] * b.C[1, 1]
    assert abs(b.det_C - np.linalg.det(b.C)) <= 1e-9 * scale
    np.testing.assert_allclose(b.Sigma2, b.shot * (1 + b.Upsilon + b.Theta), rtol=1e-12)


def test_det_formula_generic(imbalanced):
    co = derive_coefficients(imbalanced, 1e6)
    b = vacuum_budget(co, 500.0, 0.05, sigma_el=[30.0, 10.0])
    C = b.C
    direct = C[0, 0] * C[1, 1] - C[0, 1] * C[1, 0]
    assert b.det_C == pytest.approx(direct, rel=1e-12)
    assert b.det_C == pytest.approx(co.kappa2[0] * co.kappa2[1] * 1e12 * 500.0**2 * b.E12, rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(*[st.floats(0, 100)] * 4, st.integers(0, 3), st.floats(0.0, 10.0))
def test_e12_monotone(u1, u2, t1, t2, which, bump):
    def e12(u1, u2, t1, t2):
        return (1 + t1) * (1 + t2) + (1 + t1) * u2 + (1 + t2) * u1

    args = [u1, u2, t1, t2]
    more = list(args)
    more[which] += bump
    assert e12(*more) >= e12(*args)


def test_budget_json_has_intermediates(imbalanced):
    import json

    b = vacuum_budget(derive_coefficients(imbalanced, 1e6), 500.0, 0.05)
    d = json.loads(b.to_json())
    assert {"kappa", "delta", "Upsilon", "Theta", "E12", "det_C"} <= set(d)


def _setup(p, theta=0.0, omega0=0.0, gamma0=0.0, w2=1.0):
    las = LaserParams(lambda_abs2=1e4, omega0=omega0, gamma0=gamma0, w2=w2, gamma1=1e4, theta=theta)
    return derive_coefficients(p, las.lambda_abs2), las, DetectorParams(kappa_resp=1e3)


def test_coherent_means_vacuum_terms(imbalanced):
    co, las, d = _setup(imbalanced)
    t = 2e-3
    got = coherent_means(co, 0.0, las, d, t)
    np.testing.assert_allclose(got, co.delta2 * las.lambda_abs2 * -math.expm1(-1e3 * t), rtol=1e-9)
    co_b, las, d = _setup(balanced_params())
    np.testing.assert_allclose(coherent_means(co_b, None, las, d, t), 0.0, atol=1e-10)


def test_coherent_means_interference_closed_form(imbalanced):
    theta, a, w0 = 0.4, 3.0 - 1.0j, 2e3
    co, las, d = _setup(imbalanced, theta=theta, omega0=w0)
    fs = lambda r: a * np.exp(-1j * w0 * r)
    t = 5e-3
    got = coherent_means(co, fs, las, d, t)
    decay = -math.expm1(-1e3 * t)
    lam = math.sqrt(las.lambda_abs2) * np.exp(1j * theta)
    for j in range(2):
        inter = 2 * co.kappa3[j] * (1j * np.exp(1j * co.psi[j]) * lam * np.conj(a)).real
        expect = (inter + co.delta[j, 0] * abs(a) ** 2 + co.delta2[j] * las.lambda_abs2) * decay
        assert got[j] == pytest.approx(expect, rel=1e-8)
    strong = coherent_means(co, fs, las, d, t, strong_lo=True)
    np.testing.assert_allclose(got - strong, co.delta[:, 0] * abs(a) ** 2 * decay, rtol=1e-7)


def test_coherent_means_uniform_phase_kills_interference(imbalanced):
    co, las, d = _setup(imbalanced, theta=None)
    t = 5e-3
    np.testing.assert_allclose(
        coherent_means(co, 2.0, las, d, t),
        (co.delta[:, 0] * 4.0 + co.delta2 * las.lambda_abs2) * -math.expm1(-5.0),
        rtol=1e-9,
    )


def test_conditional_law_shapes(imbalanced):
    co = derive_coefficients(imbalanced, 1e6)
    mean, cov = conditional_law(co, 500.0, 1.0)
    np.testing.assert_allclose(mean, co.delta2 * 1e3)
    np.testing.assert_allclose(np.diag(cov), co.kappa2 * 500.0)
    m2, _ = conditional_law(co, 500.0, 1.0, interference=[1.0, 1.0])
    assert np.any(m2 != mean)


def test_density_bound_balanced_equality():
    co = derive_coefficients(balanced_params(), 1.0)
    res = density_bound_check(co, 2.0, math.pi / 2)
    assert res.bound == pytest.approx(1 / (math.pi * 2.0))
    assert res.peak == pytest.approx(res.bound, rel=1e-14)
    assert res.ok


def test_density_bound_phi_zero():
    co = derive_coefficients(balanced_params(phi=0.0), 1.0)
    with pytest.raises(DomainError):
        density_bound_check(co, 1.0)


@settings(max_examples=300, deadline=None)
@given(
    st.tuples(*[unit_open] * 4),
    st.tuples(*[st.floats(0.05, 1.0)] * 4),
    st.tuples(*[st.floats(0.1, 10.0)] * 4),
    st.floats(0.1002, math.pi - 0.1002),
    st.floats(1e-3, 1e6),
)
def test_density_peak_below_bound(eta, eps, xi, phi, r2):
    co = derive_coefficients(CircuitParams(eta=eta, eps=eps, xi=xi, psi2=phi), 1.0)
    assert density_bound_check(co, r2).ok
