import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import comb

from hybridsearch import (
    ConvergenceError,
    HybridSpec,
    ScheduleKind,
    ac_schedule,
    analytic_schedule,
    hybrid_coefficients,
    linear_schedule,
    numeric_schedule,
    optimal_beta,
    optimal_gamma,
    r1,
    r2,
)
from hybridsearch.schedules import (
    _analytic_constants,
    analytic_epsilon_tf,
    aqc_gap,
    interpolate_coefficients,
    read_schedule_csv,
)
from hybridsearch.spectral import min_gap


@pytest.fixture(scope="module")
def numeric16():
    return numeric_schedule(16, epsilon=0.1)


# ---------------------------------------------------------------------------
# binomial sums


def test_r_values_small_n():
    assert r1(1) == 0.5
    assert r1(2) == 0.625
    assert r2(2) == 0.5625


@pytest.mark.parametrize("n", [3, 10, 30])
def test_r_sums_against_exact_rationals(n):
    from fractions import Fraction

    exact1 = sum(Fraction(math.comb(n, r), r) for r in range(1, n + 1)) / 2**n
    exact2 = sum(Fraction(math.comb(n, r), r * r) for r in range(1, n + 1)) / 2**n
    assert abs(r1(n) - float(exact1)) <= 1e-13 * float(exact1)
    assert abs(r2(n) - float(exact2)) <= 1e-13 * float(exact2)


def test_r1_large_n_limit():
    assert abs(100 * r1(100) - 2) / 2 < 0.1
    assert np.isfinite(r1(200)) and np.isfinite(r2(200))
    # relative stability at the top of the line range
    direct = sum(comb(200, r, exact=True) / r for r in range(1, 201)) / 2**200
    assert abs(r1(200) - direct) <= 1e-12 * direct


def test_optimal_beta_and_gamma():
    assert np.isclose(optimal_beta(2), 1 / 1.625)
    for n in (2, 7, 33):
        b = optimal_beta(n)
        assert optimal_gamma(n) == pytest.approx((1 - b) / b, rel=1e-14)
    assert optimal_beta(100) > optimal_beta(50) > optimal_beta(20)


# ---------------------------------------------------------------------------
# analytic hypercube schedule


@pytest.mark.parametrize("n", [2, 5, 12, 20, 40])
def test_analytic_endpoints_and_monotone(n):
    sch = analytic_schedule(n, epsilon=0.2)
    tau = np.linspace(0, 1, 20001)
    s = sch(tau)
    assert abs(s[0]) < 1e-12 and abs(s[-1] - 1) < 1e-12
    assert np.all(np.diff(s) >= 0)
    assert sch.s[0] == 0 and sch.s[-1] == 1
    assert sch.kind is ScheduleKind.ANALYTIC


def test_analytic_slowest_point_is_beta_o():
    n = 12
    amp, k, c, et = _analytic_constants(n)
    tau_star = c / (k * et)
    sch = analytic_schedule(n, t_f=100.0)
    assert sch(tau_star) == pytest.approx(1 / (1 + r1(n)), abs=1e-14)


def test_analytic_runtime_relation():
    sch = analytic_schedule(10, epsilon=0.05)
    assert sch.epsilon_tf == pytest.approx(analytic_epsilon_tf(10), rel=1e-14)
    sch2 = analytic_schedule(10, t_f=sch.t_f)
    assert sch2.epsilon == pytest.approx(0.05, rel=1e-14)


def test_analytic_runtime_ratio_tends_to_one():
    ratios = [analytic_epsilon_tf(n) / (np.pi * np.sqrt(2.0**n) / 4) for n in (16, 24, 40, 80)]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < 1.1


@pytest.mark.parametrize("kw", [dict(), dict(epsilon=1.0, t_f=2.0), dict(epsilon=0.0), dict(epsilon=-1.0)])
def test_analytic_argument_errors(kw):
    with pytest.raises(ValueError):
        analytic_schedule(6, **kw)


# ---------------------------------------------------------------------------
# avoided-crossing schedule


def test_ac_runtime_value():
    sch = ac_schedule(0.1, epsilon=0.01)
    assert sch.t_f == pytest.approx((np.pi / 2 - np.arctan(0.1)) / (0.1 * 0.01), rel=1e-14)
    assert sch.t_f == pytest.approx(1471.1, abs=0.05)


def test_ac_schedule_shape():
    g = 0.01
    sch = ac_schedule(g, epsilon=0.1)
    s0 = 0.5 * (1 - g / np.tan(g))
    assert sch(0.0) == pytest.approx(s0, abs=1e-15)
    assert sch(0.0) < 1e-4 and sch(1.0) > 1 - 1e-4
    # s = 1/2 where the cot argument reaches pi/2
    eps_tf = sch.epsilon_tf
    tau_mid = (np.pi / 2 - g) / (2 * g * eps_tf)
    assert sch(tau_mid) == pytest.approx(0.5, abs=1e-12)
    assert np.all(np.diff(sch(np.linspace(0, 1, 5001))) >= 0)


def test_ac_endpoint_offset_shrinks_with_gap():
    offsets = [ac_schedule(g, epsilon=1.0)(0.0) for g in (0.2, 0.1, 0.05)]
    assert offsets[0] > offsets[1] > offsets[2] > 0


# ---------------------------------------------------------------------------
# linear schedule


def test_linear_schedule():
    sch = linear_schedule(t_f=3.0)
    tau = np.linspace(0, 1, 11)
    np.testing.assert_array_equal(sch(tau), tau)
    assert sch.t_f == 3.0


# ---------------------------------------------------------------------------
# numeric schedule


def test_numeric_endpoints_monotone(numeric16):
    s = numeric16.s
    assert numeric16.converged
    assert s[0] == 0.0 and s[-1] == 1.0
    assert np.all(np.diff(s) >= 0)
    fine = numeric16(np.linspace(0, 1, 50001))
    assert np.all(np.diff(fine) >= 0)


def test_numeric_mesh_concentrates_at_crossing(numeric16):
    res = min_gap(16)
    frac = np.mean(np.abs(numeric16.s - res.s_m) < 10 * res.g_min)
    assert frac > 0.5


def test_numeric_residuals_decrease(numeric16):
    r = np.array(numeric16.residuals)
    assert r[-1] < 1e-8
    assert np.all(np.diff(r[1:]) <= 0)


def test_numeric_runtime_is_gap_integral(numeric16):
    s = np.linspace(0, 1, 400001)
    mid = 0.5 * (s[1:] + s[:-1])
    integral = np.sum(np.diff(s) / aqc_gap(16, mid) ** 2)
    # the adaptive mesh integral and a fine uniform one must agree
    assert numeric16.epsilon_tf == pytest.approx(16 / 4 * integral, rel=1e-3)


def test_numeric_local_adiabatic_condition():
    sch = numeric_schedule(8, epsilon=0.2)
    tau = np.linspace(0.05, 0.95, 181)
    h = 1e-5
    ds_dtau = (sch(tau + h) - sch(tau - h)) / (2 * h)
    ds_dt = ds_dtau / sch.t_f
    target = sch.epsilon * 4 * aqc_gap(8, sch(tau)) ** 2 / 8
    np.testing.assert_allclose(ds_dt, target, rtol=2e-3)


def test_numeric_non_convergence_paths():
    with pytest.warns(RuntimeWarning):
        sch = numeric_schedule(10, mesh=257, max_iter=1)
    assert not sch.converged
    with pytest.raises(ConvergenceError):
        numeric_schedule(10, mesh=257, max_iter=1, strict=True)


def test_numeric_argument_errors():
    with pytest.raises(ValueError):
        numeric_schedule(6, mesh=10)
    with pytest.raises(ValueError):
        numeric_schedule(6, tol=0)


def test_with_runtime_keeps_shape(numeric16):
    other = numeric16.with_runtime(123.0)
    assert other.t_f == 123.0
    assert other.epsilon_tf == pytest.approx(numeric16.epsilon_tf)
    tau = np.linspace(0, 1, 33)
    np.testing.assert_array_equal(other(tau), numeric16(tau))


def test_schedule_csv_round_trip(tmp_path, numeric16):
    path = tmp_path / "s.csv"
    numeric16.to_csv(path)
    assert path.read_text().splitlines()[0] == "tau,s"
    back = read_schedule_csv(path, t_f=numeric16.t_f)
    np.testing.assert_array_equal(back.tau, numeric16.tau)
    np.testing.assert_array_equal(back.s, numeric16.s)
    sch = analytic_schedule(9, epsilon=0.3, samples=257)
    sch.to_csv(path)
    back = read_schedule_csv(path, kind="analytic", n=9)
    np.testing.assert_array_equal(back.s, sch.s)


# ---------------------------------------------------------------------------
# hybrid coefficients


def test_walk_coefficients_constant():
    spec = HybridSpec(0.0, 0.7)
    tau = np.linspace(0, 1, 11)
    A, B = hybrid_coefficients(spec, tau)
    np.testing.assert_array_equal(A[:-1], 1 - 0.7)
    np.testing.assert_array_equal(B[1:], 0.7)
    assert B[0] == 0.0 and A[-1] == 0.0


def test_annealing_coefficients():
    sch = analytic_schedule(6, epsilon=0.1)
    tau = np.linspace(0, 1, 101)
    A, B = hybrid_coefficients(HybridSpec(1.0, 0.6, sch), tau)
    s = sch(tau)
    np.testing.assert_allclose(A, 1 - s, atol=1e-15)
    np.testing.assert_allclose(B, s, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(0.0, 1.0), beta=st.floats(0.02, 0.98))
def test_all_hybrids_cross_at_beta(alpha, beta):
    A, B = interpolate_coefficients(alpha, beta, beta)
    assert A == pytest.approx(1 - beta, abs=1e-13)
    assert B == pytest.approx(beta, abs=1e-13)


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(0.0, 1.0), beta=st.floats(0.02, 0.98))
def test_coefficients_monotone_and_bounded(alpha, beta):
    s = np.linspace(0, 1, 2001)
    A, B = interpolate_coefficients(alpha, beta, s)
    assert np.all((A >= 0) & (A <= 1) & (B >= 0) & (B <= 1))
    inner = slice(1, -1)
    assert np.all(np.diff(A[inner]) <= 1e-15)
    assert np.all(np.diff(B[inner]) >= -1e-15)


def test_hybrid_spec_validation():
    with pytest.raises(ValueError):
        HybridSpec(0.5, 0.5)
    with pytest.raises(ValueError):
        HybridSpec(0.0, 1.0)
    with pytest.raises(ValueError):
        HybridSpec(1.2, 0.5, linear_schedule())
    with pytest.raises(ValueError):
        hybrid_coefficients(HybridSpec(0.0, 0.5), 1.5)
