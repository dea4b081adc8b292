import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import kv, kvp

from layerspectra.errors import IntegrationBlowup, QuadratureError
from layerspectra.numerics import (
    BesselUnderflowWarning,
    SampledFunction,
    bessel_k,
    bessel_k01,
    bessel_k_asymptotic,
    bessel_k_integral,
    bessel_k_scaled,
    cumulative,
    fit_tail,
    gauss_legendre,
    integrate,
    rk4_path,
    simpson,
    simpson_with_error,
    tail_integral,
)
from layerspectra.numerics import bessel as bessel_mod


# ------------------------------------------------------------ quadrature


@pytest.mark.parametrize("deg", range(0, 20))
def test_gauss_legendre_exact_on_polynomials(deg):
    x, w = gauss_legendre(10)
    exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
    assert abs(w @ x**deg - exact) < 1e-14


def test_integrate_smooth_and_peaked():
    val, err = integrate(np.exp, (0.0, 1.0))
    assert abs(val - (math.e - 1.0)) < 1e-13 and err < 1e-11
    # narrow peak forces adaptive refinement
    val, _ = integrate(lambda t: 1.0 / (1e-4 + t * t), (-1.0, 1.0), tol=1e-12)
    assert abs(val - 2.0 * math.atan(1e2) / 1e-2) / val < 1e-11


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_integrate_rejects_nonfinite():
    with pytest.raises(QuadratureError):
        integrate(lambda t: 1.0 / (t - 0.5), (0.0, 1.0))


def test_simpson_even_and_odd_interval_counts():
    for n in (2, 3, 10, 11, 101):
        x = np.linspace(0.0, 2.0, n + 1)
        assert abs(simpson(x**3, x[1] - x[0]) - 4.0) < 1e-12


def test_simpson_error_bound_is_honest():
    x = np.linspace(0.0, math.pi, 41)
    val, err = simpson_with_error(np.sin(x), x[1] - x[0])
    assert abs(val - 2.0) <= err


def test_cumulative_matches_antiderivative():
    x = np.linspace(0.0, 3.0, 301)
    c = cumulative(np.cos(x), x[1] - x[0])
    assert np.max(np.abs(c - np.sin(x))) < 1e-8


# ------------------------------------------------------------------- RK4


def test_rk4_fourth_order():
    errs = []
    for n in (20, 40, 80):
        t = np.linspace(0.0, 1.0, n + 1)
        y = rk4_path(lambda s, y: -y, [1.0], t)[-1, 0]
        errs.append(abs(y - math.exp(-1.0)))
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    assert all(14.0 < q < 18.0 for q in ratios)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_rk4_blowup_detected():
    t = np.linspace(0.0, 2.0, 50)
    with pytest.raises(IntegrationBlowup):
        rk4_path(lambda s, y: y * y * 1e300, [1.0], t)


# --------------------------------------------------------------- Bessel


def test_bessel_against_integral_oracle():
    z = np.logspace(-3, math.log10(20.0), 50)
    for order in (0, 1):
        got = bessel_k(order, z)
        ref = np.array([bessel_k_integral(order, v) for v in z])
        assert np.max(np.abs(got / ref - 1.0)) <= 1e-8


def test_bessel_seam_continuity():
    lo, hi = np.nextafter(2.0, 0.0), np.nextafter(2.0, 3.0)
    for order in (0, 1):
        a, b = bessel_k(order, lo), bessel_k(order, hi)
        assert abs(a / b - 1.0) < 1e-13


def test_bessel_asymptotic_agrees_far_out():
    for z in (25.0, 60.0, 200.0):
        for order in (0, 1):
            assert abs(bessel_k(order, z) / bessel_k_asymptotic(order, z) - 1.0) < 1e-10


def test_bessel_derivative_identity():
    # K0' = -K1 for our own pair, checked with a 4th-order difference
    z = np.logspace(-3, 1.3, 40)
    h = 1e-3 * z
    d = (-bessel_k(0, z + 2 * h) + 8 * bessel_k(0, z + h) - 8 * bessel_k(0, z - h) + bessel_k(0, z - 2 * h)) / (12 * h)
    res = 2.0 * d + 2.0 * bessel_k(1, z)
    # rounding of the difference quotient dominates near z = 20
    assert np.max(np.abs(res) / bessel_k(1, z)) <= 5e-8


def test_bessel_derivative_against_scipy():
    z = np.logspace(-3, math.log10(20.0), 50)
    assert np.max(np.abs(2.0 * kvp(0, z) + 2.0 * bessel_k(1, z))) <= 1e-9
    assert np.allclose(bessel_k(0, z), kv(0, z), rtol=1e-13, atol=0)


@given(st.floats(min_value=1e-4, max_value=600.0))
def test_bessel_scaled_consistent(z):
    k0, k1 = bessel_k01(z)
    s0, s1 = bessel_k01(z, scaled=True)
    assert s1 > s0 > 0
    if z < 300:
        assert abs(s0 * math.exp(-z) / k0 - 1.0) < 1e-12


def test_bessel_underflow_warns():
    with pytest.warns(BesselUnderflowWarning):
        v = bessel_k(0, 800.0)
    assert v == 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert bessel_k_scaled(0, 800.0) > 0


def test_bessel_rejects_nonpositive():
    with pytest.raises(ValueError):
        bessel_k(0, 0.0)
    with pytest.raises(ValueError):
        bessel_k(2, 1.0)


def test_bessel_numba_numpy_parity():
    z = np.ascontiguousarray(np.logspace(-4, 2.5, 300))
    for scaled in (False, True):
        a = bessel_mod._k01_numba(z, scaled)
        b = bessel_mod._k01_numpy(z, scaled)
        for x, y in zip(a, b):
            assert np.max(np.abs(x / y - 1.0)) < 1e-14


def test_k1_squared_moment():
    val, _ = integrate(lambda t: t * t * bessel_k(1, t) ** 2, (1e-12, 60.0), tol=1e-12, abs_floor=0.0)
    assert abs(val / (3 * math.pi**2 / 32) - 1.0) < 1e-6


# ----------------------------------------------------------------- tails


def test_fit_tail_power_law():
    t = np.linspace(1.0, 100.0, 2000)
    m = fit_tail(t, 3.0 / t**2.5)
    assert abs(m.power - 2.5) < 1e-10 and m.convergent
    val, err = m.tail(100.0)
    assert abs(val - 3.0 * 100.0**-1.5 / 1.5) <= err + 1e-15


def test_fit_tail_divergent_and_vanishing():
    t = np.linspace(1.0, 100.0, 2000)
    assert fit_tail(t, 1.0 / t).divergent
    assert fit_tail(t, np.zeros_like(t)).kind == "vanishing"
    # rounding-level noise with a floor counts as vanishing
    noise = 1e-17 * np.sin(37.0 * t)
    assert fit_tail(t, noise, floor=1e-15).kind == "vanishing"


def test_tail_integral_splits_finite_and_tail():
    t = np.linspace(1.0, 50.0, 4901)
    f = SampledFunction(t, 1.0 / t**3)
    res = tail_integral(f)
    assert res.convergent
    assert abs(res.value - 0.5) < 1e-8
    assert abs(res.value - 0.5) <= res.error + 1e-12
    assert not tail_integral(SampledFunction(t, 1.0 / t)).convergent


def test_sampled_function_validation():
    with pytest.raises(ValueError):
        SampledFunction(np.array([0.0, 0.0, 1.0]), np.zeros(3))
    f = SampledFunction(np.linspace(0, 1, 11), np.linspace(0, 1, 11) ** 2)
    with pytest.raises(ValueError):
        f(1.5)
    assert abs(f.derivative(0.5) - 1.0) < 1e-12
