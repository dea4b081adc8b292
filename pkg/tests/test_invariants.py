import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erf

from layerspectra.constants import V3, W2
from layerspectra.invariants import (
    EtaTable,
    K_total,
    elementary_symmetric,
    eta_closed,
    eta_quadrature,
    invariants_record,
    lemma2_diagnostics,
    parabolicity,
    far_field_constants,
    volume_growth,
    write_invariants,
)
from layerspectra.layer import make_layer
from layerspectra.meridian import CurvatureProfile, build_meridian, principal_curvatures
from layerspectra.numerics import integrate

# ------------------------------------------------------------------ eta


@pytest.mark.parametrize("k", [2, 4, 6, 8])
@pytest.mark.parametrize("a", [0.3, 1.0, 2.0])
def test_eta_closed_vs_quadrature(k, a):
    assert abs(eta_closed(k, a) / eta_quadrature(k, a) - 1.0) <= 1e-10


def test_eta2_equals_half_width():
    # int u^2 (chi'^2 - k1^2 chi^2) with chi = cos(k1 u) integrates to a
    for a in (0.1, 0.5, 3.0):
        assert eta_closed(2, a) == pytest.approx(a, rel=1e-14)


@pytest.mark.parametrize("k", [0, 1, 3, 5, 7])
def test_eta_vanishing_moments(k):
    for a in (0.3, 1.0, 2.0):
        assert eta_closed(k, a) == 0.0
        assert abs(eta_quadrature(k, a)) <= 1e-14 * max(1.0, a ** (k + 1))


@given(st.integers(1, 6), st.floats(0.05, 20.0))
def test_eta_positive_and_scaling(j, a):
    k = 2 * j
    assert eta_closed(k, a) > 0
    # u -> a v: eta_k(a) = a^(k-1) eta_k(1)
    assert eta_closed(k, a) == pytest.approx(a ** (k - 1) * eta_closed(k, 1.0), rel=1e-12)


def test_eta_validation():
    with pytest.raises(ValueError):
        eta_closed(-1, 1.0)
    with pytest.raises(ValueError):
        eta_closed(2, 0.0)
    t = EtaTable.build(1.5)
    assert len(t.values) == 9 and t.k1 == pytest.approx(math.pi / 3.0)


# ------------------------------------------------- symmetric polynomials


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6), st.data())
def test_elementary_symmetric_bruteforce(xs, data):
    k = data.draw(st.integers(0, len(xs)))
    brute = math.fsum(math.prod(c) for c in itertools.combinations(xs, k))
    assert elementary_symmetric(xs, k) == pytest.approx(brute, rel=1e-9, abs=1e-9)


def test_elementary_symmetric_vectorised():
    ks, kt = np.array([0.1, 0.2]), np.array([0.3, -0.4])
    c2 = elementary_symmetric([ks, kt, kt], 2)
    assert np.allclose(c2, 2 * ks * kt + kt**2)
    with pytest.raises(ValueError):
        elementary_symmetric([ks], 2)


# -------------------------------------------------------------- K_total


def bump_b(beta, width):
    return lambda s: beta * (np.asarray(s) / width) * np.exp(-((np.asarray(s) / width) ** 2))


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_flat_k_total_zero(a):
    kt = K_total(make_layer(CurvatureProfile.flat(), a, s_max=30.0, h=0.05))
    assert kt.value == 0.0 and kt.integrable


def test_k_total_against_turning_angle_oracle(bump_layer):
    # int c2 r^2 = int (1 - cos b)^2 ds + boundary terms that vanish when b(S) -> 0
    b = bump_b(0.3, 1.0)
    ref, _ = integrate(lambda s: (1.0 - np.cos(b(s))) ** 2, (0.0, 40.0), tol=1e-13, abs_floor=0.0)
    ref *= eta_closed(2, bump_layer.a) * W2
    kt = K_total(bump_layer)
    assert kt.integrable and kt.value > 0
    assert abs(kt.value - ref) <= kt.error
    assert kt.error <= 1e-5 * kt.value


def test_k_total_linear_in_half_width(bump_profile):
    v = [K_total(make_layer(bump_profile, a, s_max=60.0, h=0.01)).value for a in (0.25, 0.5)]
    assert v[1] == pytest.approx(2.0 * v[0], rel=1e-12)


@settings(max_examples=8)
@given(st.floats(0.05, 0.9), st.sampled_from([0.5, 1.0, 2.0]))
def test_k_total_nonnegative_and_mirror_symmetric(beta, width):
    p = CurvatureProfile.gaussian_bump(beta, width)
    s_max = 30.0 * width
    up = K_total(make_layer(p, 0.1, s_max=s_max, h=0.01))
    dn = K_total(make_layer(p.mirrored(), 0.1, s_max=s_max, h=0.01))
    assert up.value >= -up.error
    assert dn.value == pytest.approx(up.value, rel=1e-10, abs=1e-14)


def test_cone_k_total_not_integrable_or_flagged():
    cone = CurvatureProfile.from_function(lambda s: np.exp(-np.asarray(s) ** 2), name="cone")
    lay = make_layer(cone, 0.1, s_max=100.0, h=0.01)
    d = lemma2_diagnostics(lay.curve, lay.pair)
    assert "r_over_s_limit_not_one" in d.flags
    assert "integrability_hypothesis_violated" in d.flags
    # r ~ s cos(b_inf): the fitted slope recovers the cone angle
    assert d.r_over_s_limit == pytest.approx(math.cos(math.sqrt(math.pi) / 2.0), rel=1e-3)


# ------------------------------------------------------ proof constants


def test_offset_constant_matches_oracle(bump_layer):
    # s - r(s) -> int_0^inf (1 - cos b)
    b = bump_b(0.3, 1.0)
    ref, _ = integrate(lambda s: 1.0 - np.cos(b(s)), (0.0, 40.0), tol=1e-13, abs_floor=0.0)
    pc = far_field_constants(bump_layer.curve, bump_layer.pair)
    assert pc.D == pytest.approx(ref, rel=1e-8)
    d = lemma2_diagnostics(bump_layer.curve, bump_layer.pair)
    assert d.offset_C == pytest.approx(ref, rel=1e-6)
    assert 1.0 < pc.s0 < 10.0


# ---------------------------------------------- far field of a bump


def test_far_field_bump(bump_layer):
    c, p = bump_layer.curve, bump_layer.pair
    d = lemma2_diagnostics(c, p)
    assert d.S == pytest.approx(200.0)
    assert abs(d.r_over_s - 1.0) <= 2.0 / d.S
    assert abs(d.r_over_s - 1.0) <= d.r_over_s_bound * (1 + 1e-6)
    assert abs(d.jacobi_moment) <= d.jacobi_moment_bound
    assert d.flags == ()


def test_flat_diagnostics_exact(flat_layer):
    d = lemma2_diagnostics(flat_layer.curve, flat_layer.pair)
    assert d.r_over_s == pytest.approx(1.0, abs=1e-12)
    assert d.jacobi_moment == 0.0 and d.flags == ()


# ----------------------------------------------------------- parabolicity


def test_flat_parabolicity_value(flat_layer):
    rep = parabolicity(flat_layer.curve)
    assert rep.verdict == "non-parabolic"
    assert abs(rep.value - 1.0 / W2) <= max(rep.tail_bound, 1e-9)


def test_bump_parabolicity_and_explicit_bound(bump_layer):
    rep = parabolicity(bump_layer.curve, bump_layer.pair)
    assert rep.verdict == "non-parabolic" and math.isfinite(rep.value)
    assert rep.tail_power == pytest.approx(2.0, abs=0.05)
    # the explicit bound majorises the computed integral
    assert rep.explicit_bound >= rep.value - rep.tail_bound


def test_cylinder_is_parabolic():
    tot = math.pi / 2
    cyl = CurvatureProfile.from_function(
        lambda s: tot * 2 / math.sqrt(math.pi) * np.exp(-np.asarray(s) ** 2),
        name="cylinder",
        turning_angle=lambda s: tot * erf(np.asarray(s)),
    )
    c = build_meridian(cyl, 100.0, 0.01)
    assert parabolicity(c).verdict == "parabolic"


# ---------------------------------------------------------- volume growth


def test_flat_volume_exact(flat_layer):
    rep = volume_growth(flat_layer.curve)
    assert rep.alpha_window == pytest.approx(1.0, abs=1e-10)
    assert rep.volume_end == pytest.approx(V3 * 40.0**3, rel=1e-12)


def test_bump_volume_growth(bump_layer):
    rep = volume_growth(bump_layer.curve, bump_layer.pair)
    assert 0.98 <= rep.alpha_window <= 1.02
    assert rep.alpha_extrapolated == pytest.approx(1.0, abs=1e-5)
    assert rep.envelope_ok


# ---------------------------------------------------------------- output


def test_invariants_record_roundtrip(tmp_path, bump_layer):
    rec = invariants_record(bump_layer)
    path = tmp_path / "invariants.json"
    write_invariants(path, rec)
    back = json.loads(path.read_text())
    assert back["K_total"] == pytest.approx(rec["K_total"])
    assert back["parabolicity"]["verdict"] == "non-parabolic"
    assert set(back) >= {"K_total", "tail_bound", "eta_table", "diagnostics", "volume_growth"}
