import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from layerspectra.errors import MeridianError
from layerspectra.kernels import _meridian_rk4_numba, _meridian_rk4_numpy
from layerspectra.meridian import (
    CurvatureProfile,
    asymptotic_flatness,
    build_meridian,
    jacobi_residual,
    principal_curvatures,
    rho_m,
    write_meridian_csv,
)
from layerspectra.numerics import simpson_with_error

# 8th-order central first-derivative stencil
D8 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])


def d8(y, h):
    return np.convolve(y, D8[::-1], "valid") / h


def table_profile():
    s = np.linspace(0.0, 40.0, 4001)
    return CurvatureProfile.from_table(s, 0.4 * (1.0 - 2.0 * s * s) * np.exp(-s * s))


PROFILES = {
    "bump": (lambda: CurvatureProfile.gaussian_bump(0.3, 1.0), 0.01),
    "sharp": (lambda: CurvatureProfile.gaussian_bump(-0.7, 0.5), 0.0025),
    "table": (table_profile, 0.01),
}


def test_flat_meridian_is_exact():
    c = build_meridian(CurvatureProfile.flat(), 10.0, 0.1)
    assert np.array_equal(c.z, np.zeros_like(c.z))
    assert np.max(np.abs(c.r - c.s)) < 1e-12
    pair = principal_curvatures(c)
    assert rho_m(pair) == math.inf


@pytest.mark.parametrize("name", sorted(PROFILES))
def test_arclength_identity(name):
    make, h = PROFILES[name]
    c = build_meridian(make(), 30.0, h)
    res = d8(c.r, c.h) ** 2 + d8(c.z, c.h) ** 2 - 1.0
    assert np.max(np.abs(res)) <= 1e-10


@pytest.mark.parametrize("name", sorted(PROFILES))
def test_jacobi_residual_second_order(name):
    prof = PROFILES[name][0]()
    res = []
    for h in (0.02, 0.01, 0.005):
        c = build_meridian(prof, 30.0, h)
        res.append(jacobi_residual(c, principal_curvatures(c)))
    for q in (res[0] / res[1], res[1] / res[2]):
        assert 3.5 <= q <= 4.5


@pytest.mark.parametrize("name", sorted(PROFILES))
def test_cross_identity(name):
    # int_0^S (k_theta^2 + k_s k_theta) r^2 ds = S - r'(S) r(S)
    prof = PROFILES[name][0]()
    c = build_meridian(prof, 40.0, 0.005)
    p = principal_curvatures(c)
    f = (p.k_theta.values**2 + p.k_s.values * p.k_theta.values) * c.r**2
    val, err = simpson_with_error(f, c.h)
    rhs = c.s_max - c.r_prime[-1] * c.r[-1]
    # the RK4 meridian carries its own O(h^4) error on top of the rule's
    assert abs(val - rhs) <= err + 1e-9


def test_mirror_flips_z():
    p = CurvatureProfile.gaussian_bump(0.4, 1.0)
    a = build_meridian(p, 20.0, 0.01)
    b = build_meridian(p.mirrored(), 20.0, 0.01)
    assert np.allclose(a.r, b.r, atol=1e-14) and np.allclose(a.z, -b.z, atol=1e-14)
    t = table_profile()
    assert np.allclose(t.mirrored().k_s(np.linspace(0, 3, 7)), -t.k_s(np.linspace(0, 3, 7)))


def test_closed_form_turning_angle_matches_rk4():
    p = CurvatureProfile.gaussian_bump(0.5, 2.0)
    c = build_meridian(p, 20.0, 0.01)
    assert np.max(np.abs(c.b - p.turning_angle(c.s))) < 1e-10


def test_axis_hit_raises():
    # constant curvature 1 closes the meridian into a circle
    p = CurvatureProfile.from_function(lambda s: np.ones_like(np.asarray(s, dtype=float)), name="sphere")
    with pytest.raises(MeridianError):
        build_meridian(p, 4.0, 0.01)


def test_table_from_csv_roundtrip(tmp_path):
    s = np.linspace(0.0, 10.0, 201)
    k = 0.2 * np.exp(-s * s)
    path = tmp_path / "k.csv"
    path.write_text("s,k\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(s, k)))
    p = CurvatureProfile.from_csv(path)
    assert p.family == "table" and p.params["s_max"] == 10.0
    assert np.allclose(p.k_s(s), k, atol=1e-15)
    with pytest.raises(ValueError):
        p.k_s(np.array([11.0]))
    empty = tmp_path / "e.csv"
    empty.write_text("s,k\n")
    with pytest.raises(ValueError):
        CurvatureProfile.from_csv(empty)


def test_table_validation():
    with pytest.raises(ValueError):
        CurvatureProfile.from_table([0.5, 1, 2, 3], [0, 0, 0, 0])
    with pytest.raises(ValueError):
        CurvatureProfile.from_table([0, 1, 1, 3], [0, 0, 0, 0])


def test_flatness_verdicts():
    c = build_meridian(CurvatureProfile.gaussian_bump(0.3, 1.0), 100.0, 0.01)
    assert asymptotic_flatness(principal_curvatures(c)).verdict == "pass"
    # a profile with net turning ends on a cone: k_theta ~ 1/s is too large
    cone = CurvatureProfile.from_function(lambda s: np.exp(-np.asarray(s) ** 2), name="cone")
    c = build_meridian(cone, 100.0, 0.01)
    rep = asymptotic_flatness(principal_curvatures(c))
    assert rep.verdict == "fail" and 0.9 < rep.decay_rate < 1.1


def test_meridian_csv_thinning(tmp_path):
    c = build_meridian(CurvatureProfile.gaussian_bump(0.3, 1.0), 50.0, 0.001)
    path = tmp_path / "m.csv"
    write_meridian_csv(path, c, principal_curvatures(c), max_rows=1001)
    rows = path.read_text().splitlines()
    assert rows[0].startswith("s,")
    assert len(rows) - 1 <= 1001
    assert float(rows[-1].split(",")[0]) == pytest.approx(50.0)


@given(
    st.lists(st.floats(-3.0, 3.0), min_size=5, max_size=60),
    st.floats(1e-3, 0.5),
)
def test_rk4_kernel_parity(vals, h):
    k = np.asarray(vals + vals[-1:] * (1 - len(vals) % 2), dtype=float)
    for x, y in zip(_meridian_rk4_numba(k, h), _meridian_rk4_numpy(k, h)):
        # cumsum and the loop associate differently
        assert np.allclose(x, y, rtol=1e-12, atol=1e-13)
