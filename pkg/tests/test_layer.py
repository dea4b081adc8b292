import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from layerspectra.errors import AdmissibilityError
from layerspectra.kernels import (
    _pairs_hit_numba,
    _pairs_hit_numpy,
    first_crossing_bruteforce,
    segment_pairs_hit,
)
from layerspectra.layer import (
    _candidate_pairs,
    layer_svg,
    make_layer,
    metric_bounds,
    metric_diagonal,
    offset_boundary,
    self_intersection_certificate,
    validate,
    volume_weight,
    weingarten_det,
    write_layer_report,
)
from layerspectra.meridian import CurvatureProfile


def hairpin(turn):
    # straight run, circular turn of radius 1/2, straight return
    def k(s):
        s = np.asarray(s, dtype=float)
        return np.where((s >= 3.0) & (s <= 3.0 + turn / 2.0), 2.0, 0.0)

    return CurvatureProfile.from_function(k, name="hairpin")


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_flat_layer_validates(a):
    lay = make_layer(CurvatureProfile.flat(), a, s_max=20.0, h=0.05)
    rep = validate(lay)
    assert rep.admissible
    assert (rep.a1.verdict, rep.a2, rep.a3.verdict) == ("pass", True, "pass")
    assert metric_bounds(lay) == (1.0, 1.0)


def test_weingarten_det_expansion():
    ks, kt, u = 0.3, -0.2, 0.7
    assert weingarten_det(ks, kt, u) == pytest.approx((1 - u * ks) * (1 - u * kt) ** 2)
    assert weingarten_det(ks, kt, u, m=3) == pytest.approx((1 - u * ks) * (1 - u * kt))


def test_metric_bounds_bracket_weight(bump_layer):
    cm, cp = metric_bounds(bump_layer)
    s = np.linspace(0.0, 10.0, 201)
    for u in np.linspace(-bump_layer.a, bump_layer.a, 7):
        gss, gang, _ = metric_diagonal(bump_layer, s, u)
        r = bump_layer.curve.sample(s)[0]
        assert np.all(gss >= cm - 1e-12) and np.all(gss <= cp + 1e-12)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(r > 0, gang / np.maximum(r, 1e-300) ** 2, 1.0)
        assert np.all(ratio >= cm - 1e-9) and np.all(ratio <= cp + 1e-9)
        assert np.all(volume_weight(bump_layer, s[1:], u) > 0)


def test_a2_fails_beyond_rho():
    p = CurvatureProfile.gaussian_bump(0.5, 1.0)
    lay = make_layer(p, 0.5, s_max=50.0)
    big = make_layer(p, 1.2 * lay.rho_m, s_max=50.0)
    rep = validate(big)
    assert not rep.a2 and not rep.admissible
    with pytest.raises(AdmissibilityError):
        metric_bounds(big)
    # folding makes A1 fail as well
    assert rep.a1.verdict == "fail"


def test_hairpin_boundary_crossing_found():
    prof = hairpin(math.pi + 0.6)
    lay = make_layer(prof, 0.2, s_max=3.0 + (math.pi + 0.6) / 2 + 2.0, h=0.01)
    rep = self_intersection_certificate(lay)
    assert rep.verdict == "fail" and "cross" in rep.reason
    loop, _ = offset_boundary(lay)
    i, j = first_crossing_bruteforce(loop[:-1].copy(), loop[1:].copy(), 1)
    assert i >= 0 and j >= 0


def test_hairpin_without_crossing_passes():
    # a U-turn of radius 1/2 leaves a gap of 1 between the strands
    prof = hairpin(math.pi)
    lay = make_layer(prof, 0.4, s_max=3.0 + math.pi / 2 + 2.0, h=0.01)
    assert self_intersection_certificate(lay).verdict == "pass"


def test_coarse_resolution_is_inconclusive():
    lay = make_layer(hairpin(math.pi), 0.4, s_max=7.0, h=0.01)
    rep = self_intersection_certificate(lay, resolution=0.2)
    assert rep.verdict == "inconclusive"


@given(st.integers(0, 2**31 - 1), st.integers(6, 40))
def test_hashed_candidates_agree_with_bruteforce(seed, n):
    rng = np.random.default_rng(seed)
    pts = np.cumsum(rng.normal(size=(n + 1, 2)), axis=0)
    p, q = pts[:-1].copy(), pts[1:].copy()
    seg = np.hypot(*(q - p).T)
    ii, jj = _candidate_pairs(p, q, 2.0 * seg.max())
    keep = np.abs(ii - jj) > 1
    hashed = bool(segment_pairs_hit(p, q, ii[keep], jj[keep]).any()) if keep.any() else False
    brute = first_crossing_bruteforce(p, q, 1)[0] >= 0
    assert hashed == brute


@given(st.integers(0, 2**31 - 1))
def test_segment_kernel_parity(seed):
    rng = np.random.default_rng(seed)
    p, q = rng.normal(size=(30, 2)), rng.normal(size=(30, 2))
    ii, jj = np.triu_indices(30, 2)
    ii, jj = ii.astype(np.int64), jj.astype(np.int64)
    assert np.array_equal(_pairs_hit_numba(p, q, ii, jj), _pairs_hit_numpy(p, q, ii, jj))


def test_report_and_svg(tmp_path, bump_layer):
    rep = validate(bump_layer)
    path = tmp_path / "layer_report.json"
    write_layer_report(path, rep)
    d = json.loads(path.read_text())
    assert d["A1"]["verdict"] == "pass" and d["A2"]["verdict"] == "pass"
    svg = layer_svg(bump_layer)
    assert svg.startswith("<svg") or svg.startswith("<?xml")
    assert layer_svg(bump_layer) == svg


def test_invalid_half_width():
    with pytest.raises(ValueError):
        make_layer(CurvatureProfile.flat(), 0.0, s_max=5.0)
