import json
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from layerspectra.certifier import SampledTrial, _Grid, q3
from layerspectra.constants import W2, threshold
from layerspectra.eigsolve import (
    StripMesh,
    assemble,
    bound_state_count,
    convergence_study,
    default_ladder,
    form_energies,
    rayleigh_quotient,
    smallest_eigs,
    write_eigs_csv,
    write_spectrum_json,
)
from layerspectra.errors import AdmissibilityError, InconclusiveError
from layerspectra.kernels import _faces_numba, _faces_numpy
from layerspectra.layer import make_layer
from layerspectra.meridian import CurvatureProfile
from layerspectra.numerics import SampledFunction


def test_dirichlet_chain_spectrum():
    # nodes 0..n-1 with Dirichlet ends: faces (-1,0), (0,1), ..., (n-1,-1)
    n = 30
    p = np.arange(-1, n, dtype=np.int64)
    q = np.arange(0, n + 1, dtype=np.int64)
    q[-1] = -1
    rows, cols, vals, diag = _faces_numba(p, q, np.ones(n + 1), n)
    K = np.zeros((n, n))
    K[rows, cols] = vals
    K[np.arange(n), np.arange(n)] = diag
    k = np.arange(1, n + 1)
    exact = 4.0 * np.sin(k * math.pi / (2 * (n + 1))) ** 2
    assert np.allclose(np.linalg.eigvalsh(K), exact, atol=1e-12)


@given(st.integers(0, 2**31 - 1), st.integers(2, 40))
def test_face_kernel_parity(seed, n):
    rng = np.random.default_rng(seed)
    m = 3 * n
    p = rng.integers(-1, n, m).astype(np.int64)
    q = rng.integers(-1, n, m).astype(np.int64)
    wt = rng.random(m)
    a, b = _faces_numba(p, q, wt, n), _faces_numpy(p, q, wt, n)
    for x, y in zip(a[:3], b[:3]):
        assert np.array_equal(x, y)
    assert np.allclose(a[3], b[3], rtol=1e-14, atol=1e-15)


def loop_assembly_flat(a, S, n_s, n_u):
    """Dense K, M for the flat layer (r = s) from explicit per-face sums."""
    hs, hu = S / (n_s - 1), 2 * a / (n_u - 1)
    s = np.linspace(0, S, n_s)
    idx = -np.ones((n_s, n_u), dtype=int)
    k = 0
    for i in range(n_s - 1):
        for j in range(1, n_u - 1):
            idx[i, j] = k
            k += 1
    K, M = np.zeros((k, k)), np.zeros((k, k))

    def cell_r2(i):
        lo, hi = max(s[i] - hs / 2, 0.0), min(s[i] + hs / 2, S)
        return (hi**3 - lo**3) / 3.0

    def face(pi, qi, w):
        for x in (pi, qi):
            if x >= 0:
                K[x, x] += w
        if pi >= 0 and qi >= 0:
            K[pi, qi] -= w
            K[qi, pi] -= w

    for i in range(n_s - 1):
        for j in range(n_u):
            mid = 0.5 * (s[i] + s[i + 1])
            face(idx[i, j], idx[i + 1, j], W2 * hu * mid * mid / hs)
    for i in range(n_s):
        for j in range(n_u - 1):
            face(idx[i, j], idx[i, j + 1], W2 * cell_r2(i) / hu)
        for j in range(n_u):
            if idx[i, j] >= 0:
                M[idx[i, j], idx[i, j]] = W2 * hu * cell_r2(i)
    return K, M


def test_flat_assembly_matches_loop_oracle():
    lay = make_layer(CurvatureProfile.flat(), 1.0, s_max=10.0, h=0.01)
    mesh = StripMesh(10.0, 1.0, 9, 8)
    form = assemble(lay, mesh)
    K, M = loop_assembly_flat(1.0, 10.0, 9, 8)
    assert form.size == K.shape[0] <= 64
    assert np.allclose(form.stiffness.toarray(), K, rtol=1e-12, atol=1e-10)
    assert np.allclose(form.mass.toarray(), M, rtol=1e-12, atol=1e-10)
    # the dense path reproduces scipy's generalised eigensolver
    spec = smallest_eigs(form, 3)
    ref = scipy.linalg.eigh(K, M, eigvals_only=True)[:3]
    assert np.allclose(spec.eigenvalues, ref, rtol=1e-12)


@pytest.fixture(scope="module")
def bump_form():
    lay = make_layer(CurvatureProfile.gaussian_bump(0.5, 1.0), 0.5, s_max=40.0, h=0.01)
    return lay, assemble(lay, StripMesh(12.0, 0.5, 97, 15))


def test_sparse_matches_dense(bump_form):
    _, form = bump_form
    spec = smallest_eigs(form, 4)
    ref = scipy.linalg.eigh(form.stiffness.toarray(), form.mass.toarray(), eigvals_only=True)[:4]
    assert np.allclose(spec.eigenvalues, ref, rtol=1e-10)
    assert np.all(spec.residuals < 1e-8)


def test_eigenvectors_m_orthonormal_and_symmetric(bump_form):
    _, form = bump_form
    K = form.stiffness
    assert abs(K - K.T).max() == 0.0
    spec = smallest_eigs(form, 4)
    X = spec.vectors
    G = X.T @ (form.mass @ X)
    assert np.allclose(G, np.eye(4), atol=1e-10)
    for k in range(4):
        assert rayleigh_quotient(form, X[:, k]) == pytest.approx(spec.eigenvalues[k], rel=1e-10)


@settings(max_examples=20)
@given(st.integers(0, 2**31 - 1))
def test_rayleigh_quotient_bounds_ground_state(bump_form, seed):
    _, form = bump_form
    lam1 = smallest_eigs(form, 1).eigenvalues[0]
    x = np.random.default_rng(seed).normal(size=form.size)
    assert rayleigh_quotient(form, x) >= lam1 * (1 - 1e-12)


def test_reproducible_solve(bump_form):
    _, form = bump_form
    a, b = smallest_eigs(form, 3), smallest_eigs(form, 3)
    assert np.array_equal(a.eigenvalues, b.eigenvalues) and np.array_equal(a.vectors, b.vectors)


def test_higher_angular_mode_is_higher(bump_form):
    lay, form = bump_form
    f1 = assemble(lay, form.mesh, l=1)
    assert smallest_eigs(f1, 1).eigenvalues[0] > smallest_eigs(form, 1).eigenvalues[0]


def test_domain_monotonicity(bump_form):
    # nested meshes with the same spacing: the longer strip's minimum is lower
    lay, _ = bump_form
    lam = [smallest_eigs(assemble(lay, StripMesh.from_spacing(S, 0.5, 0.125, 15)), 1).eigenvalues[0] for S in (6.0, 12.0, 24.0)]
    # the 3-point stencil's transverse mode, not (pi/2a)^2, is the discrete floor
    hu = 1.0 / 14
    floor = 4.0 / hu**2 * math.sin(math.pi * hu / 2.0) ** 2
    assert lam[0] > lam[1] > lam[2] > floor


def test_discrete_energy_matches_certifier_form(bump_form):
    # the same quadratic form by two discretisations
    lay, _ = bump_form
    mesh = StripMesh.from_spacing(20.0, 0.5, 0.025, 41)
    form = assemble(lay, mesh)
    g = _Grid(lay)

    def phi(s):
        return np.exp(-((s / 4.0) ** 2))

    kk, mm = form_energies(form, lambda S, U: phi(S) * g.chi(U))
    disc = kk - g.k1**2 * mm
    s = lay.curve.s
    trial = SampledTrial(SampledFunction(s, phi(s)))
    row = q3(lay, trial, g)
    assert disc == pytest.approx(row.direct, abs=2e-3 * row.scale)


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_flat_threshold_recovered(a):
    lay = make_layer(CurvatureProfile.flat(), a, s_max=200.0 * a, h=0.01 * a)
    st_ = convergence_study(lay, count=1)
    thr = threshold(a)
    assert abs(st_.lambda_inf[0] - thr) <= st_.uncertainty[0]
    assert st_.uncertainty[0] <= 5e-3 * thr
    assert st_.lambda_upper[0] > thr - st_.uncertainty_h[0]
    assert 1.7 < st_.order < 2.3


def test_bound_state_count_guards(bump_form):
    lay, _ = bump_form
    st_ = convergence_study(lay, default_ladder(lay, 8, 3), [6.0, 12.0], count=2)
    with pytest.raises(InconclusiveError):
        bound_state_count(st_, lay.a, 0.0)
    margin = 2.0 * float(np.max(st_.uncertainty_h))
    assert bound_state_count(st_, lay.a, margin) == 0


def test_outputs(tmp_path, bump_form):
    lay, _ = bump_form
    st_ = convergence_study(lay, default_ladder(lay, 8, 3), [6.0, 12.0], count=2)
    write_eigs_csv(tmp_path / "eigs.csv", st_)
    lines = (tmp_path / "eigs.csv").read_text().splitlines()
    assert lines[0] == "l,index,lambda,residual,mesh_id" and len(lines) == 1 + 2 * 6
    write_spectrum_json(tmp_path / "spectrum.json", st_)
    d = json.loads((tmp_path / "spectrum.json").read_text())
    assert d["threshold"] == pytest.approx(threshold(lay.a))


def test_assembly_guards(bump_form):
    lay, _ = bump_form
    with pytest.raises(ValueError):
        assemble(lay, StripMesh(100.0, 0.5, 16, 8))
    with pytest.raises(ValueError):
        assemble(lay, StripMesh(10.0, 0.4, 16, 8))
    thick = make_layer(lay.profile, 1.5 * lay.rho_m, s_max=20.0)
    with pytest.raises(AdmissibilityError):
        assemble(thick, StripMesh(10.0, thick.a, 16, 8))
    with pytest.raises(ValueError):
        StripMesh(10.0, 1.0, 4, 8)
