"""Ground states of the layer by direct discretisation of its Dirichlet form.

The form of a mode ``psi(s, u) Y_l`` on the rotational layer (m = 4) is

    W2 int int [psi_s^2 (1-u k_theta)^2 r^2 / (1-u k_s)
                + psi_u^2 w + mu_l psi^2 (1-u k_s)] ds du,

with w = (1-u k_s)(1-u k_theta)^2 r^2 and mu_l = l(l+1); the mass is
W2 int int psi^2 w. Both are discretised on a uniform tensor grid as a
face-weighted finite-volume stencil: one-point (midpoint) weights on the
faces, Simpson cell integrals for the node terms so that the half cell at
the pole, where w vanishes, is still weighted correctly.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .constants import W2, threshold
from .errors import AdmissibilityError, EigensolverError, InconclusiveError
from .kernels import face_triplets


@dataclass(frozen=True)
class StripMesh:
    """Uniform grid on [0, S] x [-a, a] with Dirichlet sides u = +-a and s = S."""

    s_max: float
    a: float
    n_s: int
    n_u: int

    def __post_init__(self):
        if self.n_s < 8 or self.n_u < 8:
            raise ValueError("n_s and n_u must be at least 8")
        if not (self.s_max > 0 and self.a > 0):
            raise ValueError("s_max and a must be positive")

    @classmethod
    def from_spacing(cls, s_max, a, h_s, n_u):
        return cls(float(s_max), float(a), max(8, int(round(s_max / h_s)) + 1), int(n_u))

    @property
    def h_s(self):
        return self.s_max / (self.n_s - 1)

    @property
    def h_u(self):
        return 2.0 * self.a / (self.n_u - 1)

    @property
    def s(self):
        return np.linspace(0.0, self.s_max, self.n_s)

    @property
    def u(self):
        return np.linspace(-self.a, self.a, self.n_u)

    @property
    def mesh_id(self):
        return f"S{self.s_max:g}_ns{self.n_s}_nu{self.n_u}"

    def free_mask(self, l=0):
        mask = np.ones((self.n_s, self.n_u), dtype=bool)
        mask[:, 0] = mask[:, -1] = False
        mask[-1, :] = False
        if l >= 1:
            mask[0, :] = False
        return mask


@dataclass(frozen=True, eq=False)
class DiscreteForm:
    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    l: int = 0
    mesh: StripMesh | None = None
    index: np.ndarray | None = None

    @property
    def mu(self):
        return self.l * (self.l + 1)

    @property
    def size(self):
        return self.stiffness.shape[0]

    def embed(self, x):
        """Scatter a vector of unknowns back onto the full (n_s, n_u) grid."""
        full = np.zeros(self.index.shape)
        full[self.index >= 0] = x[self.index[self.index >= 0]]
        return full

    def restrict(self, grid_values):
        """Unknown vector from values on the full grid (Dirichlet entries dropped)."""
        x = np.empty(self.size)
        m = self.index >= 0
        x[self.index[m]] = grid_values[m]
        return x


def _geometry(layer, t):
    c = layer.curve
    t = np.clip(t, 0.0, c.s_max)
    r, _, ks, kt = c.sample(t)
    return r, ks, kt


def _cell_integral(layer, mesh, u, fn):
    """Simpson integral of fn(r, ks, kt, u) over each node's s-cell, for each u."""
    s, h = mesh.s, mesh.h_s
    lo = np.maximum(s - 0.5 * h, 0.0)
    hi = np.minimum(s + 0.5 * h, mesh.s_max)
    mid = 0.5 * (lo + hi)
    width = hi - lo
    out = 0.0
    for pts, wt in ((lo, 1.0), (mid, 4.0), (hi, 1.0)):
        r, ks, kt = _geometry(layer, pts)
        out = out + wt * fn(r[:, None], ks[:, None], kt[:, None], u[None, :])
    return out * (width / 6.0)[:, None]


def assemble(layer, mesh, l=0):
    """Stiffness and lumped mass for angular mode ``l`` with Dirichlet rows removed."""
    if layer.m != 4:
        raise ValueError("the eigensolver is implemented for m = 4")
    if mesh.s_max > layer.curve.s_max * (1 + 1e-12):
        raise ValueError("mesh extends beyond the meridian window")
    if abs(mesh.a - layer.a) > 1e-12 * layer.a:
        raise ValueError("mesh half-width differs from the layer's")
    ns, nu, hs, hu = mesh.n_s, mesh.n_u, mesh.h_s, mesh.h_u
    s, u = mesh.s, mesh.u
    mu = l * (l + 1)

    def weight(r, ks, kt, uu):
        return (1.0 - uu * ks) * (1.0 - uu * kt) ** 2 * r * r

    # admissibility of the sampled weight (A2 in disguise)
    r_n, ks_n, kt_n = _geometry(layer, s)
    if np.any(1.0 - np.abs(u).max() * np.maximum(np.abs(ks_n), np.abs(kt_n)) <= 0.0):
        raise AdmissibilityError("nonpositive volume weight on the mesh: a >= local curvature radius")

    mask = mesh.free_mask(l)
    index = -np.ones((ns, nu), dtype=np.int64)
    index[mask] = np.arange(mask.sum())
    n = int(mask.sum())

    # s-faces at s_{i+1/2}, u_j
    sh = 0.5 * (s[:-1] + s[1:])
    r, ks, kt = _geometry(layer, sh)
    A = (1.0 - u[None, :] * kt[:, None]) ** 2 * (r * r)[:, None] / (1.0 - u[None, :] * ks[:, None])
    ws = W2 * hu * A / hs
    ps, qs = index[:-1, :].ravel(), index[1:, :].ravel()

    # u-faces at s_i, u_{j+1/2}
    uh = 0.5 * (u[:-1] + u[1:])
    wu = W2 * _cell_integral(layer, mesh, uh, weight) / hu
    pu, qu = index[:, :-1].ravel(), index[:, 1:].ravel()

    p = np.concatenate([ps, pu])
    q = np.concatenate([qs, qu])
    wt = np.concatenate([ws.ravel(), wu.ravel()])
    rows, cols, vals, diag = face_triplets(p, q, wt, n)

    mass_grid = W2 * hu * _cell_integral(layer, mesh, u, weight)
    mass = mass_grid[mask]
    if mu:
        pot = W2 * hu * mu * _cell_integral(layer, mesh, u, lambda r, ks, kt, uu: (1.0 - uu * ks) + 0.0 * r)
        diag = diag + pot[mask]
    if np.any(mass <= 0):
        raise AdmissibilityError("nonpositive mass entry")
    K = sp.coo_matrix(
        (np.concatenate([vals, diag]), (np.concatenate([rows, np.arange(n)]), np.concatenate([cols, np.arange(n)]))),
        shape=(n, n),
    ).tocsr()
    M = sp.diags(mass).tocsr()
    return DiscreteForm(K, M, int(l), mesh, index)


# ------------------------------------------------------------------ solve


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    mesh_id: str = ""
    l: int = 0
    shift: float = 0.0
    flags: list = field(default_factory=list)


def _rayleigh_ritz(K, M, X):
    Kr = X.T @ (K @ X)
    Mr = X.T @ (M @ X)
    Kr = 0.5 * (Kr + Kr.T)
    Mr = 0.5 * (Mr + Mr.T)
    lam, Y = scipy.linalg.eigh(Kr, Mr)
    return lam, X @ Y


def smallest_eigs(form, count=3, tol=1e-12, shift=None, max_retries=3):
    """Smallest generalised eigenpairs K x = lam M x by shift-invert Lanczos.

    The start vector is fixed (all ones) so runs are reproducible. The
    Lanczos vectors are polished by one Rayleigh-Ritz step, which also
    makes them M-orthonormal. Residuals are ||K x - lam M x|| in the
    M^{-1} norm divided by lam.
    """
    K, M = form.stiffness, form.mass
    n = K.shape[0]
    count = min(count, n - 1)
    flags = []
    if n <= 64:
        lam, X = scipy.linalg.eigh(K.toarray(), M.toarray())
        lam, X = lam[:count], X[:, :count]
        sigma = 0.0
    else:
        sigma = 0.0 if shift is None else float(shift)
        v0 = np.ones(n)
        for attempt in range(max_retries + 1):
            try:
                lam, X = eigsh(K, k=count, M=M, sigma=sigma, which="LM", v0=v0, tol=tol)
                break
            except (RuntimeError, ArithmeticError) as exc:
                flags.append(f"shift {sigma:g} failed: {exc}")
                # move the shift below the spectrum and try again
                sigma = -abs(sigma) * 2.0 - 1e-3 * (1 + attempt)
        else:
            raise EigensolverError("shift-invert failed after retries: " + "; ".join(flags))
        lam, X = _rayleigh_ritz(K, M, X)
    order = np.argsort(lam)
    lam, X = lam[order], X[:, order]
    # fix the sign convention so vectors are reproducible
    for k in range(X.shape[1]):
        j = np.argmax(np.abs(X[:, k]))
        if X[j, k] < 0:
            X[:, k] = -X[:, k]
    minv = 1.0 / M.diagonal() if sp.issparse(M) else 1.0 / np.diag(M)
    R = K @ X - (M @ X) * lam[None, :]
    res = np.sqrt(np.sum(R * R * minv[:, None], axis=0)) / np.maximum(np.abs(lam), 1e-300)
    mesh_id = form.mesh.mesh_id if form.mesh is not None else ""
    return Spectrum(lam, X, res, mesh_id, form.l, sigma, flags)


def rayleigh_quotient(form, x):
    return float(x @ (form.stiffness @ x)) / float(x @ (form.mass @ x))


def form_energies(form, fn):
    """(psi K psi, psi M psi) for ``fn(s, u)`` sampled on the mesh nodes."""
    S, U = np.meshgrid(form.mesh.s, form.mesh.u, indexing="ij")
    x = form.restrict(fn(S, U))
    return float(x @ (form.stiffness @ x)), float(x @ (form.mass @ x))


# ---------------------------------------------------------- convergence


@dataclass
class ConvergenceStudy:
    a: float
    l: int
    threshold: float
    ladder: list
    order: float
    lambda_upper: np.ndarray
    uncertainty_h: np.ndarray
    lambda_inf: np.ndarray
    uncertainty: np.ndarray
    flags: list = field(default_factory=list)

    @property
    def lambda1(self):
        return float(self.lambda_upper[0])

    def to_dict(self):
        def lst(v):
            return [float(x) for x in np.atleast_1d(v)]

        return {
            "a": self.a,
            "l": self.l,
            "threshold": self.threshold,
            "order": self.order,
            "lambda_upper": lst(self.lambda_upper),
            "uncertainty_h": lst(self.uncertainty_h),
            "lambda_inf": lst(self.lambda_inf),
            "uncertainty": lst(self.uncertainty),
            "ladder": self.ladder,
            "flags": list(self.flags),
        }


def _richardson(values, ratio=2.0, order_hint=2.0):
    """Extrapolate a refinement sequence; returns (value, error, observed order, monotone)."""
    v = np.asarray(values, dtype=float)
    d1, d2 = v[-2] - v[-3], v[-1] - v[-2]
    monotone = bool(np.all(d1 * d2 > 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        p_obs = np.log(np.abs(d1 / d2)) / math.log(ratio)
    p = np.where(monotone & np.isfinite(p_obs) & (p_obs > 0.5), p_obs, order_hint)
    corr = d2 / (ratio**p - 1.0)
    return v[-1] + corr, np.abs(corr), p_obs, monotone


def default_ladder(layer, n_u0=8, levels=3):
    """(h_s, n_u) triples refined by 2; h_s tracks min(h_u, curvature scale / 10)."""
    from .certifier import curvature_radius

    hu0 = 2.0 * layer.a / (n_u0 - 1)
    R = curvature_radius(layer.pair)
    hs0 = hu0 if R == 0 else min(hu0, R / 10.0)
    return [(hs0 / 2**k, (n_u0 - 1) * 2**k + 1) for k in range(levels)]


def default_truncations(layer):
    from .certifier import curvature_radius

    S = max(20.0 * layer.a, 10.0 * curvature_radius(layer.pair), 10.0)
    S = min(S, layer.curve.s_max / 2.0)
    return [S, 2.0 * S]


def convergence_study(layer, ladder=None, truncations=None, l=0, count=3, tol=1e-12):
    """Eigenvalues over a mesh ladder (Richardson in h) and an S_max ladder.

    ``lambda_upper`` is the h-extrapolated value at the largest S_max; the
    Dirichlet cut makes it an upper bound up to ``uncertainty_h``.
    ``lambda_inf`` further extrapolates in S_max assuming the 1/S^2 approach
    of a threshold-type state; ``uncertainty`` combines both corrections.
    """
    ladder = ladder or default_ladder(layer)
    truncations = truncations or default_truncations(layer)
    if len(ladder) < 3 or len(truncations) < 2:
        raise ValueError("need at least 3 meshes and 2 truncations")
    rows, per_S, flags, orders = [], [], [], []
    for S in truncations:
        vals = []
        for hs, nu in ladder:
            mesh = StripMesh.from_spacing(S, layer.a, hs, nu)
            form = assemble(layer, mesh, l)
            spec = smallest_eigs(form, count, tol)
            vals.append(spec.eigenvalues)
            flags.extend(spec.flags)
            rows.append(
                {
                    "S": float(S),
                    "h_s": mesh.h_s,
                    "h_u": mesh.h_u,
                    "n_s": mesh.n_s,
                    "n_u": mesh.n_u,
                    "mesh_id": mesh.mesh_id,
                    "lambda": [float(x) for x in spec.eigenvalues],
                    "residual": [float(x) for x in spec.residuals],
                }
            )
        lam, err, p_obs, mono = _richardson(np.array(vals))
        if not mono:
            flags.append(f"non-monotone h-convergence at S={S:g}")
        orders.append(float(p_obs[0]))
        per_S.append((float(S), lam, err))
    (S1, lam1, _), (S2, lam2, err2) = per_S[-2], per_S[-1]
    q = (S2 / S1) ** 2
    lam_inf = lam2 + (lam2 - lam1) / (q - 1.0)
    unc = err2 + np.abs(lam_inf - lam2)
    if lam2[0] > lam1[0] + err2[0] + per_S[-2][2][0]:
        flags.append("lambda_1 grew with S_max beyond the discretisation error")
    return ConvergenceStudy(
        a=float(layer.a),
        l=int(l),
        threshold=threshold(layer.a),
        ladder=rows,
        order=orders[-1],
        lambda_upper=lam2,
        uncertainty_h=err2,
        lambda_inf=lam_inf,
        uncertainty=unc,
        flags=flags,
    )


def bound_state_count(study, a, margin):
    """Eigenvalues at or below (pi/2a)^2 - margin, using the truncation upper bounds.

    Raises :class:`InconclusiveError` when ``margin`` does not exceed the
    discretisation uncertainty of every eigenvalue it could count.
    """
    thr = threshold(a)
    lam = np.atleast_1d(study.lambda_upper)
    unc = np.atleast_1d(study.uncertainty_h)
    near = np.abs(lam - (thr - margin)) <= unc
    if margin < float(np.max(unc)) or np.any(near):
        raise InconclusiveError(f"margin {margin:.3e} does not exceed the numerical uncertainty {float(np.max(unc)):.3e}")
    return int(np.sum(lam <= thr - margin))


def write_eigs_csv(path, study):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["l", "index", "lambda", "residual", "mesh_id"])
        for row in study.ladder:
            for k, (lam, res) in enumerate(zip(row["lambda"], row["residual"])):
                w.writerow([study.l, k, f"{lam:.15e}", f"{res:.3e}", row["mesh_id"]])


def write_spectrum_json(path, study):
    with open(path, "w") as fh:
        json.dump(study.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
