"""Variational bound-state certificates from the cutoff trial family.

A trial function Psi = phi(s) chi(u) with phi = 1 near the pole and a
Macdonald-function cutoff beyond s0 is inserted into

    Q3[Psi] = Q[Psi] - (pi / 2a)^2 ||Psi||^2,

where Q is the layer's Dirichlet form. Q3 < 0 for any admissible trial
proves the bottom of the spectrum lies below the essential threshold. For
m = 4 the form splits exactly into a tangential energy and a curvature
term,

    Q3 = W2 int (phi')^2 I(s) r^2 ds + W2 int c2 phi^2 r^2 ds,
    I(s) = int chi^2 (1 - u k_theta)^2 / (1 - u k_s) du,

with c2 = 2 k_s k_theta + k_theta^2. Every row is also evaluated by a
direct quadrature of the full form on an (s, u) product grid; the two
must agree or :class:`~layerspectra.errors.ConsistencyError` is raised.

Beyond the meridian window the hypersurface is continued as its
asymptotic hyperplane (r grows linearly, curvatures vanish); the
tangential tail is then integrated in closed form in t = sigma s.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .constants import W2
from .errors import ConsistencyError, NoBumpError
from .invariants import K_total, NOISE, far_field_constants
from .numerics import SampledFunction, fit_tail, gauss_legendre, integrate, simpson_with_error
from .numerics.bessel import bessel_k01

DEFAULT_SIGMAS = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4)
# agreement demanded between decomposition and direct quadrature, relative
# to the size of the terms that cancel in the full form
CONSISTENCY_RTOL = 1e-8


# ------------------------------------------------------------ trial family


class PhiUnderflowWarning(RuntimeWarning):
    """The cutoff decayed below the smallest double inside the evaluated range."""


def phi_sigma(s, sigma, s0):
    """Cutoff 1 on (0, s0], K0(sigma s) / K0(sigma s0) beyond.

    Computed from exponentially scaled Bessel values so the ratio stays
    finite far out; entries that underflow are returned as 0 with a
    :class:`PhiUnderflowWarning`.
    """
    if sigma <= 0 or s0 <= 0:
        raise ValueError("sigma and s0 must be positive")
    s = np.asarray(s, dtype=float)
    out = np.ones_like(s)
    far = s > s0
    if np.any(far):
        k0_ref = bessel_k01(sigma * s0, scaled=True)[0]
        k0 = bessel_k01(sigma * s[far], scaled=True)[0]
        with np.errstate(under="ignore"):
            vals = k0 / k0_ref * np.exp(-sigma * (s[far] - s0))
        if np.any(vals == 0.0):
            warnings.warn("phi_sigma underflowed to 0 in the deep tail", PhiUnderflowWarning, stacklevel=2)
        out[far] = vals
    return out if out.ndim else float(out)


def phi_sigma_derivative(s, sigma, s0):
    """d phi_sigma / ds; zero on (0, s0), -sigma K1(sigma s) / K0(sigma s0) beyond."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    far = s > s0
    if np.any(far):
        k0_ref = bessel_k01(sigma * s0, scaled=True)[0]
        k1 = bessel_k01(sigma * s[far], scaled=True)[1]
        with np.errstate(under="ignore"):
            out[far] = -sigma * k1 / k0_ref * np.exp(-sigma * (s[far] - s0))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CutoffTrial:
    """phi_sigma as a trial profile with its exact derivative."""

    sigma: float
    s0: float

    @property
    def kink(self):
        return self.s0

    def value(self, s):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PhiUnderflowWarning)
            return phi_sigma(s, self.sigma, self.s0)

    def deriv(self, s):
        return phi_sigma_derivative(s, self.sigma, self.s0)

    def kink_deriv(self):
        """Right-hand limit of phi' at s0 (``deriv`` returns the left one, 0)."""
        k0, k1 = bessel_k01(self.sigma * self.s0, scaled=True)
        return -self.sigma * k1 / k0

    def tangential_tail(self, S, r_S, rp_S):
        """W2 int_S^inf (phi')^2 (r_S + rp_S (s - S))^2 ds for the straight continuation."""
        sig = self.sigma
        k0_ref = bessel_k01(sig * self.s0, scaled=True)[0]
        t0 = sig * S

        def f(t):
            k1 = bessel_k01(t, scaled=True)[1]
            s = t / sig
            rr = r_S + rp_S * (s - S)
            with np.errstate(under="ignore"):
                return sig * (k1 / k0_ref) ** 2 * np.exp(-2.0 * (t - t0) - 2.0 * sig * (S - self.s0)) * rr * rr

        val, err = integrate(f, (t0, t0 + 40.0), tol=1e-12, abs_floor=1e-300)
        return W2 * val, W2 * err


@dataclass(frozen=True)
class SampledTrial:
    """A sampled profile, continued by its last value beyond its domain."""

    phi: SampledFunction
    kink = None

    def kink_deriv(self):
        return None

    def value(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.phi.domain
        return np.where(s <= hi, self.phi(np.clip(s, lo, hi)), self.phi.values[-1])

    def deriv(self, s):
        s = np.asarray(s, dtype=float)
        lo, hi = self.phi.domain
        return np.where(s <= hi, self.phi.derivative(np.clip(s, lo, hi)), 0.0)

    def tangential_tail(self, S, r_S, rp_S):
        return 0.0, 0.0


def _as_trial(phi):
    if isinstance(phi, (CutoffTrial, SampledTrial)):
        return phi
    if isinstance(phi, SampledFunction):
        return SampledTrial(phi)
    raise TypeError("phi must be a CutoffTrial or a SampledFunction")


@dataclass(frozen=True)
class TrialFamily:
    s0: float
    sigmas: tuple = DEFAULT_SIGMAS

    def __post_init__(self):
        if not self.s0 > 0:
            raise ValueError("s0 must be positive")
        if any(not sg > 0 for sg in self.sigmas):
            raise ValueError("sigmas must be positive")
        if list(self.sigmas) != sorted(self.sigmas, reverse=True):
            raise ValueError("sigmas must be decreasing")

    def trials(self):
        return [CutoffTrial(float(sg), self.s0) for sg in self.sigmas]


def curvature_radius(pair, rel=1e-3):
    """Largest node where either principal curvature exceeds ``rel`` of its peak."""
    s = pair.k_s.nodes
    mags = np.maximum(np.abs(pair.k_s.values), np.abs(pair.k_theta.values))
    peak = mags.max()
    if peak == 0:
        return 0.0
    idx = np.nonzero(mags >= rel * peak)[0]
    return float(s[idx[-1]])


def default_family(layer, sigmas=DEFAULT_SIGMAS):
    """s0 at least the invariants cutoff and five curvature radii, snapped to a node."""
    curve = layer.curve
    pc = far_field_constants(curve, layer.pair)
    base = pc.s0 if math.isfinite(pc.s0) else 1.0
    s0 = max(base, 5.0 * curvature_radius(layer.pair), 1.0)
    s0 = min(s0, 0.5 * curve.s_max)
    return TrialFamily(float(curve.s[curve.node(s0)]), tuple(sigmas))


# ----------------------------------------------------------- product grid


class _Grid:
    """(s nodes) x (Gauss-Legendre u nodes) samples shared by all terms."""

    def __init__(self, layer, n_u=32):
        if layer.m != 4:
            raise ValueError("the certificate is implemented for m = 4")
        c = layer.curve
        self.layer = layer
        self.s, self.h, self.r = c.s, c.h, c.r
        self.ks, self.kt = layer.pair.k_s.values, layer.pair.k_theta.values
        a = layer.a
        self.a = a
        self.k1 = math.pi / (2.0 * a)
        x, wx = gauss_legendre(n_u)
        self.u, self.wu = a * x, a * wx
        x2, wx2 = gauss_legendre(n_u // 2)
        self.u2, self.wu2 = a * x2, a * wx2
        self.n_u = n_u

    def chi(self, u):
        return np.cos(self.k1 * u) / math.sqrt(self.a)

    def chi_u(self, u):
        return -self.k1 * np.sin(self.k1 * u) / math.sqrt(self.a)

    def inner_weight(self, u, wu):
        # I(s) = int chi^2 (1 - u kt)^2 / (1 - u ks) du
        U = u[None, :]
        f = self.chi(U) ** 2 * (1.0 - U * self.kt[:, None]) ** 2 / (1.0 - U * self.ks[:, None])
        return f @ wu

    def kink_index(self, kink):
        if kink is None or kink <= self.s[0] or kink >= self.s[-1]:
            return None
        return int(round(kink / self.h))

    def split_simpson(self, values, kink, right_value=None):
        """Simpson on the nodes, split at ``kink`` so a derivative jump sits on a panel edge.

        ``right_value`` is the integrand's right-hand limit at the kink node;
        ``values`` there holds the left one.
        """
        i = self.kink_index(kink)
        if i is None:
            return simpson_with_error(values, self.h)
        right = values[i:]
        if right_value is not None:
            right = right.copy()
            right[0] = right_value
        total, err = 0.0, 0.0
        for part in (values[: i + 1], right):
            if part.size >= 2:
                v, e = simpson_with_error(part, self.h)
                total += v
                err += e
        return total, err

    def curvature_tail(self, phi_end):
        c2r2 = (2.0 * self.ks * self.kt + self.kt**2) * self.r**2
        model = fit_tail(self.s, c2r2, floor=NOISE * float(np.max(np.abs(c2r2), initial=0.0)))
        if not model.convergent:
            return math.nan, math.inf
        t, e = model.tail(self.s[-1])
        # phi is non-increasing, so phi(S)^2 bounds the weight over the tail
        return W2 * t * phi_end**2, W2 * (abs(t) + e) * phi_end**2


# ------------------------------------------------------------------ terms


@dataclass(frozen=True)
class Term:
    value: float
    error: float


def curvature_term(layer, phi, grid=None):
    """W2 int c2 phi^2 r^2 ds, window part plus a tail bounded through phi(S)."""
    g = grid or _Grid(layer)
    trial = _as_trial(phi)
    ph = trial.value(g.s)
    integrand = (2.0 * g.ks * g.kt + g.kt**2) * ph**2 * g.r**2
    val, err = g.split_simpson(integrand, trial.kink)
    tail, terr = g.curvature_tail(float(ph[-1]))
    return Term(W2 * val + tail, W2 * err + terr)


def tangential_term(layer, phi, grid=None):
    """W2 int int (phi')^2 chi^2 (1 - u k_theta)^2 / (1 - u k_s) r^2 du ds, always >= 0."""
    g = grid or _Grid(layer)
    trial = _as_trial(phi)
    dph = trial.deriv(g.s)
    inner = g.inner_weight(g.u, g.wu)
    inner2 = g.inner_weight(g.u2, g.wu2)
    i, kd = g.kink_index(trial.kink), trial.kink_deriv()
    right, right2 = None, None
    if i is not None and kd is not None:
        right = kd**2 * inner[i] * g.r[i] ** 2
        right2 = kd**2 * inner2[i] * g.r[i] ** 2
    val, err = g.split_simpson(dph**2 * inner * g.r**2, trial.kink, right)
    val2, _ = g.split_simpson(dph**2 * inner2 * g.r**2, trial.kink, right2)
    c = layer.curve
    tail, terr = trial.tangential_tail(c.s_max, float(c.r[-1]), float(c.r_prime[-1]))
    return Term(W2 * val + tail, W2 * (err + abs(val - val2)) + terr)


def _form_window(g, f, fs, fu, f2=None, fs2=None, fu2=None, kink=None, fs_kink=None, fs2_kink=None):
    """W2 int int [f_s g_s / (1 - u k_s)^2 + f_u g_u - k1^2 f g] w du ds on the window.

    The second function defaults to the first (quadratic form). ``fs_kink``
    and ``fs2_kink`` are the right-hand limits of the s-derivatives on the
    kink row. Returns (value, error, scale) where ``scale`` is the size of
    the terms that cancel against each other.
    """
    if f2 is None:
        f2, fs2, fu2 = f, fs, fu
        fs2_kink = fs_kink
    U = g.u[None, :]
    ks, kt = g.ks[:, None], g.kt[:, None]
    w = (1.0 - U * ks) * (1.0 - U * kt) ** 2 * g.r[:, None] ** 2
    dens = (fs * fs2 / (1.0 - U * ks) ** 2 + fu * fu2 - g.k1**2 * f * f2) * w
    mass = (g.k1**2 * np.abs(f * f2) + np.abs(fu * fu2)) * w
    line = dens @ g.wu
    right = None
    i = g.kink_index(kink)
    if i is not None and fs_kink is not None:
        a = fs_kink if fs2_kink is None else fs2_kink
        row = (fs_kink * a / (1.0 - U[0] * ks[i]) ** 2 + fu[i] * fu2[i] - g.k1**2 * f[i] * f2[i]) * w[i]
        right = float(row @ g.wu)
    val, err = g.split_simpson(line, kink, right)
    scale, _ = g.split_simpson(mass @ g.wu, kink)
    return W2 * val, W2 * err, W2 * scale


# --------------------------------------------------------------- q3 rows


@dataclass(frozen=True)
class Q3Row:
    sigma: float
    s0: float
    tangential: float
    tangential_error: float
    curvature: float
    curvature_error: float
    q3: float
    error: float
    direct: float
    direct_difference: float
    scale: float
    phi_end: float

    def to_dict(self):
        return asdict(self)


def _check(decomp, direct, tol, what):
    if not abs(decomp - direct) <= tol:
        raise ConsistencyError(
            f"{what}: decomposition {decomp!r} and direct quadrature {direct!r} differ by "
            f"{abs(decomp - direct):.3e} > {tol:.3e}"
        )


def q3(layer, trial, grid=None, geometry_error=0.0):
    """Q3 for one trial, by the two-term split and by direct full-form quadrature."""
    g = grid or _Grid(layer)
    trial = _as_trial(trial)
    tan = tangential_term(layer, trial, g)
    cur = curvature_term(layer, trial, g)
    ph = trial.value(g.s)[:, None]
    dph = trial.deriv(g.s)[:, None]
    chi, chiu = g.chi(g.u)[None, :], g.chi_u(g.u)[None, :]
    kd = trial.kink_deriv()
    fs_k = None if kd is None else kd * chi[0]
    val, err, scale = _form_window(g, ph * chi, dph * chi, ph * chiu, kink=trial.kink, fs_kink=fs_k)
    c = layer.curve
    ttail, _ = trial.tangential_tail(c.s_max, float(c.r[-1]), float(c.r_prime[-1]))
    ctail, _ = g.curvature_tail(float(ph[-1, 0]))
    direct = val + ttail + ctail
    decomp = tan.value + cur.value
    error = tan.error + cur.error + geometry_error
    _check(decomp, direct, error + err + CONSISTENCY_RTOL * scale, "Q3")
    return Q3Row(
        sigma=getattr(trial, "sigma", math.nan),
        s0=getattr(trial, "s0", math.nan),
        tangential=tan.value,
        tangential_error=tan.error,
        curvature=cur.value,
        curvature_error=cur.error,
        q3=decomp,
        error=error,
        direct=direct,
        direct_difference=abs(decomp - direct),
        scale=scale,
        phi_end=float(ph[-1, 0]),
    )


# ---------------------------------------------------------- perturbation


@dataclass(frozen=True)
class BumpSpec:
    """j(s) = (1 - x^2)^3 on [s_lo, s_hi], x the affine map onto [-1, 1]."""

    s_lo: float
    s_hi: float
    sign: int
    threshold: float

    @property
    def centre(self):
        return 0.5 * (self.s_lo + self.s_hi)

    @property
    def radius(self):
        return 0.5 * (self.s_hi - self.s_lo)

    def value(self, s):
        x = (np.asarray(s, dtype=float) - self.centre) / self.radius
        return np.where(np.abs(x) < 1.0, (1.0 - x * x) ** 3, 0.0)

    def deriv(self, s):
        x = (np.asarray(s, dtype=float) - self.centre) / self.radius
        return np.where(np.abs(x) < 1.0, -6.0 * x * (1.0 - x * x) ** 2 / self.radius, 0.0)

    def deriv2(self, s):
        x = (np.asarray(s, dtype=float) - self.centre) / self.radius
        return np.where(np.abs(x) < 1.0, (-6.0 + 36.0 * x * x - 30.0 * x**4) / self.radius**2, 0.0)

    def to_dict(self):
        return asdict(self)


def select_bump(pair, s0, thresholds=(0.5, 0.25, 0.1, 0.05, 0.01), min_nodes=5):
    """Widest run in (0, s0) where k_s + 2 k_theta keeps one sign above a threshold.

    The threshold is a fraction of max |k_s + 2 k_theta| on the scan range
    and is relaxed step by step; :class:`NoBumpError` if nothing qualifies.
    """
    s = pair.k_s.nodes
    c1 = pair.k_s.values + 2.0 * pair.k_theta.values
    inside = (s > 0) & (s < s0)
    if not np.any(inside):
        raise NoBumpError("empty scan range")
    peak = float(np.max(np.abs(c1[inside])))
    if peak == 0.0:
        raise NoBumpError("k_s + 2 k_theta vanishes on the scan range")
    for frac in thresholds:
        best = None
        for sgn in (1, -1):
            ok = inside & (sgn * c1 >= frac * peak)
            # maximal runs of consecutive True entries
            edges = np.diff(np.concatenate([[0], ok.astype(np.int8), [0]]))
            starts, stops = np.nonzero(edges == 1)[0], np.nonzero(edges == -1)[0]
            for a, b in zip(starts, stops):
                if b - a >= min_nodes and (best is None or b - a > best[1] - best[0]):
                    best = (a, b, sgn)
        if best is not None:
            a, b, sgn = best
            return BumpSpec(float(s[a]), float(s[b - 1]), int(sgn), float(frac))
    raise NoBumpError("no sign-definite interval of k_s + 2 k_theta found")


@dataclass(frozen=True)
class PerturbedRow:
    sigma: float
    epsilon: float
    q3_base: float
    cross: float
    quadratic: float
    q3: float
    error: float
    direct: float
    direct_difference: float

    def to_dict(self):
        return asdict(self)


def perturbed_q3(layer, sigma, j, epsilon=None, s0=None, grid=None, base=None, geometry_error=0.0):
    """Q3 for (phi_sigma + eps j u) chi.

    Q3(eps) = Q3(0) + 2 eps B + eps^2 C with B the cross term and C = Q3[j u chi].
    ``epsilon=None`` uses the minimiser -B / C (which also fixes the sign
    that makes the cross term negative); when C <= 0 a small epsilon of
    that sign is halved until Q3 decreases.
    """
    g = grid or _Grid(layer)
    if s0 is None:
        s0 = default_family(layer).s0
    trial = CutoffTrial(float(sigma), float(s0))
    base = base or q3(layer, trial, g, geometry_error)
    ph, dph = trial.value(g.s)[:, None], trial.deriv(g.s)[:, None]
    jv, jd = j.value(g.s)[:, None], j.deriv(g.s)[:, None]
    U = g.u[None, :]
    chi, chiu = g.chi(U), g.chi_u(U)
    f, fs, fu = ph * chi, dph * chi, ph * chiu
    p, ps, pu = jv * U * chi, jd * U * chi, jv * (chi + U * chiu)
    i = g.kink_index(trial.kink)
    fs_k = trial.kink_deriv() * chi[0]
    ps_k = ps[i] if i is not None else None
    B, berr, bscale = _form_window(g, f, fs, fu, p, ps, pu, kink=trial.kink, fs_kink=fs_k, fs2_kink=ps_k)
    C, cerr, cscale = _form_window(g, p, ps, pu)
    if epsilon is None:
        if C > 0:
            epsilon = -B / C
        else:
            epsilon = -math.copysign(1e-3, B) if B != 0 else 0.0
            while epsilon != 0.0 and 2.0 * epsilon * B + epsilon * epsilon * C >= 0.0:
                epsilon *= 0.5
                if abs(epsilon) < 1e-12:
                    epsilon = 0.0
    eps = float(epsilon)
    value = base.q3 + 2.0 * eps * B + eps * eps * C
    error = base.error + 2.0 * abs(eps) * berr + eps * eps * cerr
    # direct quadrature of the perturbed trial on the window plus the unchanged tails
    dk = None if i is None else fs_k + eps * ps_k
    dv, derr, dscale = _form_window(g, f + eps * p, fs + eps * ps, fu + eps * pu, kink=trial.kink, fs_kink=dk)
    c = layer.curve
    ttail, _ = trial.tangential_tail(c.s_max, float(c.r[-1]), float(c.r_prime[-1]))
    ctail, _ = g.curvature_tail(float(ph[-1, 0]))
    direct = dv + ttail + ctail
    _check(value, direct, error + derr + CONSISTENCY_RTOL * (dscale + base.scale), "perturbed Q3")
    return PerturbedRow(
        sigma=float(sigma),
        epsilon=eps,
        q3_base=base.q3,
        cross=B,
        quadratic=C,
        q3=value,
        error=error,
        direct=direct,
        direct_difference=abs(value - direct),
    )


# ----------------------------------------------------------- certificate


@dataclass
class Certificate:
    case: str
    verdict: str
    rows: list = field(default_factory=list)
    perturbed: list = field(default_factory=list)
    bump: dict | None = None
    epsilon: float | None = None
    s0: float | None = None
    K_total: float | None = None
    K_total_error: float | None = None
    hypotheses: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    probe: dict | None = None

    def to_dict(self):
        d = asdict(self)
        return _json_safe(d)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def _case_two(layer, family, g, geometry_error):
    """Run the perturbation sweep; returns (verdict, rows, bump, eps, note)."""
    try:
        j = select_bump(layer.pair, family.s0)
    except NoBumpError as exc:
        return "Inconclusive", [], None, None, f"no bump: {exc}"
    rows = []
    for trial in family.trials():
        base = q3(layer, trial, g, geometry_error)
        row = perturbed_q3(layer, trial.sigma, j, s0=family.s0, grid=g, base=base, geometry_error=geometry_error)
        rows.append(row)
        if row.q3 + row.error < 0:
            return "Certified", rows, j, row.epsilon, None
    best = min(rows, key=lambda r: r.q3 + r.error)
    return "Inconclusive", rows, j, best.epsilon, "no perturbed trial reached Q3 + error < 0"


def certify(layer, family=None, admissibility=None, kt=None, probe=False, n_u=32):
    """Decide whether the trial family certifies a bound state below (pi/2a)^2.

    Case selection follows the sign of the total curvature integral: a
    clearly negative value runs the plain sweep, a value within twice its
    error bound of zero runs the perturbed sweep, and a clearly positive
    value returns NoCertificate. With ``probe`` the perturbed sweep is also
    run in that last case and stored separately; it never changes the
    verdict.
    """
    family = family or default_family(layer)
    kt = kt or K_total(layer)
    g = _Grid(layer, n_u)
    geometry_error = kt.c2_error if math.isfinite(kt.c2_error) else 0.0
    hyp = {"integrable": bool(kt.integrable), "K_total_nonpositive": bool(kt.integrable and kt.value - kt.error <= 0)}
    if admissibility is not None:
        hyp.update(
            A1=admissibility.a1.verdict,
            A2="pass" if admissibility.a2 else "fail",
            A3=admissibility.a3.verdict,
        )
    cert = Certificate(
        case="",
        verdict="",
        s0=family.s0,
        K_total=kt.value,
        K_total_error=kt.error,
        hypotheses=hyp,
    )
    if layer.pair.sup_k_s == 0.0 and layer.pair.sup_k_theta == 0.0:
        cert.case = "flat"
        cert.verdict = "NoCertificate"
        cert.notes.append("flat layer: the threshold is not undercut, no discrete spectrum expected")
        cert.rows = [q3(layer, t, g).to_dict() for t in family.trials()]
        return cert
    if not kt.integrable:
        cert.case = "not-integrable"
        cert.verdict = "NoCertificate"
        cert.notes.append("curvature integrand does not decay; the certificate's hypotheses fail")
        return cert
    if kt.value + kt.error < 0:
        cert.case = "strict-negative"
        cert.verdict = "Inconclusive"
        for trial in family.trials():
            row = q3(layer, trial, g, geometry_error)
            cert.rows.append(row.to_dict())
            if row.q3 + row.error < 0:
                cert.verdict = "Certified"
                break
        if cert.verdict != "Certified":
            cert.notes.append("sweep exhausted without Q3 + error < 0")
        return cert
    if abs(kt.value) <= 2.0 * kt.error:
        cert.case = "zero-K2 perturbation"
        verdict, rows, j, eps, note = _case_two(layer, family, g, geometry_error)
        cert.verdict = verdict
        cert.perturbed = [r.to_dict() for r in rows]
        cert.bump = j.to_dict() if j else None
        cert.epsilon = eps
        if note:
            cert.notes.append(note)
        return cert
    cert.case = "positive-K2"
    cert.verdict = "NoCertificate"
    cert.notes.append("total curvature integral is positive beyond its error bound")
    cert.rows = [q3(layer, t, g, geometry_error).to_dict() for t in family.trials()]
    if probe:
        verdict, rows, j, eps, note = _case_two(layer, family, g, geometry_error)
        cert.probe = {
            "verdict": verdict,
            "rows": [r.to_dict() for r in rows],
            "bump": j.to_dict() if j else None,
            "epsilon": eps,
            "note": note,
        }
    return cert


def write_certificate(path, cert):
    with open(path, "w") as fh:
        json.dump(cert.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
