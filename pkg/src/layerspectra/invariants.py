"""Curvature invariants, parabolicity and volume growth of the reference hypersurface."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .constants import V3, W2, sphere_area
from .meridian import build_meridian, principal_curvatures
from .numerics import SampledFunction, cumulative, fit_tail, integrate, simpson_with_error, tail_integral

# s0 is where the running curvature integral settles within this of D
S0_TOL = 1.0 / 100.0
# integrand samples this far below their peak are rounding noise
NOISE = 1e-12


def _fit(s, values):
    return fit_tail(s, values, floor=NOISE * float(np.max(np.abs(values), initial=0.0)))


# ----------------------------------------------------------------- eta_k


def eta_closed(k, a):
    """Transverse moments int_{-a}^{a} u^k (chi1'^2 - k1^2 chi1^2) du in closed form."""
    if k < 0 or int(k) != k:
        raise ValueError("k must be a nonnegative integer")
    if a <= 0:
        raise ValueError("a must be positive")
    k = int(k)
    if k == 0 or k % 2:
        return 0.0
    k1 = math.pi / (2.0 * a)
    total = 0.0
    for l in range(1, k // 2 + 1):
        total += (-1) ** (k // 2 - l) * math.pi ** (2 * l - 1) / math.factorial(2 * l - 1)
    return 0.5 * math.factorial(k) / (2.0 * k1) ** (k - 1) * total


def eta_quadrature(k, a, tol=1e-14):
    """Same moment by adaptive quadrature; the oracle for :func:`eta_closed`."""
    k1 = math.pi / (2.0 * a)

    def f(u):
        return u**k * k1**2 * (np.sin(k1 * u) ** 2 - np.cos(k1 * u) ** 2)

    # odd moments vanish, so the floor has to be absolute
    scale = a ** (k + 1) * k1**2
    val, _ = integrate(f, (-a, a), tol=tol, abs_floor=tol * scale, max_panels=20000)
    return val


@dataclass(frozen=True)
class EtaTable:
    a: float
    values: tuple

    @property
    def k1(self):
        return math.pi / (2.0 * self.a)

    @classmethod
    def build(cls, a, kmax=8):
        return cls(float(a), tuple(eta_closed(k, a) for k in range(kmax + 1)))

    def to_dict(self):
        return {"a": self.a, "k1": self.k1, "eta": list(self.values)}


# ------------------------------------------------- symmetric polynomials


def elementary_symmetric(curvatures, k):
    """k-th elementary symmetric polynomial of the principal curvatures.

    ``curvatures`` is a sequence of scalars or equal-shape arrays; the result
    broadcasts over them.
    """
    n = len(curvatures)
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, {n}]")
    coeffs = [np.ones_like(np.asarray(curvatures[0], dtype=float))] + [0.0] * n
    for c in curvatures:
        c = np.asarray(c, dtype=float)
        for j in range(n, 0, -1):
            coeffs[j] = coeffs[j] + c * coeffs[j - 1]
    out = np.asarray(coeffs[k], dtype=float)
    return float(out) if out.ndim == 0 else out


# ------------------------------------------------------------- K_total


@dataclass(frozen=True)
class KTotal:
    value: float
    error: float
    tail: float
    integrable: bool
    eta2: float
    c2_integral: float
    c2_error: float

    def to_dict(self):
        return asdict(self)


def _k_total_raw(curve, pair, a, m):
    ks, kt = pair.k_s.values, pair.k_theta.values
    curv = [ks] + [kt] * (m - 2)
    area = sphere_area(m - 2)
    rpow = curve.r ** (m - 2)
    total, err, tail_total = 0.0, 0.0, 0.0
    integrable = True
    c2 = (math.nan, math.nan)
    for j in range(1, (m - 1) // 2 + 1):
        eta = eta_closed(2 * j, a)
        integrand = elementary_symmetric(curv, 2 * j) * rpow
        val, qerr = simpson_with_error(integrand, curve.h)
        model = _fit(curve.s, integrand)
        if not model.convergent:
            integrable = False
            tail, terr = math.inf, math.inf
        else:
            tail, terr = model.tail(curve.s_max)
        if j == 1:
            c2 = (area * (val + tail), area * (qerr + terr))
        total += eta * area * (val + tail)
        err += abs(eta) * area * (qerr + terr)
        tail_total += eta * area * tail
    return total, err, tail_total, integrable, c2


def K_total(layer, refine=True):
    """Total integral of the curvature invariant over the hypersurface, with error bound.

    For m = 4 this is eta_2 * W2 * int c_2 r^2 ds with c_2 = 2 k_s k_theta + k_theta^2.
    ``c2_integral`` is the same without the eta_2 factor. With ``refine``
    the meridian is rebuilt at twice the step and the change is added to
    the error bound, since the quadrature estimate alone cannot see the
    ODE error in r.
    """
    curve = layer.curve
    total, err, tail, integrable, (c2, c2_err) = _k_total_raw(curve, layer.pair, layer.a, layer.m)
    if refine and integrable and curve.s.size > 8:
        coarse = build_meridian(curve.profile, curve.s_max, 2.0 * curve.h)
        t2, _, _, ok2, (c2b, _) = _k_total_raw(coarse, principal_curvatures(coarse), layer.a, layer.m)
        if ok2:
            err += abs(total - t2)
            c2_err += abs(c2 - c2b)
    return KTotal(
        value=total if integrable else math.nan,
        error=err,
        tail=tail,
        integrable=integrable,
        eta2=eta_closed(2, layer.a),
        c2_integral=c2,
        c2_error=c2_err,
    )


# ---------------------------------------------- far-field diagnostics


@dataclass(frozen=True)
class FarFieldConstants:
    D: float
    D_error: float
    s0: float
    r0: float
    s0_index: int


def far_field_constants(curve, pair):
    """D = int_0^inf (k_s k_theta + k_theta^2) r^2 ds and the cutoff s0.

    s0 is the smallest node beyond 1 after which the running integral stays
    within 1/100 of D (including the tail error).
    """
    ks, kt, r = pair.k_s.values, pair.k_theta.values, curve.r
    integrand = (ks * kt + kt * kt) * r * r
    partial = cumulative(integrand, curve.h)
    _, qerr = simpson_with_error(integrand, curve.h)
    model = _fit(curve.s, integrand)
    if not model.convergent:
        return FarFieldConstants(math.nan, math.inf, math.nan, math.nan, -1)
    tail, terr = model.tail(curve.s_max)
    D = float(partial[-1] + tail)
    D_err = qerr + terr
    dev = np.abs(partial - D) + D_err
    # smallest index i with dev[j] <= tol for every j >= i
    ok_from = np.flip(np.logical_and.accumulate(np.flip(dev <= S0_TOL)))
    candidates = np.nonzero(ok_from & (curve.s > 1.0))[0]
    if candidates.size == 0:
        return FarFieldConstants(D, D_err, math.nan, math.nan, -1)
    i0 = int(candidates[0])
    return FarFieldConstants(D, D_err, float(curve.s[i0]), float(r[i0]), i0)


@dataclass(frozen=True)
class FarFieldDiagnostics:
    S: float
    r_over_s: float
    r_over_s_limit: float
    offset_C: float
    r_over_s_bound: float
    r_over_s_half: float
    jacobi_moment: float
    jacobi_moment_bound: float
    r_prime_end: float
    z_prime_end: float
    z_prime_decay_rate: float
    flags: tuple = field(default_factory=tuple)

    def to_dict(self):
        d = asdict(self)
        d["flags"] = list(self.flags)
        return d


def lemma2_diagnostics(curve, pair, tol=1e-3):
    """Window-edge checks of r/s -> 1, int k_s k_theta r ds = 0 and z' -> 0.

    r(s) = L s - C is fitted on the last decade; ``offset_C`` feeds the
    bound |r(S)/S - 1| <= C/S. The moment's bound combines the quadrature
    error estimate with the fitted tail of the integrand.
    """
    s, r = curve.s, curve.r
    S = float(s[-1])
    win = s >= S / 10.0
    A = np.vstack([s[win], -np.ones(win.sum())]).T
    (L, C), *_ = np.linalg.lstsq(A, r[win], rcond=None)
    half = curve.node(S / 2.0)
    ks, kt = pair.k_s.values, pair.k_theta.values
    integrand = ks * kt * r
    moment, qerr = simpson_with_error(integrand, curve.h)
    model = _fit(s, integrand)
    tail_val, tail_err = model.tail(S) if model.convergent else (math.inf, math.inf)
    bound = qerr + abs(tail_val) + tail_err
    zp = np.abs(curve.z_prime[win])
    if zp.max() <= 1e-14:
        zrate = math.inf
    else:
        zrate = -float(np.polyfit(np.log(s[win]), np.log(np.maximum(zp, 1e-300)), 1)[0])
    flags = []
    if abs(curve.z_prime[-1]) > tol and zrate < 0.5:
        flags.append("z_prime_not_vanishing")
    if abs(L - 1.0) > tol:
        flags.append("r_over_s_limit_not_one")
    if not model.convergent:
        flags.append("moment_not_integrable")
    if flags:
        flags.append("integrability_hypothesis_violated")
    return FarFieldDiagnostics(
        S=S,
        r_over_s=float(r[-1] / S),
        r_over_s_limit=float(L),
        offset_C=float(C),
        r_over_s_bound=float(abs(C) / S),
        r_over_s_half=float(r[half] / s[half]),
        jacobi_moment=float(moment),
        jacobi_moment_bound=float(bound),
        r_prime_end=float(curve.r_prime[-1]),
        z_prime_end=float(curve.z_prime[-1]),
        z_prime_decay_rate=zrate,
        flags=tuple(flags),
    )


# --------------------------------------------------------- parabolicity


@dataclass(frozen=True)
class ParabolicityReport:
    verdict: str
    finite_part: float
    tail: float
    tail_bound: float
    value: float
    tail_power: float
    D: float = math.nan
    s0: float = math.nan
    s1: float = math.nan
    aleph: float = math.nan
    explicit_bound: float = math.nan

    def to_dict(self):
        return asdict(self)


def _quadratic_tail(s1, alpha, aleph):
    # int_{s1}^inf ds / ((s - alpha)^2 - aleph)
    x = s1 - alpha
    if aleph < 0:
        kappa = math.sqrt(-aleph)
        return math.atan2(kappa, x) / kappa if x > 0 else (math.pi - math.atan2(kappa, -x)) / kappa
    if aleph == 0:
        return 1.0 / x if x > 0 else math.inf
    root = math.sqrt(aleph)
    if x <= root:
        return math.inf
    return math.log((x + root) / (x - root)) / (2.0 * root)


def parabolicity(curve, pair=None, lower=1.0):
    """Classify via the boundary-area integral int_1^inf dt / (W2 r(t)^2).

    Finite -> non-parabolic; a fitted tail decaying no faster than 1/t ->
    parabolic; otherwise inconclusive. When the curvature integrals
    converge, the explicit tail bound built from D, s0, s1 and aleph is
    evaluated alongside.
    """
    s, r = curve.s, curve.r
    i1 = int(np.searchsorted(s, lower - 1e-12))
    f = SampledFunction(s[i1:], 1.0 / (W2 * r[i1:] ** 2))
    res = tail_integral(f, lower=float(s[i1]))
    head = 0.0
    if s[i1] > lower + 1e-12:
        r_sp, _ = curve._splines()
        head, _ = integrate(lambda t: 1.0 / (W2 * r_sp(t) ** 2), (lower, float(s[i1])))
    finite = res.finite_part + head
    if res.convergent:
        verdict = "non-parabolic"
    elif res.model.divergent:
        verdict = "parabolic"
    else:
        verdict = "inconclusive"
    report = dict(
        verdict=verdict,
        finite_part=finite,
        tail=res.tail,
        tail_bound=res.error,
        value=finite + res.tail,
        tail_power=res.model.power,
    )
    if pair is not None:
        pc = far_field_constants(curve, pair)
        if math.isfinite(pc.s0):
            D, s0, r0 = pc.D, pc.s0, pc.r0
            alpha = D + S0_TOL
            aleph = -r0**2 - (2.0 * D + 2.0 * S0_TOL) * s0 + s0**2 + alpha**2
            if aleph <= 0:
                s1 = s0
            else:
                s1 = max(s0, alpha + math.sqrt(aleph))
            r_sp, _ = curve._splines()
            if s1 > lower:
                near, _ = integrate(lambda t: 1.0 / (W2 * r_sp(t) ** 2), (lower, min(s1, curve.s_max)))
            else:
                near = 0.0
            far = _quadratic_tail(s1, alpha, aleph) / W2
            report.update(D=D, s0=s0, s1=s1, aleph=aleph, explicit_bound=near + far)
    return ParabolicityReport(**report)


# -------------------------------------------------------- volume growth


@dataclass(frozen=True)
class VolumeGrowthReport:
    S: float
    volume_end: float
    alpha_window: float
    alpha_extrapolated: float
    s0: float = math.nan
    c1: float = math.nan
    c2: float = math.nan
    envelope_ok: bool | None = None
    envelope_margin: float = math.nan

    def to_dict(self):
        return asdict(self)


def volume_curve(curve):
    """V(o, s) = W2 int_0^s r^2 at every node."""
    return W2 * cumulative(curve.r**2, curve.h)


def cubic_envelope(s, D, s0, r0, v0):
    """Lower/upper cubic envelopes of V(o, s) for s >= s0.

    The running-integral bounds on r^2 are integrated from s0, so both
    carry the factor W2 on the quadratic term and an integration constant
    matching V(o, s0) = v0.
    """
    s = np.asarray(s, dtype=float)
    k1 = r0**2 - s0**2 + (2.0 * D + 2.0 * S0_TOL) * s0
    k2 = r0**2 - s0**2 - (2.0 * abs(D) + 2.0 * S0_TOL) * s0
    c1, c2 = W2 * k1, W2 * k2

    def lower_poly(t):
        return W2 * t**3 / 3.0 - W2 * (D + S0_TOL) * t**2 + c1 * t

    def upper_poly(t):
        return W2 * t**3 / 3.0 + W2 * (abs(D) + S0_TOL) * t**2 + c2 * t

    lower = lower_poly(s) + (v0 - lower_poly(s0))
    upper = upper_poly(s) + (v0 - upper_poly(s0))
    return lower, upper, c1, c2


def volume_growth(curve, pair=None):
    """Volume of geodesic balls about the pole and its normalised growth rate."""
    s = curve.s
    V = volume_curve(curve)
    S = float(s[-1])
    win = s >= S / 10.0
    ratio = V[win] / (V3 * s[win] ** 3)
    A = np.vstack([np.ones(win.sum()), 1.0 / s[win]]).T
    (alpha, _), *_ = np.linalg.lstsq(A, ratio, rcond=None)
    out = dict(S=S, volume_end=float(V[-1]), alpha_window=float(V[-1] / (V3 * S**3)), alpha_extrapolated=float(alpha))
    if pair is not None:
        pc = far_field_constants(curve, pair)
        if math.isfinite(pc.s0):
            i0 = pc.s0_index
            lo, hi, c1, c2 = cubic_envelope(s[i0:], pc.D, pc.s0, pc.r0, V[i0])
            slack = 1e-9 * V[i0:]
            margin = float(min(np.min(V[i0:] - lo + slack), np.min(hi - V[i0:] + slack)))
            out.update(s0=pc.s0, c1=c1, c2=c2, envelope_ok=bool(margin >= 0), envelope_margin=margin)
    return VolumeGrowthReport(**out)


# -------------------------------------------------------------- output


def invariants_record(layer):
    """Everything this module computes for a layer, as a JSON-ready dict."""
    kt = K_total(layer)
    return {
        "K_total": kt.value if kt.integrable else None,
        "tail_bound": kt.error,
        "K_total_detail": _clean(kt.to_dict()),
        "eta_table": EtaTable.build(layer.a).to_dict(),
        "diagnostics": _clean(lemma2_diagnostics(layer.curve, layer.pair).to_dict()),
        "parabolicity": _clean(parabolicity(layer.curve, layer.pair).to_dict()),
        "volume_growth": _clean(volume_growth(layer.curve, layer.pair).to_dict()),
    }


def _clean(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, float) and not math.isfinite(v):
            out[k] = None if math.isnan(v) else ("inf" if v > 0 else "-inf")
        else:
            out[k] = v
    return out


def write_invariants(path, record):
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")
