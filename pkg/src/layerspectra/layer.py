"""The layer of half-width a over the rotational hypersurface.

Points of the layer are p(s, xi) + u n(s, xi) with u in (-a, a). In the
(s, u) meridian half-plane the offset point is (r - u z', z + u r'), the
metric is diagonal with entries (1 - u k_s)^2, (1 - u k_theta)^2 r^2 (per
angular direction, times the round sphere metric) and 1, and the volume
weight is (1 - u k_s)(1 - u k_theta)^(m-2) r^(m-2).
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError
from .kernels import segment_pairs_hit
from .meridian import FlatnessReport, asymptotic_flatness, build_meridian, principal_curvatures, rho_m
from .svg import decimate, line_plot

# max turning (radians) of the boundary polyline per segment for a conclusive A1 check
A1_MAX_TURN = 0.2


@dataclass(frozen=True, eq=False)
class LayerSpec:
    curve: object
    pair: object
    a: float
    m: int = 4

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("half-width a must be positive")
        if int(self.m) != self.m or self.m < 3:
            raise ValueError("dimension m must be an integer >= 3")

    @property
    def rho_m(self):
        return rho_m(self.pair)

    @property
    def profile(self):
        return self.curve.profile


def default_window(profile, a):
    """Meridian window: at least 50 bump widths, 100 half-widths and the decay radius."""
    width = profile.params.get("width", 1.0) if profile.family == "gaussian_bump" else 1.0
    s_decay = profile.s_decay if math.isfinite(profile.s_decay) else 0.0
    return float(max(50.0 * width, 100.0 * a, 2.0 * s_decay))


def make_layer(profile, a, s_max=None, h=0.01, m=4):
    """Build meridian, curvatures and the layer in one call."""
    if s_max is None:
        s_max = default_window(profile, a)
    curve = build_meridian(profile, s_max, h)
    return LayerSpec(curve, principal_curvatures(curve), float(a), m)


def weingarten_det(k_s, k_theta, u, m=4):
    """det(1 - uA) = (1 - u k_s)(1 - u k_theta)^(m-2)."""
    k_s, k_theta, u = np.asarray(k_s), np.asarray(k_theta), np.asarray(u)
    out = (1.0 - u * k_s) * (1.0 - u * k_theta) ** (m - 2)
    return float(out) if out.ndim == 0 else out


def metric_bounds(layer):
    """(C-, C+) = (1 -+ a/rho_m)^2 bracketing G against the surface metric."""
    rho = layer.rho_m
    if not layer.a < rho:
        raise AdmissibilityError(f"half-width a={layer.a} is not below rho_m={rho}")
    q = 0.0 if math.isinf(rho) else layer.a / rho
    return (1.0 - q) ** 2, (1.0 + q) ** 2


def layer_fields(layer, s):
    """(r, k_s, k_theta) at ``s``: exact on grid nodes, spline-interpolated elsewhere."""
    s = np.asarray(s, dtype=float)
    curve = layer.curve
    idx = np.rint(s / curve.h).astype(int)
    on_grid = np.all(np.abs(idx * curve.h - s) <= 1e-9 * curve.h) and np.all((idx >= 0) & (idx < curve.s.size))
    if on_grid:
        return curve.r[idx], layer.pair.k_s.values[idx], layer.pair.k_theta.values[idx]
    r, _, ks, kt = curve.sample(s)
    return r, ks, kt


def volume_weight(layer, s, u):
    """w(s, u) = (1 - u k_s)(1 - u k_theta)^(m-2) r^(m-2) (sphere factor excluded)."""
    s, u = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(u, dtype=float))
    r, ks, kt = layer_fields(layer, s)
    w = weingarten_det(ks, kt, u, layer.m) * r ** (layer.m - 2)
    w = np.asarray(w, dtype=float)
    if np.any((w <= 0) & (s > 0)):
        raise AdmissibilityError("nonpositive volume weight inside the layer (half-width too large)")
    return float(w) if w.ndim == 0 else w


def metric_diagonal(layer, s, u):
    """Diagonal metric entries (G_ss, G_angle, G_uu); G_angle excludes the round-sphere factor."""
    s, u = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(u, dtype=float))
    r, ks, kt = layer_fields(layer, s)
    return (1.0 - u * ks) ** 2, (1.0 - u * kt) ** 2 * r**2, np.ones_like(s)


# ------------------------------------------------------------------ A1


@dataclass(frozen=True)
class InjectivityReport:
    verdict: str
    resolution: float
    n_segments: int
    witness: tuple | None = None
    reason: str = ""

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "resolution": self.resolution,
            "n_segments": self.n_segments,
            "witness": None if self.witness is None else [float(v) for v in self.witness],
            "reason": self.reason,
        }


def offset_boundary(layer, stride=1):
    """Closed boundary loop of the meridian strip: sheet u=+a, end cap, sheet u=-a, axis cap."""
    c = layer.curve
    idx = np.arange(0, c.s.size, stride)
    if idx[-1] != c.s.size - 1:
        idx = np.append(idx, c.s.size - 1)
    r, z, rp, zp = c.r[idx], c.z[idx], c.r_prime[idx], c.z_prime[idx]
    a = layer.a
    upper = np.column_stack([r - a * zp, z + a * rp])
    lower = np.column_stack([r + a * zp, z - a * rp])
    loop = np.vstack([upper, lower[::-1], upper[:1]])
    return loop, idx


def _densify(loop, max_len):
    """Split segments longer than ``max_len`` (the caps) into equal pieces."""
    pts = [loop[:1]]
    for a, b in zip(loop[:-1], loop[1:]):
        k = max(1, int(math.ceil(math.hypot(*(b - a)) / max_len)))
        t = np.arange(1, k + 1)[:, None] / k
        pts.append(a + t * (b - a))
    return np.vstack(pts)


def _candidate_pairs(p, q, cell):
    lo = np.minimum(p, q)
    hi = np.maximum(p, q)
    ix0 = np.floor(lo[:, 0] / cell).astype(np.int64)
    ix1 = np.floor(hi[:, 0] / cell).astype(np.int64)
    iy0 = np.floor(lo[:, 1] / cell).astype(np.int64)
    iy1 = np.floor(hi[:, 1] / cell).astype(np.int64)
    buckets = defaultdict(list)
    for k in range(p.shape[0]):
        for gx in range(ix0[k], ix1[k] + 1):
            for gy in range(iy0[k], iy1[k] + 1):
                buckets[(gx, gy)].append(k)
    ii, jj = [], []
    for members in buckets.values():
        if len(members) < 2:
            continue
        m = np.asarray(members)
        a, b = np.triu_indices(m.size, 1)
        ii.append(m[a])
        jj.append(m[b])
    if not ii:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    ii = np.concatenate(ii)
    jj = np.concatenate(jj)
    n = p.shape[0]
    key = np.unique(np.minimum(ii, jj) * n + np.maximum(ii, jj))
    return key // n, key % n


def _crossing_point(p1, q1, p2, q2):
    d1 = q1 - p1
    d2 = q2 - p2
    den = d1[0] * d2[1] - d1[1] * d2[0]
    t = ((p2[0] - p1[0]) * d2[1] - (p2[1] - p1[1]) * d2[0]) / den
    return tuple(p1 + t * d1)


def self_intersection_certificate(layer, resolution=None):
    """Resolution-qualified injectivity check of the offset map (s, u) -> (r - u z', z + u r').

    The map is injective on the strip when it is a local diffeomorphism
    (a |k_s| < 1), stays off the axis (r(1 -+ a k_theta) > 0) and the
    closed boundary loop is simple. The loop test buckets segments in a
    uniform hash grid and runs the crossing kernel on candidate pairs.
    """
    c = layer.curve
    a = layer.a
    ks = layer.pair.k_s.values
    kt = layer.pair.k_theta.values
    resolution = c.h if resolution is None else float(resolution)
    stride = max(1, int(round(resolution / c.h)))
    ds = stride * c.h

    fold = np.nonzero(a * np.abs(ks) >= 1.0)[0]
    if fold.size:
        i = int(fold[0])
        u = a * math.copysign(1.0, ks[i]) if ks[i] != 0 else a
        w = (c.r[i] - u * c.z_prime[i], c.z[i] + u * c.r_prime[i])
        return InjectivityReport("fail", ds, 0, w, f"offset map folds at s={c.s[i]:.6g} (a|k_s| >= 1)")
    for u in (a, -a):
        clear = c.r[1:] - u * c.z_prime[1:]
        bad = np.nonzero(clear <= 0)[0]
        if bad.size:
            i = int(bad[0] + 1)
            return InjectivityReport(
                "fail", ds, 0, (float(clear[i - 1]), c.z[i] + u * c.r_prime[i]),
                f"sheet u={u:+g} crosses the rotation axis at s={c.s[i]:.6g}",
            )
    turn = float(np.max(np.abs(ks))) * ds
    loop, _ = offset_boundary(layer, stride)
    # caps are 2a long; without splitting they set the hash cell size
    sheet = np.hypot(*np.diff(loop, axis=0).T)
    loop = _densify(loop, max(float(np.median(sheet)), 1e-12))
    p, q = loop[:-1], loop[1:]
    n = p.shape[0]
    if turn > A1_MAX_TURN:
        return InjectivityReport(
            "inconclusive", ds, n, None, f"segment turning {turn:.3g} rad exceeds {A1_MAX_TURN}"
        )
    seg_len = np.hypot(*(q - p).T)
    cell = max(2.0 * float(seg_len.max()), 1e-12)
    ii, jj = _candidate_pairs(p, q, cell)
    adjacent = (np.abs(ii - jj) == 1) | ((ii == 0) & (jj == n - 1))
    ii, jj = ii[~adjacent], jj[~adjacent]
    if ii.size:
        hit = segment_pairs_hit(p, q, ii.astype(np.int64), jj.astype(np.int64))
        if hit.any():
            k = int(np.argmax(hit))
            i, j = int(ii[k]), int(jj[k])
            w = _crossing_point(p[i], q[i], p[j], q[j])
            return InjectivityReport("fail", ds, n, w, f"boundary segments {i} and {j} cross")
    return InjectivityReport("pass", ds, n, None, f"simple boundary at resolution {ds:.4g}")


# ------------------------------------------------------------ validate


@dataclass(frozen=True)
class AdmissibilityReport:
    a: float
    rho_m: float
    a1: InjectivityReport
    a2: bool
    a3: FlatnessReport
    c_minus: float | None
    c_plus: float | None

    @property
    def admissible(self):
        return self.a1.verdict == "pass" and self.a2 and self.a3.verdict == "pass"

    def to_dict(self):
        return {
            "a": self.a,
            "rho_m": None if math.isinf(self.rho_m) else self.rho_m,
            "rho_m_infinite": math.isinf(self.rho_m),
            "A1": self.a1.to_dict(),
            "A2": {"verdict": "pass" if self.a2 else "fail", "a_over_rho_m": 0.0 if math.isinf(self.rho_m) else self.a / self.rho_m},
            "A3": self.a3.to_dict(),
            "C_minus": self.c_minus,
            "C_plus": self.c_plus,
            "admissible": self.admissible,
        }


def validate(layer, flat_tol=1e-2, resolution=None):
    """Aggregate the three admissibility checks into one report."""
    rho = layer.rho_m
    a2 = layer.a < rho
    cm, cp = metric_bounds(layer) if a2 else (None, None)
    a1 = self_intersection_certificate(layer, resolution)
    a3 = asymptotic_flatness(layer.pair, tol=flat_tol, s_decay=layer.profile.s_decay)
    return AdmissibilityReport(layer.a, rho, a1, a2, a3, cm, cp)


def write_layer_report(path, report):
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def layer_svg(layer, s_view=None):
    """Meridian with both offset sheets, cropped to ``s_view`` (default: a few decay radii)."""
    c = layer.curve
    if s_view is None:
        s_dec = layer.profile.s_decay if math.isfinite(layer.profile.s_decay) else c.s_max
        s_view = min(c.s_max, max(3.0 * s_dec, 6.0 * layer.a, 2.0))
    k = c.node(s_view) + 1
    r, z, rp, zp = c.r[:k], c.z[:k], c.r_prime[:k], c.z_prime[:k]
    a = layer.a
    series = [
        ("meridian", *decimate(r, z)),
        ("u = +a", *decimate(r - a * zp, z + a * rp)),
        ("u = -a", *decimate(r + a * zp, z - a * rp)),
    ]
    return line_plot(series, title=f"meridian strip, a = {a:.4g}", xlabel="r", ylabel="z", equal=True)
