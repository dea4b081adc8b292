"""Generating curve of a rotational hypersurface from its meridian curvature.

A profile k_s(s) fixes the turning angle b(s) = int_0^s k_s, and the
arclength-parametrized meridian follows from r' = cos b, z' = sin b with
r(0) = z(0) = 0. The rotational principal curvature is k_theta = z'/r.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import MeridianError
from .kernels import meridian_rk4
from .numerics import SampledFunction

# below this radius (away from the pole) the curve counts as degenerate
R_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class CurvatureProfile:
    """The meridian curvature k_s as a function of arclength.

    Use the constructors :meth:`flat`, :meth:`gaussian_bump`,
    :meth:`from_table`, :meth:`from_csv` and :meth:`from_function`.
    """

    family: str
    params: dict = field(default_factory=dict)
    decay_tol: float = 1e-10
    _k: object = field(default=None, repr=False)
    _b: object = field(default=None, repr=False)
    _s_decay: float = math.inf
    _s_range: tuple = (0.0, math.inf)

    @classmethod
    def flat(cls):
        return cls(
            "flat",
            {},
            _k=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
            _b=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
            _s_decay=0.0,
        )

    @classmethod
    def gaussian_bump(cls, beta, width, decay_tol=1e-10):
        """Turning angle b(s) = beta * x * exp(-x^2), x = s / width.

        The curvature k_s = (beta / width)(1 - 2x^2) exp(-x^2) integrates to
        zero, so the meridian leaves the bump parallel to the r-axis and the
        hypersurface is asymptotically a hyperplane.
        """
        beta = float(beta)
        width = float(width)
        if width <= 0:
            raise ValueError("width must be positive")

        def k(s):
            x = np.asarray(s, dtype=float) / width
            return (beta / width) * (1.0 - 2.0 * x * x) * np.exp(-x * x)

        def b(s):
            x = np.asarray(s, dtype=float) / width
            return beta * x * np.exp(-x * x)

        # |k_s| <= (|beta|/w)(1 + 2x^2) e^{-x^2}; fixed point for the decay radius
        x = 1.0
        if beta != 0.0:
            for _ in range(60):
                x = math.sqrt(max(math.log(abs(beta) / width * (1.0 + 2.0 * x * x) / decay_tol), 1.0))
        return cls(
            "gaussian_bump",
            {"beta": beta, "width": width},
            decay_tol=decay_tol,
            _k=k,
            _b=b,
            _s_decay=x * width if beta != 0.0 else 0.0,
        )

    @classmethod
    def from_table(cls, s, k, decay_tol=1e-10, source=None):
        s = np.asarray(s, dtype=float)
        k = np.asarray(k, dtype=float)
        if s.ndim != 1 or s.shape != k.shape or s.size < 4:
            raise ValueError("table needs two equal-length columns with >= 4 rows")
        if abs(s[0]) > 1e-12:
            raise ValueError("table must start at s = 0")
        if np.any(np.diff(s) <= 0) or not np.all(np.isfinite(k)):
            raise ValueError("table nodes must increase and values be finite")
        spline = CubicSpline(s, k)
        anti = spline.antiderivative()
        lo, hi = float(s[0]), float(s[-1])

        def k_fn(t):
            t = np.asarray(t, dtype=float)
            if np.any(t > hi * (1 + 1e-12)) or np.any(t < lo):
                raise ValueError(f"table profile evaluated outside [0, {hi}]")
            return spline(np.clip(t, lo, hi))

        def b_fn(t):
            return anti(np.clip(np.asarray(t, dtype=float), lo, hi))

        big = np.nonzero(np.abs(k) > decay_tol)[0]
        s_decay = float(s[big[-1] + 1]) if big.size and big[-1] + 1 < s.size else (hi if big.size else 0.0)
        params = {"rows": int(s.size), "s_max": hi}
        if source is not None:
            params["path"] = str(source)
        return cls(
            "table", params, decay_tol=decay_tol, _k=k_fn, _b=b_fn, _s_decay=s_decay, _s_range=(lo, hi)
        )

    @classmethod
    def from_csv(cls, path, decay_tol=1e-10):
        """Two-column CSV (s, k_s); a non-numeric first row is taken as a header."""
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or not row[0].strip():
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    if rows:
                        raise
        if not rows:
            raise ValueError(f"no numeric rows in {path}")
        arr = np.asarray(rows, dtype=float)
        return cls.from_table(arr[:, 0], arr[:, 1], decay_tol=decay_tol, source=path)

    @classmethod
    def from_function(cls, k, name="function", s_decay=math.inf, turning_angle=None, **params):
        return cls(name, dict(params), _k=k, _b=turning_angle, _s_decay=float(s_decay))

    def k_s(self, s):
        vals = np.asarray(self._k(s), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise MeridianError(f"profile {self.family!r} is not finite on the requested nodes")
        return vals

    def turning_angle(self, s):
        """Closed-form b(s) when the family provides one, else None."""
        if self._b is None:
            return None
        return np.asarray(self._b(s), dtype=float)

    @property
    def s_decay(self):
        """Radius beyond which |k_s| stays below ``decay_tol``."""
        return self._s_decay

    @property
    def is_flat(self):
        return self.family == "flat" or (
            self.family == "gaussian_bump" and self.params["beta"] == 0.0
        )

    def mirrored(self):
        """The profile -k_s, whose meridian is (r, -z)."""
        if self.family == "flat":
            return self
        if self.family == "gaussian_bump":
            return CurvatureProfile.gaussian_bump(
                -self.params["beta"], self.params["width"], decay_tol=self.decay_tol
            )
        k, b = self._k, self._b
        return CurvatureProfile(
            self.family + "_mirror",
            dict(self.params),
            decay_tol=self.decay_tol,
            _k=lambda s: -np.asarray(k(s)),
            _b=None if b is None else (lambda s: -np.asarray(b(s))),
            _s_decay=self._s_decay,
            _s_range=self._s_range,
        )

    def to_dict(self):
        return {"family": self.family, **self.params}


@dataclass(frozen=True, eq=False)
class MeridianCurve:
    """Meridian (r, z) sampled on the uniform grid s = 0, h, ..., S_max."""

    s: np.ndarray
    r: np.ndarray
    z: np.ndarray
    b: np.ndarray
    h: float
    profile: CurvatureProfile

    @property
    def r_prime(self):
        return np.cos(self.b)

    @property
    def z_prime(self):
        return np.sin(self.b)

    @property
    def s_max(self):
        return float(self.s[-1])

    def node(self, s):
        """Index of the grid node nearest to ``s``."""
        return int(np.clip(round(float(s) / self.h), 0, self.s.size - 1))

    def sample(self, t):
        """Interpolated (r, b, k_s, k_theta) at arbitrary points inside the window."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.s_max * (1 + 1e-12)):
            raise ValueError("sample points must lie in [0, S_max]")
        r_sp, b_sp = self._splines()
        r = r_sp(t)
        b = b_sp(t)
        ks = self.profile.k_s(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            kt = np.where(t > 0.5 * self.h, np.sin(b) / r, 0.0)
        # sin(b)/r -> k_s(0) at the pole; series through second order near it
        near = t <= 0.5 * self.h
        if np.any(near):
            k0 = self.profile.k_s(np.zeros(1))[0]
            kt = np.where(near, k0 + 0.5 * (self.profile.k_s(t) - k0), kt)
        return r, b, ks, kt

    def _splines(self):
        cache = self.__dict__.get("_spl")
        if cache is None:
            cache = (CubicSpline(self.s, self.r), CubicSpline(self.s, self.b))
            object.__setattr__(self, "_spl", cache)
        return cache


@dataclass(frozen=True, eq=False)
class CurvaturePair:
    k_s: SampledFunction
    k_theta: SampledFunction

    @property
    def sup_k_s(self):
        return float(np.max(np.abs(self.k_s.values)))

    @property
    def sup_k_theta(self):
        return float(np.max(np.abs(self.k_theta.values)))

    @property
    def nodes(self):
        return self.k_s.nodes


def build_meridian(profile, s_max, h):
    """Integrate the meridian of ``profile`` on [0, s_max] with RK4 step ``h``.

    ``h`` is shrunk slightly if needed so that ``s_max`` is a grid node.
    Raises :class:`MeridianError` if r <= 0 at an interior node.
    """
    if s_max <= 0 or h <= 0:
        raise ValueError("s_max and h must be positive")
    n = int(math.ceil(s_max / h - 1e-9))
    h = s_max / n
    half = np.linspace(0.0, s_max, 2 * n + 1)
    try:
        k_half = profile.k_s(half)
    except MeridianError:
        raise
    except Exception as exc:  # profile callables are user code
        raise MeridianError(f"profile evaluation failed: {exc}") from exc
    b, r, z = meridian_rk4(np.ascontiguousarray(k_half), h)
    s = half[::2].copy()
    bad = np.nonzero(r[1:] <= R_FLOOR)[0]
    if bad.size:
        node = int(bad[0] + 1)
        raise MeridianError(
            f"meridian reaches the axis: r({s[node]:.6g}) = {r[node]:.3g} at node {node}", node=node
        )
    return MeridianCurve(s=s, r=r, z=z, b=b, h=h, profile=profile)


def principal_curvatures(curve, profile=None):
    """k_s from the profile and k_theta = z'/r on the curve's nodes.

    The pole is umbilic, so k_theta(0) is set to k_s(0).
    """
    profile = profile or curve.profile
    ks = profile.k_s(curve.s)
    if np.any(curve.r[1:] <= R_FLOOR):
        node = int(np.nonzero(curve.r[1:] <= R_FLOOR)[0][0] + 1)
        raise MeridianError(f"degenerate curve: r <= {R_FLOOR} at node {node}", node=node)
    kt = np.empty_like(ks)
    kt[0] = ks[0]
    kt[1:] = np.sin(curve.b[1:]) / curve.r[1:]
    return CurvaturePair(SampledFunction(curve.s, ks), SampledFunction(curve.s, kt))


def jacobi_residual(curve, pair):
    """max |r'' + k_s k_theta r| over interior nodes, r'' by central differences."""
    r = curve.r
    d2 = (r[2:] - 2.0 * r[1:-1] + r[:-2]) / curve.h**2
    res = d2 + pair.k_s.values[1:-1] * pair.k_theta.values[1:-1] * r[1:-1]
    return float(np.max(np.abs(res)))


@dataclass(frozen=True)
class FlatnessReport:
    verdict: str
    tail_sup: float
    decay_rate: float
    window: tuple
    tol: float
    note: str = ""

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "tail_sup": self.tail_sup,
            "decay_rate": self.decay_rate,
            "window": list(self.window),
            "tol": self.tol,
            "note": self.note,
        }


def asymptotic_flatness(pair, window=None, tol=1e-2, s_decay=None, floor=1e-14):
    """Check that max(|k_s|, |k_theta|) is small and decreasing on the tail window.

    The window defaults to the last decade [S/10, S]. The decay rate is the
    negated log-log slope of the curvature envelope; envelopes below
    ``floor`` count as vanishing.
    """
    s = pair.nodes
    s_top = float(s[-1])
    if window is None:
        window = (s_top / 10.0, s_top)
    mask = (s >= window[0]) & (s <= window[1]) & (s > 0)
    if mask.sum() < 8 or (s_decay is not None and s_top < s_decay):
        return FlatnessReport("inconclusive", math.nan, math.nan, tuple(window), tol, "window too short")
    env = np.maximum(np.abs(pair.k_s.values[mask]), np.abs(pair.k_theta.values[mask]))
    tail_sup = float(env.max())
    if tail_sup <= floor:
        return FlatnessReport("pass", tail_sup, math.inf, tuple(window), tol, "curvature vanishes")
    slope = float(np.polyfit(np.log(s[mask]), np.log(np.maximum(env, floor)), 1)[0])
    decreasing = slope < 0.0
    verdict = "pass" if (tail_sup <= tol and decreasing) else "fail"
    note = "" if decreasing else "curvature envelope not decreasing"
    return FlatnessReport(verdict, tail_sup, -slope, tuple(window), tol, note)


def rho_m(pair):
    """Inverse of the largest principal curvature; +inf for a hyperplane."""
    top = max(pair.sup_k_s, pair.sup_k_theta)
    return math.inf if top == 0.0 else 1.0 / top


def write_meridian_csv(path, curve, pair, max_rows=20001):
    """Meridian samples as CSV, thinned by a whole stride to at most ``max_rows`` rows."""
    stride = max(1, -(-(curve.s.size - 1) // (max_rows - 1)))
    idx = np.arange(0, curve.s.size, stride)
    if idx[-1] != curve.s.size - 1:
        idx = np.append(idx, curve.s.size - 1)
    cols = np.column_stack(
        [curve.s, curve.r, curve.z, curve.r_prime, curve.z_prime, curve.b, pair.k_s.values, pair.k_theta.values]
    )[idx]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "r", "z", "r_prime", "z_prime", "b", "k_s", "k_theta"])
        for row in cols:
            w.writerow([repr(float(v)) for v in row])
