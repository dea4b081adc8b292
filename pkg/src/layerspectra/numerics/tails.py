"""Integrals over [T, inf) split into a sampled finite part and a modelled tail."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .quadrature import integrate, simpson_with_error
from .sampled import SampledFunction

# values below this are treated as exactly vanishing tails
VANISHING = 1e-280


@dataclass(frozen=True)
class TailModel:
    """Decay model for the part of an integrand beyond the sampled window.

    ``kind`` is ``"power"`` (``|f| ~ coeff / t**power``), ``"vanishing"``
    (the samples are zero to working precision) or ``"bound"`` (a caller
    supplies ``bound(T)``, an upper bound on the tail integral from ``T``).
    """

    kind: str
    coeff: float = 0.0
    power: float = math.inf
    power_stderr: float = 0.0
    residual: float = 0.0
    window: tuple = (math.nan, math.nan)
    bound: object = field(default=None, compare=False, repr=False)

    @property
    def convergent(self):
        if self.kind in ("vanishing", "bound"):
            return True
        return self.power - 2.0 * self.power_stderr > 1.0

    @property
    def divergent(self):
        return self.kind == "power" and self.power + 2.0 * self.power_stderr <= 1.0

    def tail(self, start):
        """Tail integral from ``start`` and an error bound for it."""
        if self.kind == "vanishing":
            return 0.0, 0.0
        if self.kind == "bound":
            b = float(self.bound(start))
            return b, b
        if not self.convergent:
            return math.inf, math.inf
        p = self.power
        value = self.coeff * start ** (1.0 - p) / (p - 1.0)
        # spread from the fitted exponent's uncertainty and the fit residual
        p_lo = max(p - 2.0 * self.power_stderr, 1.0 + 1e-12)
        worst = self.coeff * start ** (1.0 - p_lo) / (p_lo - 1.0)
        err = abs(worst - value) + abs(value) * min(1.0, 2.0 * self.residual)
        return value, err


def fit_tail(nodes, values, window=None, floor=0.0):
    """Fit ``|f| ~ c t**-p`` by log-log least squares on the last decade.

    Samples at or below ``floor`` count as zero; pass a rounding-level floor
    when the integrand is known to die out inside the window.
    """
    t = np.asarray(nodes, dtype=float)
    y = np.abs(np.asarray(values, dtype=float))
    y = np.where(y <= floor, 0.0, y)
    if window is None:
        hi = t[-1]
        window = (max(hi / 10.0, t[0]), hi)
    mask = (t >= window[0]) & (t <= window[1]) & (t > 0)
    tw, yw = t[mask], y[mask]
    if tw.size < 4:
        raise ValueError("tail window holds fewer than 4 samples")
    if np.all(yw <= VANISHING):
        return TailModel("vanishing", window=tuple(window))
    keep = yw > VANISHING
    if keep.sum() < 4 or yw[-1] <= VANISHING:
        # decays to nothing inside the window
        return TailModel("vanishing", window=tuple(window))
    lt, ly = np.log(tw[keep]), np.log(yw[keep])
    A = np.vstack([np.ones_like(lt), lt]).T
    coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    pred = A @ coef
    resid = ly - pred
    dof = max(lt.size - 2, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    power = -float(coef[1])
    stderr = math.sqrt(max(cov[1, 1], 0.0))
    # anchor the amplitude on the last sample, the most tail-like point
    coeff = float(yw[keep][-1] * tw[keep][-1] ** power)
    return TailModel(
        "power",
        coeff=coeff,
        power=power,
        power_stderr=stderr,
        residual=float(np.max(np.abs(resid))),
        window=tuple(window),
    )


@dataclass(frozen=True)
class TailResult:
    finite_part: float
    finite_error: float
    tail: float
    tail_error: float
    model: TailModel
    convergent: bool

    @property
    def value(self):
        return self.finite_part + self.tail

    @property
    def error(self):
        return self.finite_error + self.tail_error


def tail_integral(f, model=None, lower=None):
    """Integrate a :class:`SampledFunction` from ``lower`` to infinity.

    The sampled range is integrated by adaptive quadrature of the
    interpolant (or Simpson when the grid is uniform and ``lower`` is a
    node); the rest comes from ``model``, fitted on the last decade when not
    given. A divergent model is a classification, not an error:
    ``convergent`` is False and the value is infinite.
    """
    if not isinstance(f, SampledFunction):
        raise TypeError("tail_integral expects a SampledFunction")
    lo, hi = f.domain
    start = lo if lower is None else float(lower)
    if model is None:
        model = fit_tail(f.nodes, f.values)

    nodes = f.nodes
    steps = np.diff(nodes)
    uniform = np.allclose(steps, steps[0], rtol=1e-9, atol=0.0)
    idx = np.searchsorted(nodes, start)
    on_node = idx < nodes.size and abs(nodes[idx] - start) <= 1e-12 * max(1.0, abs(start))
    if uniform and on_node:
        finite, ferr = simpson_with_error(f.values[idx:], float(steps[0]))
    else:
        finite, ferr = integrate(f, (start, hi), tol=1e-12, abs_floor=1e-300)
        # interpolation error is the dominant term off-grid
        ferr += 1e-10 * abs(finite)

    if model.divergent or not model.convergent:
        return TailResult(finite, ferr, math.inf, math.inf, model, False)
    tail, terr = model.tail(hi)
    return TailResult(finite, ferr, tail, terr, model, True)
