"""Adaptive composite Gauss-Legendre quadrature and fixed-grid rules."""
from __future__ import annotations

import heapq
import math

import numpy as np
from scipy.integrate import cumulative_simpson

from ..errors import QuadratureError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(15)

ABS_FLOOR = 1e-300


def gauss_legendre(n):
    """Return (nodes, weights) of the ``n``-point Gauss-Legendre rule on [-1, 1]."""
    return np.polynomial.legendre.leggauss(n)


def _panel(f, lo, hi):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    vals = np.asarray(f(mid + half * _GL_NODES), dtype=float)
    if vals.shape != _GL_NODES.shape:
        vals = np.broadcast_to(vals, _GL_NODES.shape)
    if not np.all(np.isfinite(vals)):
        raise QuadratureError(
            f"integrand not finite on [{lo!r}, {hi!r}]", estimate=math.nan, error=math.inf
        )
    return half * float(np.dot(_GL_WEIGHTS, vals))


def _refined(f, lo, hi):
    mid = 0.5 * (lo + hi)
    left = _panel(f, lo, mid)
    right = _panel(f, mid, hi)
    return left + right, left, right


def integrate(f, interval, tol=1e-12, abs_floor=1e-15, max_panels=4000, grade=0):
    """Integrate a vectorized ``f`` over ``interval`` with global adaptive bisection.

    Every panel is scored by comparing a 15-point rule on the whole panel to
    the sum over its two halves; the worst panel is split until the summed
    estimate drops below ``tol * |value| + abs_floor``.

    Parameters
    ----------
    f : callable
        Vectorized integrand, called with 1-D arrays of abscissae.
    interval : tuple of float
        Finite ``(lo, hi)`` with ``lo < hi``.
    tol : float
        Relative tolerance.
    abs_floor : float
        Absolute error floor, needed for integrals whose value is ~0.
    max_panels : int
        Refinement budget.
    grade : int
        Number of geometric pre-splits toward ``lo``; use it for integrands
        with an integrable log singularity at the left endpoint.

    Returns
    -------
    value : float
    error : float
        Estimated absolute error.

    Raises
    ------
    QuadratureError
        If the budget is exhausted; carries the best estimate and error.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if tol <= 0:
        raise ValueError("tol must be positive")

    edges = [lo, hi]
    if grade > 0:
        width = hi - lo
        edges = [lo] + [lo + width * 2.0 ** (-k) for k in range(grade, 0, -1)] + [hi]

    heap = []
    total = 0.0
    err_total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        coarse = _panel(f, a, b)
        fine, _, _ = _refined(f, a, b)
        err = abs(fine - coarse)
        heapq.heappush(heap, (-err, a, b, fine))
        total += fine
        err_total += err

    n_panels = len(heap)
    while err_total > tol * abs(total) + abs_floor:
        if n_panels >= max_panels:
            raise QuadratureError(
                f"no convergence after {n_panels} panels", estimate=total, error=err_total
            )
        neg_err, a, b, fine = heapq.heappop(heap)
        total -= fine
        err_total += neg_err
        mid = 0.5 * (a + b)
        for c, d in ((a, mid), (mid, b)):
            coarse = _panel(f, c, d)
            sub, _, _ = _refined(f, c, d)
            e = abs(sub - coarse)
            heapq.heappush(heap, (-e, c, d, sub))
            total += sub
            err_total += e
        n_panels += 1
        # the running sums drift; resum occasionally
        if n_panels % 256 == 0:
            total = math.fsum(item[3] for item in heap)
            err_total = math.fsum(-item[0] for item in heap)

    total = math.fsum(item[3] for item in heap)
    err_total = math.fsum(-item[0] for item in heap)
    return total, err_total


def simpson(values, h):
    """Composite Simpson rule on a uniform grid.

    An odd number of intervals is handled by a 3/8 rule on the last three.
    """
    y = np.asarray(values, dtype=float)
    n = y.size - 1
    if n < 1:
        return 0.0
    if n == 1:
        return 0.5 * h * (y[0] + y[1])
    if n == 2:
        return h / 3.0 * (y[0] + 4.0 * y[1] + y[2])
    if n % 2 == 0:
        return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())
    head = y[:-3]
    tail = y[-4:]
    m = head.size - 1
    part = h / 3.0 * (head[0] + head[-1] + 4.0 * head[1:-1:2].sum() + 2.0 * head[2:-1:2].sum()) if m else 0.0
    return part + 3.0 * h / 8.0 * (tail[0] + 3.0 * tail[1] + 3.0 * tail[2] + tail[3])


def simpson_with_error(values, h):
    """Simpson value plus an error bound from the rule on every other node.

    The bound is the full difference ``|S_h - S_2h|`` (not divided by 15),
    plus a rounding floor, so it stays conservative when the integrand is
    under-resolved.
    """
    y = np.asarray(values, dtype=float)
    fine = simpson(y, h)
    if y.size >= 5:
        if (y.size - 1) % 2 == 0:
            coarse = simpson(y[::2], 2.0 * h)
        else:
            coarse = simpson(y[:-1][::2], 2.0 * h) + 0.5 * h * (y[-2] + y[-1])
        err = abs(fine - coarse)
    else:
        err = abs(fine)
    rounding = 8.0 * np.finfo(float).eps * h * float(np.abs(y).sum())
    return fine, err + rounding


def cumulative(values, h):
    """Cumulative integral from the first node, fourth-order accurate."""
    y = np.asarray(values, dtype=float)
    out = np.zeros_like(y)
    if y.size < 3:
        out[1:] = 0.5 * h * np.cumsum(y[1:] + y[:-1])
        return out
    out[1:] = cumulative_simpson(y, dx=h)
    return out
