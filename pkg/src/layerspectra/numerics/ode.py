"""Fixed-step classical Runge-Kutta integration on a prescribed grid."""
from __future__ import annotations

import numpy as np

from ..errors import IntegrationBlowup
from .sampled import SampledFunction


def rk4_path(rhs, y0, grid):
    """Integrate ``y' = rhs(t, y)`` with one RK4 step per grid interval.

    Returns the state at every grid node as an array of shape
    ``(len(grid), len(y0))``.
    """
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
        raise ValueError("grid must be strictly increasing with >= 2 nodes")
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    out = np.empty((t.size, y.size))
    out[0] = y
    for i in range(t.size - 1):
        h = t[i + 1] - t[i]
        ti = t[i]
        k1 = np.asarray(rhs(ti, y), dtype=float)
        k2 = np.asarray(rhs(ti + 0.5 * h, y + 0.5 * h * k1), dtype=float)
        k3 = np.asarray(rhs(ti + 0.5 * h, y + 0.5 * h * k2), dtype=float)
        k4 = np.asarray(rhs(ti + h, y + h * k3), dtype=float)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationBlowup(
                f"state blew up between t={ti!r} and t={ti + h!r}", last_valid=i
            )
        out[i + 1] = y
    return out


def solve_ivp(rhs, y0, grid, order="cubic"):
    """RK4 solution sampled on ``grid``, one :class:`SampledFunction` per component."""
    path = rk4_path(rhs, y0, grid)
    t = np.asarray(grid, dtype=float)
    return [SampledFunction(t, path[:, j], order=order) for j in range(path.shape[1])]
