"""Functions held as samples on a strictly increasing grid."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline


@dataclass(frozen=True, eq=False)
class SampledFunction:
    nodes: np.ndarray
    values: np.ndarray
    order: str = "cubic"
    _spline: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("nodes and values must be 1-D arrays of equal length")
        if x.size < 2 or np.any(np.diff(x) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if not np.all(np.isfinite(y)):
            raise ValueError("values must be finite")
        if self.order not in ("linear", "cubic"):
            raise ValueError(f"unknown interpolation order {self.order!r}")
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "values", y)
        if self.order == "cubic" and x.size >= 4:
            object.__setattr__(self, "_spline", CubicSpline(x, y, bc_type="not-a-knot"))

    @property
    def domain(self):
        return float(self.nodes[0]), float(self.nodes[-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.domain
        span = hi - lo
        if np.any(t < lo - 1e-12 * span) or np.any(t > hi + 1e-12 * span):
            raise ValueError(f"evaluation outside [{lo}, {hi}]")
        t = np.clip(t, lo, hi)
        if self._spline is not None:
            return self._spline(t)
        return np.interp(t, self.nodes, self.values)

    def derivative(self, t, nu=1):
        if self._spline is None:
            raise ValueError("derivatives need cubic interpolation with >= 4 nodes")
        lo, hi = self.domain
        return self._spline(np.clip(np.asarray(t, dtype=float), lo, hi), nu)
