"""Shared numerical kernels: quadrature, RK4, Macdonald functions, tails."""
from .bessel import (
    BesselUnderflowWarning,
    bessel_k,
    bessel_k01,
    bessel_k_asymptotic,
    bessel_k_integral,
    bessel_k_scaled,
)
from .ode import rk4_path, solve_ivp
from .quadrature import cumulative, gauss_legendre, integrate, simpson, simpson_with_error
from .sampled import SampledFunction
from .tails import TailModel, TailResult, fit_tail, tail_integral

__all__ = [
    "BesselUnderflowWarning",
    "SampledFunction",
    "TailModel",
    "TailResult",
    "bessel_k",
    "bessel_k01",
    "bessel_k_asymptotic",
    "bessel_k_integral",
    "bessel_k_scaled",
    "cumulative",
    "fit_tail",
    "gauss_legendre",
    "integrate",
    "rk4_path",
    "simpson",
    "simpson_with_error",
    "solve_ivp",
    "tail_integral",
]
