"""Macdonald functions K0 and K1 for positive real argument.

Two regimes meet at z = 2. Below it the ascending series (DLMF 10.31.1) is
summed directly. Above it K is computed in scaled form, e^z K(z), from
Steed's continued fraction (Temme's CF2), which is exact to rounding for all
z >= 2. The plain large-z asymptotic series is kept as
:func:`bessel_k_asymptotic` for cross-checks; it cannot reach 1e-10 at the
seam, so it is not on the production path.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from .._accel import njit, select
from .quadrature import integrate

EULER_GAMMA = 0.57721566490153286061
SEAM = 2.0
# exp(-z) underflows past this point
UNDERFLOW_Z = 745.0

_N_SERIES = 24
_MAX_CF = 200


class BesselUnderflowWarning(RuntimeWarning):
    """K(z) underflowed to zero for very large z."""


@njit(cache=True)
def _k01_scalar(z):
    # returns (k0, k1, scaled); scaled -> values are e^z K(z)
    if z <= 2.0:
        x = 0.25 * z * z
        lg = math.log(0.5 * z)
        term0 = 1.0
        term1 = 1.0
        i0 = 0.0
        s0 = 0.0
        i1 = 0.0
        s1 = 0.0
        hk = 0.0
        for k in range(60):
            if k > 0:
                hk += 1.0 / k
                term0 *= x / (k * k)
                term1 *= x / (k * (k + 1.0))
            hk1 = hk + 1.0 / (k + 1.0)
            i0 += term0
            s0 += hk * term0
            i1 += term1
            s1 += (hk + hk1 - 2.0 * EULER_GAMMA) * term1
            if term0 < 1e-18 * i0 and k > 2:
                break
        k0 = -(lg + EULER_GAMMA) * i0 + s0
        k1 = 1.0 / z + lg * (0.5 * z) * i1 - 0.25 * z * s1
        return k0, k1, False
    b = 2.0 * (1.0 + z)
    d = 1.0 / b
    h = d
    delh = d
    q1 = 0.0
    q2 = 1.0
    a1 = 0.25
    q = a1
    c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAX_CF):
        a -= 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < 1e-17:
            break
    h = a1 * h
    k0 = math.sqrt(math.pi / (2.0 * z)) / s
    k1 = k0 * (z + 0.5 - h) / z
    return k0, k1, True


@njit(cache=True)
def _k01_numba(z, scaled_out):
    n = z.size
    k0 = np.empty(n)
    k1 = np.empty(n)
    for j in range(n):
        a, b, is_scaled = _k01_scalar(z[j])
        if scaled_out and not is_scaled:
            f = math.exp(z[j])
            a *= f
            b *= f
        elif not scaled_out and is_scaled:
            f = math.exp(-z[j])
            a *= f
            b *= f
        k0[j] = a
        k1[j] = b
    return k0, k1


def _series_numpy(z):
    x = 0.25 * z * z
    lg = np.log(0.5 * z)
    term0 = np.ones_like(z)
    term1 = np.ones_like(z)
    i0 = np.zeros_like(z)
    s0 = np.zeros_like(z)
    i1 = np.zeros_like(z)
    s1 = np.zeros_like(z)
    hk = 0.0
    for k in range(_N_SERIES):
        if k > 0:
            hk += 1.0 / k
            term0 = term0 * x / (k * k)
            term1 = term1 * x / (k * (k + 1.0))
        hk1 = hk + 1.0 / (k + 1.0)
        i0 += term0
        s0 += hk * term0
        i1 += term1
        s1 += (hk + hk1 - 2.0 * EULER_GAMMA) * term1
    k0 = -(lg + EULER_GAMMA) * i0 + s0
    k1 = 1.0 / z + lg * (0.5 * z) * i1 - 0.25 * z * s1
    return k0, k1


def _cf2_numpy(z):
    b = 2.0 * (1.0 + z)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(z)
    q2 = np.ones_like(z)
    a1 = 0.25
    q = np.full_like(z, a1)
    c = a1
    a = -a1
    s = 1.0 + q * delh
    done = np.zeros(z.shape, dtype=bool)
    for i in range(2, _MAX_CF):
        a -= 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = np.where(done, 0.0, (b * d - 1.0) * delh)
        h = h + delh
        dels = q * delh
        s = s + dels
        done |= np.abs(dels / s) < 1e-17
        if done.all():
            break
    h = a1 * h
    k0 = np.sqrt(np.pi / (2.0 * z)) / s
    k1 = k0 * (z + 0.5 - h) / z
    return k0, k1


def _k01_numpy(z, scaled_out):
    k0 = np.empty_like(z)
    k1 = np.empty_like(z)
    small = z <= SEAM
    if small.any():
        a, b = _series_numpy(z[small])
        if scaled_out:
            f = np.exp(z[small])
            a, b = a * f, b * f
        k0[small], k1[small] = a, b
    big = ~small
    if big.any():
        a, b = _cf2_numpy(z[big])
        if not scaled_out:
            f = np.exp(-z[big])
            a, b = a * f, b * f
        k0[big], k1[big] = a, b
    return k0, k1


_k01_kernel = select(_k01_numba, _k01_numpy)


def _prepare(z):
    arr = np.asarray(z, dtype=float)
    flat = np.atleast_1d(arr).ravel()
    if np.any(~(flat > 0)):
        raise ValueError("Macdonald functions need z > 0")
    return arr, flat


def bessel_k01(z, scaled=False):
    """Return ``(K0(z), K1(z))``; with ``scaled=True`` return ``e^z K``."""
    arr, flat = _prepare(z)
    k0, k1 = _k01_kernel(np.ascontiguousarray(flat), bool(scaled))
    if not scaled and np.any(flat > UNDERFLOW_Z):
        warnings.warn(
            f"K(z) underflowed to 0 for z > {UNDERFLOW_Z}", BesselUnderflowWarning, stacklevel=2
        )
    if arr.ndim == 0:
        return float(k0[0]), float(k1[0])
    return k0.reshape(arr.shape), k1.reshape(arr.shape)


def bessel_k(order, z):
    """Macdonald function K_order(z) for order 0 or 1 and z > 0.

    Relative accuracy is better than 1e-10 on [1e-6, 700]. Beyond about
    z = 745 the result underflows to +0.0 and a
    :class:`BesselUnderflowWarning` is emitted.
    """
    if order not in (0, 1):
        raise ValueError("only orders 0 and 1 are implemented")
    k0, k1 = bessel_k01(z)
    return k0 if order == 0 else k1


def bessel_k_scaled(order, z):
    """``e^z K_order(z)``; never underflows."""
    if order not in (0, 1):
        raise ValueError("only orders 0 and 1 are implemented")
    k0, k1 = bessel_k01(z, scaled=True)
    return k0 if order == 0 else k1


def bessel_k_asymptotic(order, z, terms=30):
    """Large-z asymptotic series, summed up to its smallest term."""
    mu = 4.0 * order * order
    z = float(z)
    total = 1.0
    term = 1.0
    for k in range(1, terms + 1):
        nxt = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        if abs(nxt) > abs(term):
            break
        term = nxt
        total += term
    return math.sqrt(math.pi / (2.0 * z)) * math.exp(-z) * total


def bessel_k_integral(order, z, tol=1e-13):
    """Oracle: K_v(z) = int_0^inf exp(-z cosh t) cosh(v t) dt by quadrature."""
    z = float(z)
    if z <= 0:
        raise ValueError("z must be positive")
    upper = math.acosh(1.0 + 60.0 / z)

    def integrand(t):
        return np.exp(-z * (np.cosh(t) - 1.0)) * np.cosh(order * t)

    val, _ = integrate(integrand, (0.0, upper), tol=tol, abs_floor=0.0, max_panels=20000)
    return val * math.exp(-z)
