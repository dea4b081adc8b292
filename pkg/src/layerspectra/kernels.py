"""Hot loops, each with a numba kernel and a numpy twin.

``LAYERSPECTRA_NO_NUMBA=1`` selects the numpy twins; both must agree to
rounding (the test-suite runs them side by side).
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import njit, select

# ---------------------------------------------------------------- meridian


@njit(cache=True)
def _meridian_rk4_numba(k_half, h):
    n = (k_half.size - 1) // 2
    b = np.zeros(n + 1)
    r = np.zeros(n + 1)
    z = np.zeros(n + 1)
    for i in range(n):
        k1 = k_half[2 * i]
        k2 = k_half[2 * i + 1]
        k3 = k_half[2 * i + 2]
        bi = b[i]
        b1 = bi
        b2 = bi + 0.5 * h * k1
        b3 = bi + 0.5 * h * k2
        b4 = bi + h * k2
        b[i + 1] = bi + (h / 6.0) * (k1 + 4.0 * k2 + k3)
        r[i + 1] = r[i] + (h / 6.0) * (
            math.cos(b1) + 2.0 * math.cos(b2) + 2.0 * math.cos(b3) + math.cos(b4)
        )
        z[i + 1] = z[i] + (h / 6.0) * (
            math.sin(b1) + 2.0 * math.sin(b2) + 2.0 * math.sin(b3) + math.sin(b4)
        )
    return b, r, z


def _meridian_rk4_numpy(k_half, h):
    k1 = k_half[0:-1:2]
    k2 = k_half[1::2]
    k3 = k_half[2::2]
    n = k2.size
    b = np.zeros(n + 1)
    b[1:] = np.cumsum((h / 6.0) * (k1 + 4.0 * k2 + k3))
    bi = b[:-1]
    b2 = bi + 0.5 * h * k1
    b3 = bi + 0.5 * h * k2
    b4 = bi + h * k2
    dr = (h / 6.0) * (np.cos(bi) + 2.0 * np.cos(b2) + 2.0 * np.cos(b3) + np.cos(b4))
    dz = (h / 6.0) * (np.sin(bi) + 2.0 * np.sin(b2) + 2.0 * np.sin(b3) + np.sin(b4))
    r = np.zeros(n + 1)
    z = np.zeros(n + 1)
    r[1:] = np.cumsum(dr)
    z[1:] = np.cumsum(dz)
    return b, r, z


# RK4 for (b, r, z)' = (k_s, cos b, sin b). ``k_half`` holds k_s at
# s = 0, h/2, h, ... (2n+1 entries for n steps); the b-component reduces to
# Simpson's rule on those samples.
meridian_rk4 = select(_meridian_rk4_numba, _meridian_rk4_numpy)

# ---------------------------------------------------------- segment tests


@njit(cache=True)
def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


@njit(cache=True)
def _seg_hit(p, q, i, j):
    # strict crossing of segments p[i]-q[i] and p[j]-q[j]; shared endpoints do not count
    d1 = _orient(p[j, 0], p[j, 1], q[j, 0], q[j, 1], p[i, 0], p[i, 1])
    d2 = _orient(p[j, 0], p[j, 1], q[j, 0], q[j, 1], q[i, 0], q[i, 1])
    d3 = _orient(p[i, 0], p[i, 1], q[i, 0], q[i, 1], p[j, 0], p[j, 1])
    d4 = _orient(p[i, 0], p[i, 1], q[i, 0], q[i, 1], q[j, 0], q[j, 1])
    return ((d1 > 0.0 and d2 < 0.0) or (d1 < 0.0 and d2 > 0.0)) and (
        (d3 > 0.0 and d4 < 0.0) or (d3 < 0.0 and d4 > 0.0)
    )


@njit(cache=True)
def _pairs_hit_numba(p, q, ii, jj):
    out = np.zeros(ii.size, dtype=np.bool_)
    for k in range(ii.size):
        out[k] = _seg_hit(p, q, ii[k], jj[k])
    return out


def _pairs_hit_numpy(p, q, ii, jj):
    def orient(a, b, c):
        return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])

    pi, qi, pj, qj = p[ii], q[ii], p[jj], q[jj]
    d1 = orient(pj, qj, pi)
    d2 = orient(pj, qj, qi)
    d3 = orient(pi, qi, pj)
    d4 = orient(pi, qi, qj)
    return (((d1 > 0) & (d2 < 0)) | ((d1 < 0) & (d2 > 0))) & (
        ((d3 > 0) & (d4 < 0)) | ((d3 < 0) & (d4 > 0))
    )


# proper-crossing test for segment pairs (p[ii], q[ii]) x (p[jj], q[jj])
segment_pairs_hit = select(_pairs_hit_numba, _pairs_hit_numpy)


@njit(cache=True)
def _all_pairs_numba(p, q, skip_adjacent):
    n = p.shape[0]
    for i in range(n):
        for j in range(i + 1 + skip_adjacent, n):
            if _seg_hit(p, q, i, j):
                return i, j
    return -1, -1


def _all_pairs_numpy(p, q, skip_adjacent):
    n = p.shape[0]
    for i in range(n):
        jj = np.arange(i + 1 + skip_adjacent, n)
        if jj.size == 0:
            continue
        hit = _pairs_hit_numpy(p, q, np.full(jj.size, i), jj)
        if hit.any():
            return i, int(jj[np.argmax(hit)])
    return -1, -1


# O(n^2) oracle: first crossing pair (i, j) with j > i + skip, else (-1, -1)
first_crossing_bruteforce = select(_all_pairs_numba, _all_pairs_numpy)

# -------------------------------------------------------------- assembly


@njit(cache=True)
def _faces_numba(p, q, wt, n_diag):
    # each face (p, q, wt) adds wt * (psi_p - psi_q)^2 to the energy; -1 marks a
    # Dirichlet node whose value is zero
    m = p.size
    rows = np.empty(2 * m, dtype=np.int64)
    cols = np.empty(2 * m, dtype=np.int64)
    vals = np.empty(2 * m)
    diag = np.zeros(n_diag)
    k = 0
    for f in range(m):
        a, b, w = p[f], q[f], wt[f]
        if a >= 0:
            diag[a] += w
        if b >= 0:
            diag[b] += w
        if a >= 0 and b >= 0:
            rows[k] = a
            cols[k] = b
            vals[k] = -w
            rows[k + 1] = b
            cols[k + 1] = a
            vals[k + 1] = -w
            k += 2
    return rows[:k], cols[:k], vals[:k], diag


def _faces_numpy(p, q, wt, n_diag):
    diag = np.bincount(p[p >= 0], weights=wt[p >= 0], minlength=n_diag)
    diag = diag + np.bincount(q[q >= 0], weights=wt[q >= 0], minlength=n_diag)
    both = (p >= 0) & (q >= 0)
    a, b, w = p[both], q[both], wt[both]
    # interleave (a, b), (b, a) to mirror the loop's order exactly
    rows = np.empty(2 * a.size, dtype=np.int64)
    cols = np.empty(2 * a.size, dtype=np.int64)
    vals = np.empty(2 * a.size)
    rows[0::2], rows[1::2] = a, b
    cols[0::2], cols[1::2] = b, a
    vals[0::2] = vals[1::2] = -w
    return rows, cols, vals, diag


# off-diagonal triplets and diagonal of a face-weighted graph Laplacian
face_triplets = select(_faces_numba, _faces_numpy)
