"""Compiled inner loops for the flux recurrences and the explicit update.

All reductions run in a fixed sequential order, so results are
reproducible bit for bit on a given platform.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def ordered_sum(v):
    s = 0.0
    for i in range(v.size):
        s += v[i]
    return s


@njit(cache=True, inline="always")
def _row_dot(M, r, v, lo, hi):
    # four interleaved partial sums: fixed order, so still bit-reproducible
    s0 = 0.0
    s1 = 0.0
    s2 = 0.0
    s3 = 0.0
    k = lo
    while k + 3 < hi:
        s0 += M[r, k] * v[k]
        s1 += M[r, k + 1] * v[k + 1]
        s2 += M[r, k + 2] * v[k + 2]
        s3 += M[r, k + 3] * v[k + 3]
        k += 4
    while k < hi:
        s0 += M[r, k] * v[k]
        k += 1
    return (s0 + s1) + (s2 + s3)


@njit(cache=True)
def coag_terms(cd, x, K, GT, rate, gain):
    """Per-cell coagulation loss rates and gains.

    ``cd = c * dx`` and ``GT[j, i] = gamma_{i,j}`` (the transposed table).
    ``rate[i] = sum_{k >= gamma_{i,i}} K[i,k] cd[k]`` so the mass leaving
    cell ``i`` across its right edge is ``x[i] cd[i] rate[i]``; ``gain[i]``
    collects pairs ``(j < i, k)`` whose merged mass crosses the left edge but
    not the right edge of cell ``i``.
    """
    n = cd.size
    for i in range(n):
        rate[i] = _row_dot(K, i, cd, GT[i, i], n)
        gain[i] = 0.0
    # j outermost walks row j of K and GT contiguously; each gain[i] still
    # accumulates its j terms in increasing order
    for j in range(n):
        wj = x[j] * cd[j]
        if wj == 0.0:
            continue
        for i in range(j + 1, n):
            lo = GT[j, i - 1]
            hi = GT[j, i]
            if hi > lo:
                s = 0.0
                for k in range(lo, hi):
                    s += K[j, k] * cd[k]
                gain[i] += wj * s


@njit(cache=True)
def coag_terms_shifted(cd, x, K, rate, gain):
    """:func:`coag_terms` for tables with ``gamma_{i,j} = i - j``.

    Each birth range then holds the single partner ``k = i - 1 - j``; the
    per-cell sums are bit-identical to the general routine.
    """
    n = cd.size
    for i in range(n):
        rate[i] = _row_dot(K, i, cd, 0, n)
        gain[i] = 0.0
    for j in range(n - 1):
        wj = x[j] * cd[j]
        if wj == 0.0:
            continue
        for m in range(n - 1 - j):
            gain[j + 1 + m] += wj * (K[j, m] * cd[m])


@njit(cache=True)
def frag_gain(cd, xdx, SB, gain):
    """``gain[i] = x_i dx_i sum_{k > i} S_k B_{i,k} cd[k]`` with ``SB[i,k] = S_k B_{i,k}``."""
    n = cd.size
    for i in range(n):
        gain[i] = xdx[i] * _row_dot(SB, i, cd, i + 1, n)


@njit(cache=True)
def interface_fluxes(cd, x, rate_c, gain_c, lam, gain_f, C, F):
    """Accumulate interface fluxes from the per-cell terms, left to right."""
    n = cd.size
    C[0] = 0.0
    F[0] = 0.0
    for i in range(n):
        C[i + 1] = C[i] + x[i] * cd[i] * rate_c[i] - gain_c[i]
        F[i + 1] = F[i] + gain_f[i] - cd[i] * lam[i]
    F[n] = 0.0


@njit(cache=True)
def split_update(c, x, dx, rate_c, gain_c, lam, gain_f, dt, out):
    """``out = c (1 - dt * loss_rate) + dt * gain / (dx x)``; returns the min entry."""
    n = c.size
    lo = np.inf
    for i in range(n):
        v = c[i] * (1.0 - dt * (rate_c[i] + lam[i] / x[i])) + dt * (gain_c[i] + gain_f[i]) / (dx[i] * x[i])
        out[i] = v
        if v < lo:
            lo = v
    return lo
