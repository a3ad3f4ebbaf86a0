"""Compiled interval kernel for the image functions.

Computes, for every row class and every piece, the Taylor coefficients of
sum_a f_{C(a)}(T_a x) |T_a'(x)|^t with outward-rounded scalar interval
arithmetic.  Sums are accumulated in round-to-nearest together with the sum
of absolute values, so the caller can add the standard summation error bound.
Mirrors ``ImageFamily._word_terms`` in the numpy route.
"""

from __future__ import annotations

import numba
import numpy as np

EPS = np.finfo(float).eps
TINY = 5e-324
LIBM_ULPS = 4.0
# c - (PHI*|c| + TINY) evaluated in round-to-nearest is at most the
# floating-point predecessor of c (and symmetrically for the successor).
PHI = 2.0**-53 * (1 + 2.0**-52)


@numba.njit(inline="always")
def _dn(x):
    return x - (PHI * abs(x) + TINY)


@numba.njit(inline="always")
def _up(x):
    return x + (PHI * abs(x) + TINY)


@numba.njit(inline="always")
def _mul(alo, ahi, blo, bhi):
    p1 = alo * blo
    p2 = alo * bhi
    p3 = ahi * blo
    p4 = ahi * bhi
    return _dn(min(min(p1, p2), min(p3, p4))), _up(max(max(p1, p2), max(p3, p4)))


@numba.njit(inline="always")
def _libm_lo(x):
    return _dn(x - (LIBM_ULPS * EPS * abs(x) + TINY))


@numba.njit(inline="always")
def _libm_hi(x):
    return _up(x + (LIBM_ULPS * EPS * abs(x) + TINY))


@numba.njit(nogil=True, cache=True)
def image_row_sums(pc, pp, qc, qp, det, poly, rows, n_rows, x_lo, x_hi, s_lo, s_hi, binom_lo, binom_hi, order):
    n_words = pc.shape[0]
    n_sub = x_lo.shape[0]
    deg = poly.shape[1] - 1
    n1 = order + 1
    sum_lo = np.zeros((n1, n_rows, n_sub))
    sum_hi = np.zeros((n1, n_rows, n_sub))
    abs_lo = np.zeros((n1, n_rows, n_sub))
    abs_hi = np.zeros((n1, n_rows, n_sub))
    y_lo = np.empty(n1)
    y_hi = np.empty(n1)
    w_lo = np.empty(n1)
    w_hi = np.empty(n1)
    a_lo = np.empty(n1)
    a_hi = np.empty(n1)
    b_lo = np.empty(n1)
    b_hi = np.empty(n1)
    for s in range(n_sub):
        xl = x_lo[s]
        xh = x_hi[s]
        for a in range(n_words):
            # denominators and values at the two ends (T_a is monotone)
            dl_lo = _dn(qc[a] + _dn(qp[a] * xl))
            dl_hi = _up(qc[a] + _up(qp[a] * xl))
            dh_lo = _dn(qc[a] + _dn(qp[a] * xh))
            dh_hi = _up(qc[a] + _up(qp[a] * xh))
            nl_lo = _dn(pc[a] + _dn(pp[a] * xl))
            nl_hi = _up(pc[a] + _up(pp[a] * xl))
            nh_lo = _dn(pc[a] + _dn(pp[a] * xh))
            nh_hi = _up(pc[a] + _up(pp[a] * xh))
            yl_lo = _dn(nl_lo / dl_hi)
            yl_hi = _up(nl_hi / dl_lo)
            yh_lo = _dn(nh_lo / dh_hi)
            yh_hi = _up(nh_hi / dh_lo)
            y_lo[0] = min(yl_lo, yh_lo)
            y_hi[0] = max(yl_hi, yh_hi)
            d_lo = dl_lo
            d_hi = dh_hi
            inv_lo = _dn(1.0 / d_hi)
            inv_hi = _up(1.0 / d_lo)
            r_lo = _dn(qp[a] * inv_lo)
            r_hi = _up(qp[a] * inv_hi)
            i2_lo = _dn(inv_lo * inv_lo)
            i2_hi = _up(inv_hi * inv_hi)
            mag_lo = i2_lo
            mag_hi = i2_hi
            sign = det[a]
            for k in range(1, n1):
                if sign > 0:
                    y_lo[k] = mag_lo
                    y_hi[k] = mag_hi
                else:
                    y_lo[k] = -mag_hi
                    y_hi[k] = -mag_lo
                mag_lo = _dn(mag_lo * r_lo)
                mag_hi = _up(mag_hi * r_hi)
                sign = -sign
            lg_lo = _libm_lo(np.log(d_lo))
            lg_hi = _libm_hi(np.log(d_hi))
            e_lo, e_hi = _mul(s_lo, s_hi, lg_lo, lg_hi)
            w_lo[0] = max(_libm_lo(np.exp(e_lo)), 0.0)
            w_hi[0] = _libm_hi(np.exp(e_hi))
            p_lo = r_lo
            p_hi = r_hi
            for k in range(1, n1):
                m_lo = _dn(p_lo * w_lo[0])
                m_hi = _up(p_hi * w_hi[0])
                w_lo[k], w_hi[k] = _mul(binom_lo[k], binom_hi[k], m_lo, m_hi)
                p_lo = _dn(p_lo * r_lo)
                p_hi = _up(p_hi * r_hi)
            # Horner on the series y
            c = poly[a, deg]
            a_lo[0] = c
            a_hi[0] = c
            for k in range(1, n1):
                a_lo[k] = 0.0
                a_hi[k] = 0.0
            for j in range(deg - 1, -1, -1):
                for k in range(n1):
                    acc_lo, acc_hi = _mul(a_lo[0], a_hi[0], y_lo[k], y_hi[k])
                    for i in range(1, k + 1):
                        t_lo, t_hi = _mul(a_lo[i], a_hi[i], y_lo[k - i], y_hi[k - i])
                        acc_lo = _dn(acc_lo + t_lo)
                        acc_hi = _up(acc_hi + t_hi)
                    b_lo[k] = acc_lo
                    b_hi[k] = acc_hi
                c = poly[a, j]
                a_lo[0] = _dn(b_lo[0] + c)
                a_hi[0] = _up(b_hi[0] + c)
                for k in range(1, n1):
                    a_lo[k] = b_lo[k]
                    a_hi[k] = b_hi[k]
            row = rows[a]
            for k in range(n1):
                acc_lo, acc_hi = _mul(a_lo[0], a_hi[0], w_lo[k], w_hi[k])
                for i in range(1, k + 1):
                    t_lo, t_hi = _mul(a_lo[i], a_hi[i], w_lo[k - i], w_hi[k - i])
                    acc_lo = _dn(acc_lo + t_lo)
                    acc_hi = _up(acc_hi + t_hi)
                sum_lo[k, row, s] += acc_lo
                sum_hi[k, row, s] += acc_hi
                abs_lo[k, row, s] += abs(acc_lo)
                abs_hi[k, row, s] += abs(acc_hi)
    return sum_lo, sum_hi, abs_lo, abs_hi
