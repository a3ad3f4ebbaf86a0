"""Vectorized float64 interval arithmetic with outward rounding.

Each arithmetic result is computed in round-to-nearest and then pushed one
ulp outward with ``nextafter``, which encloses the exact result.  ``exp`` and
``log`` come from the platform libm; their results are widened by
``LIBM_ULPS`` units in the last place.
"""

from __future__ import annotations

import numpy as np

LIBM_ULPS = 4
EPS = np.finfo(float).eps
TINY = np.finfo(float).smallest_subnormal
_NEG = -np.inf
_POS = np.inf


def down(x):
    return np.nextafter(x, _NEG)


def up(x):
    return np.nextafter(x, _POS)


class IV:
    """Interval array [lo, hi] (elementwise)."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = np.asarray(lo, dtype=float)
        self.lo = lo
        self.hi = lo if hi is None else np.asarray(hi, dtype=float)

    @classmethod
    def exact(cls, x) -> "IV":
        x = np.asarray(x, dtype=float)
        return cls(x, x)

    @classmethod
    def zeros(cls, shape) -> "IV":
        z = np.zeros(shape)
        return cls(z, z)

    def __add__(self, other):
        if isinstance(other, IV):
            return IV(down(self.lo + other.lo), up(self.hi + other.hi))
        return IV(down(self.lo + other), up(self.hi + other))

    __radd__ = __add__

    def __neg__(self):
        return IV(-self.hi, -self.lo)

    def __sub__(self, other):
        if isinstance(other, IV):
            return IV(down(self.lo - other.hi), up(self.hi - other.lo))
        return IV(down(self.lo - other), up(self.hi - other))

    def __mul__(self, other):
        if isinstance(other, IV):
            a, b, c, d = self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi
            lo = np.minimum(np.minimum(a, b), np.minimum(c, d))
            hi = np.maximum(np.maximum(a, b), np.maximum(c, d))
            return IV(down(lo), up(hi))
        a, b = self.lo * other, self.hi * other
        return IV(down(np.minimum(a, b)), up(np.maximum(a, b)))

    __rmul__ = __mul__

    def reciprocal_positive(self) -> "IV":
        """1/x for intervals with lo > 0."""
        return IV(down(1.0 / self.hi), up(1.0 / self.lo))

    def abs_upper(self) -> np.ndarray:
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def __getitem__(self, key) -> "IV":
        return IV(self.lo[key], self.hi[key])

    @property
    def shape(self):
        return self.lo.shape


def widen(lo: np.ndarray, hi: np.ndarray, ulps: int = LIBM_ULPS) -> IV:
    return IV(lo - ulps * np.spacing(np.abs(lo)), hi + ulps * np.spacing(np.abs(hi)))


def log_positive(x: IV) -> IV:
    return widen(np.log(x.lo), np.log(x.hi))


def exp(x: IV) -> IV:
    out = widen(np.exp(x.lo), np.exp(x.hi))
    return IV(np.maximum(out.lo, 0.0), out.hi)


def exact_scalar(q) -> IV:
    """Enclosure of an exact rational (Fraction or int) by neighbouring floats."""
    from fractions import Fraction

    q = Fraction(q)
    f = float(q)
    if Fraction(f) == q:
        return IV.exact(f)
    lo = f if Fraction(f) < q else float(down(f))
    hi = f if Fraction(f) > q else float(up(f))
    return IV.exact(lo) if lo == hi else IV(np.float64(lo), np.float64(hi))


def _sum_error(count: int, abs_sum: np.ndarray) -> np.ndarray:
    """Bound on |computed - exact| for a float sum of ``count`` terms with sum of |terms| ``abs_sum``."""
    gamma = (count + 2) * EPS
    return up(up(gamma * abs_sum) * (1 + 4 * EPS) + (count + 2) * TINY)


def segment_sum(x: IV, starts: np.ndarray, counts: np.ndarray) -> IV:
    """Rigorous sums of consecutive row segments (axis 0) of an interval array."""
    lo = np.add.reduceat(x.lo, starts, axis=0)
    hi = np.add.reduceat(x.hi, starts, axis=0)
    lo_abs = np.add.reduceat(np.abs(x.lo), starts, axis=0)
    hi_abs = np.add.reduceat(np.abs(x.hi), starts, axis=0)
    c = counts.reshape((-1,) + (1,) * (x.lo.ndim - 1))
    return IV(down(lo - _sum_error(c, lo_abs)), up(hi + _sum_error(c, hi_abs)))


def nonneg_matmul(weights: np.ndarray, x: IV) -> IV:
    """weights @ x for an entrywise nonnegative, exactly representable matrix."""
    lo = weights @ x.lo
    hi = weights @ x.hi
    count = weights.shape[1]
    lo_err = _sum_error(count, weights @ np.abs(x.lo))
    hi_err = _sum_error(count, weights @ np.abs(x.hi))
    return IV(down(lo - lo_err), up(hi + hi_err))


# -- truncated Taylor series with interval coefficients ----------------------

def series_mul(a: list, b: list, order: int) -> list:
    out = []
    for k in range(order + 1):
        acc = a[0] * b[k]
        for i in range(1, k + 1):
            acc = acc + a[i] * b[k - i]
        out.append(acc)
    return out


def series_horner(coefs: np.ndarray, y: list, order: int) -> list:
    """Evaluate the polynomial sum_j coefs[..., j] * Y**j on a series Y.

    ``coefs`` has the polynomial degree on its last axis and broadcasts
    against the coefficient arrays of ``y``.
    """
    deg = coefs.shape[-1] - 1
    zero = IV.zeros(np.broadcast(y[0].lo, coefs[..., 0]).shape)
    acc = [IV.exact(np.broadcast_to(coefs[..., deg], zero.shape).copy())] + [zero] * order
    for j in range(deg - 1, -1, -1):
        acc = series_mul(acc, y, order)
        acc[0] = acc[0] + coefs[..., j]
    return acc
