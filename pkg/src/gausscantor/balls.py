"""Rigorous real enclosures backed by Arb ball arithmetic (python-flint).

A BallInterval carries its own working precision.  Every operation runs at
the larger precision of its operands and returns an enclosure of the exact
result.  Comparisons are three-valued: ``True``/``False`` when decided,
``None`` when the enclosures overlap.
"""

from __future__ import annotations

import contextlib
from decimal import Decimal
from fractions import Fraction
from typing import Optional, Union

from flint import arb, ctx, fmpq, fmpz

DEFAULT_PRECISION = 128

Number = Union[int, Fraction, "BallInterval"]


@contextlib.contextmanager
def working_precision(bits: int):
    old = ctx.prec
    ctx.prec = bits
    try:
        yield
    finally:
        ctx.prec = old


def _arb_to_fraction(x: arb) -> Fraction:
    man, exp = x.man_exp()
    man, exp = int(man), int(exp)
    return Fraction(man * 2**exp) if exp >= 0 else Fraction(man, 2**-exp)


def parse_exact(text: str) -> Fraction:
    """Parse '3.3343', '1/63', '2/3619' or '9.71e-6' into an exact rational."""
    text = text.strip()
    if "/" in text:
        num, den = text.split("/")
        return parse_exact(num) / parse_exact(den)
    return Fraction(Decimal(text))


class BallInterval:
    """Enclosure [lo, hi] of a real number."""

    __slots__ = ("_b", "precision_bits")

    def __init__(self, value, precision_bits: int = DEFAULT_PRECISION):
        self.precision_bits = precision_bits
        with working_precision(precision_bits):
            if isinstance(value, arb):
                self._b = value
            elif isinstance(value, BallInterval):
                self._b = value._b
            elif isinstance(value, Fraction):
                self._b = arb(fmpq(value.numerator, value.denominator))
            elif isinstance(value, int):
                self._b = arb(fmpz(value))
            elif isinstance(value, str):
                self._b = arb(fmpq(*_pair(parse_exact(value))))
            else:
                raise TypeError(f"cannot build a ball from {type(value).__name__}")

    @classmethod
    def hull(cls, lo: "BallInterval", hi: "BallInterval") -> "BallInterval":
        prec = max(lo.precision_bits, hi.precision_bits)
        with working_precision(prec):
            return cls(lo._b.union(hi._b), prec)

    @classmethod
    def sqrt_of(cls, value, precision_bits: int = DEFAULT_PRECISION) -> "BallInterval":
        return cls(value, precision_bits).sqrt()

    # -- endpoint access -------------------------------------------------
    @property
    def lo(self) -> Fraction:
        with working_precision(self.precision_bits):
            return _arb_to_fraction(self._b.lower())

    @property
    def hi(self) -> Fraction:
        with working_precision(self.precision_bits):
            return _arb_to_fraction(self._b.upper())

    @property
    def mid(self) -> Fraction:
        return _arb_to_fraction(self._b.mid())

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def __float__(self) -> float:
        return float(self._b.mid())

    @property
    def arb(self) -> arb:
        return self._b

    # -- arithmetic ------------------------------------------------------
    def _coerce(self, other) -> "BallInterval":
        if isinstance(other, BallInterval):
            return other
        return BallInterval(other, self.precision_bits)

    def _binary(self, other, op) -> "BallInterval":
        other = self._coerce(other)
        prec = max(self.precision_bits, other.precision_bits)
        with working_precision(prec):
            return BallInterval(op(self._b, other._b), prec)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binary(other, lambda a, b: b / a)

    def __neg__(self):
        return BallInterval(-self._b, self.precision_bits)

    def _unary(self, fn) -> "BallInterval":
        with working_precision(self.precision_bits):
            return BallInterval(fn(self._b), self.precision_bits)

    def sqrt(self):
        return self._unary(lambda a: a.sqrt())

    def exp(self):
        return self._unary(lambda a: a.exp())

    def log(self):
        return self._unary(lambda a: a.log())

    def __pow__(self, exponent):
        """Real power of a positive ball, computed as exp(s*log(x))."""
        if isinstance(exponent, int):
            with working_precision(self.precision_bits):
                return BallInterval(self._b**exponent, self.precision_bits)
        s = self._coerce(exponent)
        prec = max(self.precision_bits, s.precision_bits)
        with working_precision(prec):
            return BallInterval((s._b * self._b.log()).exp(), prec)

    # -- three-valued comparisons -----------------------------------------
    def less_than(self, other) -> Optional[bool]:
        other = self._coerce(other)
        if self._b < other._b:
            return True
        if self._b >= other._b:
            return False
        return None

    def greater_than(self, other) -> Optional[bool]:
        other = self._coerce(other)
        if self._b > other._b:
            return True
        if self._b <= other._b:
            return False
        return None

    def contains(self, other) -> bool:
        """True when the enclosure provably contains ``other`` (number or ball)."""
        return bool(self._b.contains(self._coerce(other)._b))

    def within(self, lo, hi) -> bool:
        """True when the whole enclosure provably lies inside [lo, hi]."""
        return self.greater_or_equal(lo) is True and self.less_or_equal(hi) is True

    def less_or_equal(self, other) -> Optional[bool]:
        other = self._coerce(other)
        if self._b <= other._b:
            return True
        if self._b > other._b:
            return False
        return None

    def greater_or_equal(self, other) -> Optional[bool]:
        other = self._coerce(other)
        if self._b >= other._b:
            return True
        if self._b < other._b:
            return False
        return None

    def overlaps(self, other) -> bool:
        return bool(self._b.overlaps(self._coerce(other)._b))

    def union(self, other) -> "BallInterval":
        return self._binary(other, lambda a, b: a.union(b))

    def decimal_bounds(self, digits: int = 12) -> tuple[str, str]:
        """Decimal strings rounded outward: (floor of lo, ceiling of hi)."""
        scale = 10**digits
        lo, hi = self.lo, self.hi
        lo_i = (lo.numerator * scale) // lo.denominator
        hi_i = -((-hi.numerator * scale) // hi.denominator)
        return _fixed(lo_i, digits), _fixed(hi_i, digits)

    def __repr__(self) -> str:
        lo, hi = self.decimal_bounds(15)
        return f"BallInterval([{lo}, {hi}], prec={self.precision_bits})"


def _pair(q: Fraction) -> tuple[int, int]:
    return q.numerator, q.denominator


def _fixed(value: int, digits: int) -> str:
    sign = "-" if value < 0 else ""
    value = abs(value)
    whole, frac = divmod(value, 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"
