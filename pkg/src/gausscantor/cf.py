"""Continued-fraction primitives.

Words are tuples of positive ints.  A pointed word marks one position as the
zeroth digit; in text form the marked digit is the one immediately before the
asterisk, so ``212*12`` has three digits up to and including position zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .balls import DEFAULT_PRECISION, BallInterval

Word = tuple


def parse_word(text: str) -> Word:
    text = text.strip()
    if not text:
        return ()
    if not text.isdigit() or "0" in text:
        raise ValueError(f"not a digit word: {text!r}")
    return tuple(int(c) for c in text)


def word_str(w: Sequence[int]) -> str:
    return "".join(str(d) for d in w)


def check_alphabet(w: Iterable[int], alphabet_max: int) -> None:
    for d in w:
        if not 1 <= d <= alphabet_max:
            raise ValueError(f"digit {d} outside alphabet 1..{alphabet_max}")


@dataclass(frozen=True)
class PointedWord:
    word: Word
    zero_index: int

    def __post_init__(self):
        if not 0 <= self.zero_index < len(self.word):
            raise ValueError("zero_index must point inside the word")

    @classmethod
    def parse(cls, text: str) -> "PointedWord":
        text = text.replace(" ", "")
        if text.count("*") != 1:
            raise ValueError(f"pointed word needs exactly one '*': {text!r}")
        left, right = text.split("*")
        return cls(parse_word(left + right), len(left) - 1)

    @property
    def left_count(self) -> int:
        return self.zero_index

    @property
    def right_count(self) -> int:
        return len(self.word) - self.zero_index - 1

    def reversed(self) -> "PointedWord":
        return PointedWord(tuple(reversed(self.word)), len(self.word) - 1 - self.zero_index)

    def extend(self, side: str, digit: int) -> "PointedWord":
        if side == "R":
            return PointedWord(self.word + (digit,), self.zero_index)
        if side == "L":
            return PointedWord((digit,) + self.word, self.zero_index + 1)
        raise ValueError(f"side must be 'L' or 'R', got {side!r}")

    def trim(self, side: str) -> "PointedWord":
        if side == "R":
            if self.right_count == 0:
                raise ValueError("nothing to trim on the right")
            return PointedWord(self.word[:-1], self.zero_index)
        if self.left_count == 0:
            raise ValueError("nothing to trim on the left")
        return PointedWord(self.word[1:], self.zero_index - 1)

    def __str__(self) -> str:
        s = word_str(self.word)
        return s[: self.zero_index + 1] + "*" + s[self.zero_index + 1 :]


def continuants(w: Sequence[int]) -> tuple[int, int]:
    """Return (K(w), K(w without its last digit)) with K(empty)=1, K_prev(empty)=0."""
    k_prev, k = 0, 1
    for a in w:
        k_prev, k = k, a * k + k_prev
    return k, k_prev


def continuant(w: Sequence[int]) -> int:
    return continuants(w)[0]


def cylinder_length(w: Sequence[int]) -> Fraction:
    if len(w) == 0:
        raise ValueError("cylinder of the empty word is undefined")
    q, q_prev = continuants(w)
    return Fraction(1, q * (q + q_prev))


@dataclass(frozen=True)
class MoebiusMap:
    """x -> (p_cur + p_prev*x) / (q_cur + q_prev*x)."""

    p_prev: int
    p_cur: int
    q_prev: int
    q_cur: int

    @property
    def determinant(self) -> int:
        return self.p_prev * self.q_cur - self.p_cur * self.q_prev

    def __call__(self, x):
        if isinstance(x, (int, Fraction)):
            return Fraction(self.p_cur + self.p_prev * x, 1) / (self.q_cur + self.q_prev * x)
        return (self.p_cur + self.p_prev * x) / (self.q_cur + self.q_prev * x)

    def derivative_abs(self, x):
        """|T'(x)| = 1/(q_cur + q_prev*x)**2 since the determinant is +-1."""
        d = self.q_cur + self.q_prev * x
        if isinstance(d, (int, Fraction)):
            return Fraction(1, 1) / (d * d)
        return 1 / (d * d)

    def then(self, other: "MoebiusMap") -> "MoebiusMap":
        """The composition self(other(x))."""
        return MoebiusMap(
            p_prev=self.p_cur * other.p_prev + self.p_prev * other.q_prev,
            p_cur=self.p_cur * other.p_cur + self.p_prev * other.q_cur,
            q_prev=self.q_cur * other.p_prev + self.q_prev * other.q_prev,
            q_cur=self.q_cur * other.p_cur + self.q_prev * other.q_cur,
        )


IDENTITY = MoebiusMap(p_prev=1, p_cur=0, q_prev=0, q_cur=1)


def compose(w: Sequence[int]) -> MoebiusMap:
    """T_{w1} o ... o T_{wn} with T_a(x) = 1/(a+x)."""
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    for a in w:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
    return MoebiusMap(p_prev=p_prev, p_cur=p, q_prev=q_prev, q_cur=q)


@dataclass(frozen=True)
class TailSpec:
    """Eventually periodic digit tail: preperiod followed by period repeated forever."""

    preperiod: Word
    period: Word

    def __post_init__(self):
        if not self.period:
            raise ValueError("period must be nonempty")

    @classmethod
    def parse(cls, text: str) -> "TailSpec":
        """'3(1312)' means preperiod 3 then 1312 repeated; '(12)' is purely periodic."""
        text = text.replace(" ", "")
        if "(" not in text:
            raise ValueError(f"tail needs a parenthesised period: {text!r}")
        pre, rest = text.split("(", 1)
        return cls(parse_word(pre), parse_word(rest.rstrip(")")))


ONE_TWO = TailSpec((), (1, 2))
TWO_ONE = TailSpec((), (2, 1))


def periodic_fixed_point(period: Sequence[int], precision_bits: int = DEFAULT_PRECISION) -> BallInterval:
    """[0; period, period, ...] as the positive root of the fixed-point quadratic."""
    g = compose(period)
    # q_prev*y^2 + (q_cur - p_prev)*y - p_cur = 0
    b = g.q_cur - g.p_prev
    disc = b * b + 4 * g.q_prev * g.p_cur
    root = BallInterval(disc, precision_bits).sqrt()
    return (root - b) / (2 * g.q_prev)


def eval_periodic(tail: TailSpec, precision_bits: int = DEFAULT_PRECISION) -> BallInterval:
    """Enclosure of [0; preperiod, period, period, ...]."""
    y = periodic_fixed_point(tail.period, precision_bits)
    if not tail.preperiod:
        return y
    return compose(tail.preperiod)(y)


def lambda0(
    left: TailSpec,
    center: PointedWord,
    right: TailSpec,
    precision_bits: int = DEFAULT_PRECISION,
) -> BallInterval:
    """[a0; a1, a2, ...] + [0; a_-1, a_-2, ...].

    ``left`` lists the digits beyond the left end of ``center`` reading away
    from the zero position; ``right`` continues past the right end.
    """
    w, z = center.word, center.zero_index
    right_tail = eval_periodic(right, precision_bits)
    forward = w[z + 1 :]
    front = compose(forward)(right_tail) if forward else right_tail
    left_tail = eval_periodic(left, precision_bits)
    backward = tuple(reversed(w[:z]))
    back = compose(backward)(left_tail) if backward else left_tail
    return front + back + w[z]


def _j_tails(pw: PointedWord, upper: bool) -> tuple[TailSpec, TailSpec]:
    right_even = pw.right_count % 2 == 0
    left_even = pw.left_count % 2 == 0
    right = ONE_TWO if right_even == upper else TWO_ONE
    left = ONE_TWO if left_even == upper else TWO_ONE
    return left, right


def J_bound(pw: PointedWord, upper: bool, precision_bits: int = DEFAULT_PRECISION) -> BallInterval:
    left, right = _j_tails(pw, upper)
    return lambda0(left, pw, right, precision_bits)


def J_interval(pw: PointedWord, precision_bits: int = DEFAULT_PRECISION) -> BallInterval:
    """Enclosure of the hull of lambda0 over all {1,2}-extensions of ``pw``."""
    check_alphabet(pw.word, 2)
    lo = J_bound(pw, upper=False, precision_bits=precision_bits)
    hi = J_bound(pw, upper=True, precision_bits=precision_bits)
    return BallInterval.hull(lo, hi)


def J_endpoints(pw: PointedWord, precision_bits: int = DEFAULT_PRECISION) -> tuple[BallInterval, BallInterval]:
    """Separate enclosures of the lower and the upper end of J(pw)."""
    check_alphabet(pw.word, 2)
    return (
        J_bound(pw, upper=False, precision_bits=precision_bits),
        J_bound(pw, upper=True, precision_bits=precision_bits),
    )


def side_gaps(pw: PointedWord, precision_bits: int = 64) -> tuple[float, float]:
    """Width contributed by the unknown left and right tails of ``pw``."""
    w, z = pw.word, pw.zero_index
    forward = compose(w[z + 1 :]) if pw.right_count else None
    backward = compose(tuple(reversed(w[:z]))) if pw.left_count else None
    a = eval_periodic(ONE_TWO, precision_bits)
    b = eval_periodic(TWO_ONE, precision_bits)

    def spread(g):
        if g is None:
            return float(a - b)
        return abs(float(g(a) - g(b)))

    return spread(backward), spread(forward)
