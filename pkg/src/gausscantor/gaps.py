"""Cylinder-ratio inequalities for the Cantor sets living in the gaps.

For a prefix b with continuants q_n, q_{n-1} and r = q_{n-1}/q_n, appending a
word w shrinks the cylinder by

    |I(b, w)| / |I(b)| = (1 + r) / ((c1 r + d1) (c2 r + d2))

with integer coefficients depending only on w.  A finite family of
continuations W has gap dimension below s once sup_r sum_w ratio(w, r)^s < 1.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from flint import arb

from .balls import DEFAULT_PRECISION, BallInterval, parse_exact, working_precision
from .cf import continuants, parse_word, word_str

MAX_DEPTH = 40


@dataclass(frozen=True)
class RatioFunction:
    """r -> (1 + r) / ((c1 r + d1)(c2 r + d2))."""

    word: tuple
    c1: int
    d1: int
    c2: int
    d2: int

    def __call__(self, r):
        if isinstance(r, (int, Fraction)):
            r = Fraction(r)
            return (1 + r) / ((self.c1 * r + self.d1) * (self.c2 * r + self.d2))
        return (1 + r) / ((self.c1 * r + self.d1) * (self.c2 * r + self.d2))

    def enclose(self, lo: arb, hi: arb) -> tuple[arb, arb]:
        """Lower and upper balls for the ratio over r in [lo, hi] (both factors grow with r)."""
        upper = (1 + hi) / ((self.c1 * lo + self.d1) * (self.c2 * lo + self.d2))
        lower = (1 + lo) / ((self.c1 * hi + self.d1) * (self.c2 * hi + self.d2))
        return lower, upper

    def __str__(self) -> str:
        return f"(r+1)/(({self.c1}r+{self.d1})({self.c2}r+{self.d2}))"


def ratio_function(w: Sequence[int]) -> RatioFunction:
    w = tuple(w)
    if not w:
        raise ValueError("continuation word must be nonempty")
    shorter = w[:-1]
    k = continuants(w)[0]
    k_tail = continuants(w[1:])[0]
    k_short = continuants(shorter)[0]
    # a one-digit word loses everything when its first digit is dropped
    k_short_tail = continuants(shorter[1:])[0] if shorter else 0
    return RatioFunction(w, k_tail, k, k_tail + k_short_tail, k + k_short)


def cylinder_ratio(prefix: Sequence[int], w: Sequence[int]) -> Fraction:
    """Exact |I(prefix, w)| / |I(prefix)| from continuants."""
    from .cf import cylinder_length

    return cylinder_length(tuple(prefix) + tuple(w)) / cylinder_length(tuple(prefix))


@dataclass
class GapInequality:
    continuation_words: tuple
    exponent: Fraction
    certified: bool
    sup_bound: BallInterval
    sup_lower: BallInterval
    pieces: int

    def summary(self) -> str:
        words = ",".join(word_str(w) for w in self.continuation_words)
        verdict = "certified" if self.certified else "NOT certified"
        return f"s={self.exponent} words={words} sup<={self.sup_bound.decimal_bounds(8)[1]} {verdict}"


def _power(x: arb, s: arb) -> arb:
    return (s * x.log()).exp()


def _sum_bounds(funcs, s: arb, lo: arb, hi: arb) -> tuple[arb, arb]:
    total_lo = arb(0)
    total_hi = arb(0)
    for f in funcs:
        a, b = f.enclose(lo, hi)
        total_lo += _power(a, s)
        total_hi += _power(b, s)
    return total_lo, total_hi


def verify_gap(
    words: Iterable,
    s,
    tolerance: str = "1e-7",
    max_depth: int = MAX_DEPTH,
    precision_bits: int = DEFAULT_PRECISION,
) -> GapInequality:
    """Rigorous upper bound for sup over r in [0, 1] of sum_w ratio(w, r)^s.

    Branch and bound on r: an interval is dropped once its upper bound is
    within ``tolerance`` of the best value seen at a sample point.
    """
    words = tuple(parse_word(w) if isinstance(w, str) else tuple(w) for w in words)
    if not words:
        raise ValueError("need at least one continuation word")
    s = parse_exact(str(s)) if not isinstance(s, Fraction) else s
    funcs = [ratio_function(w) for w in words]
    tol = parse_exact(tolerance)
    with working_precision(precision_bits):
        s_ball = arb(s.numerator) / s.denominator
        tol_ball = arb(tol.numerator) / tol.denominator
        best = arb(0)
        for r in (arb(0), arb(1)):
            point, _ = _sum_bounds(funcs, s_ball, r, r)
            best = point if point.lower() > best.lower() else best
        heap = [(0.0, 0, 0, Fraction(0), Fraction(1))]
        counter = 1
        leaves_hi = []
        pieces = 0
        while heap:
            _, _, depth, a, b = heapq.heappop(heap)
            lo_r = arb(a.numerator) / a.denominator
            hi_r = arb(b.numerator) / b.denominator
            _, high = _sum_bounds(funcs, s_ball, lo_r, hi_r)
            sample, _ = _sum_bounds(funcs, s_ball, lo_r, lo_r)
            pieces += 1
            if sample.lower() > best.lower():
                best = sample
            if (high - tol_ball).upper() <= best.lower() or depth >= max_depth:
                leaves_hi.append(high)
                continue
            m = (a + b) / 2
            for x, y in ((a, m), (m, b)):
                heapq.heappush(heap, (-float(high.upper()), counter, depth + 1, x, y))
                counter += 1
        sup_hi = leaves_hi[0].upper()
        for h in leaves_hi[1:]:
            if h.upper() > sup_hi:
                sup_hi = h.upper()
        sup_bound = BallInterval(sup_hi, precision_bits)
        sup_lower = BallInterval(best.lower(), precision_bits)
    certified = sup_bound.less_than(1) is True
    return GapInequality(words, s, certified, sup_bound, sup_lower, pieces)


def verify_gap_constants(bounds: Iterable, s, precision_bits: int = DEFAULT_PRECISION) -> bool:
    """Rigorous check that sum c_i^s < 1 for decimal or fractional constants c_i in (0, 1)."""
    return constants_sum(bounds, s, precision_bits).less_than(1) is True


def constants_sum(bounds: Iterable, s, precision_bits: int = DEFAULT_PRECISION) -> BallInterval:
    s = parse_exact(str(s))
    total = BallInterval(0, precision_bits)
    for c in bounds:
        c = parse_exact(str(c))
        if not 0 < c < 1:
            raise ValueError(f"constant {c} outside (0, 1)")
        total = total + BallInterval(c, precision_bits) ** BallInterval(s, precision_bits)
    return total


def ratio_sup(w: Sequence[int], precision_bits: int = DEFAULT_PRECISION) -> BallInterval:
    """Enclosure of max over r in [0, 1] of ratio(w, r)."""
    f = ratio_function(w)
    # the derivative's numerator is a quadratic in r; the max sits at an
    # endpoint or at its root in (0, 1)
    a = -f.c1 * f.c2
    b = -2 * f.c1 * f.c2
    c = f.d1 * f.d2 - f.c1 * f.d2 - f.c2 * f.d1
    candidates = [Fraction(0), Fraction(1)]
    values = [BallInterval(f(x), precision_bits) for x in candidates]
    disc = b * b - 4 * a * c
    if a != 0 and disc >= 0:
        root_disc = BallInterval(disc, precision_bits).sqrt()
        for sign in (1, -1):
            r = (BallInterval(-b, precision_bits) + root_disc * sign) / (2 * a)
            if r.greater_than(0) is not False and r.less_than(1) is not False:
                values.append((r + 1) / ((r * f.c1 + f.d1) * (r * f.c2 + f.d2)))
    best = values[0]
    for v in values[1:]:
        if v.hi > best.hi:
            best = v
    return best


@dataclass
class GapFixtureLine:
    line_number: int
    label: str
    exponent: str
    words: tuple
    constants: tuple
    bound: Optional[str]
    expected: bool


def parse_gap_fixture(text: str) -> list[GapFixtureLine]:
    """Whitespace-separated lines: label exponent words=a,b [constants=x,y] [bound=z] expect=true."""
    lines = []
    for n, raw in enumerate(text.splitlines(), start=1):
        raw = raw.split("#", 1)[0].strip()
        if not raw:
            continue
        label, exponent, *fields = raw.split()
        opts = {}
        for field in fields:
            if "=" not in field:
                raise ValueError(f"line {n}: expected key=value, got {field!r}")
            key, value = field.split("=", 1)
            opts[key] = value
        unknown = set(opts) - {"words", "constants", "bound", "expect"}
        if unknown:
            raise ValueError(f"line {n}: unknown fields {sorted(unknown)}")
        if "words" not in opts and "constants" not in opts:
            raise ValueError(f"line {n}: needs words= or constants=")
        words = tuple(parse_word(w) for w in opts["words"].split(",")) if "words" in opts else ()
        constants = tuple(opts["constants"].split(",")) if "constants" in opts else ()
        expected = opts.get("expect", "true").lower() == "true"
        lines.append(GapFixtureLine(n, label, exponent, words, constants, opts.get("bound"), expected))
    return lines


@dataclass
class GapCheck:
    line: GapFixtureLine
    word_result: Optional[GapInequality]
    constant_sum: Optional[BallInterval]
    constant_ok: Optional[bool]
    bound_ok: Optional[bool]
    constant_discrepancies: list

    @property
    def passed(self) -> bool:
        primary = self.word_result.certified if self.word_result is not None else self.constant_ok
        return primary == self.line.expected and self.bound_ok is not False

    def report(self) -> str:
        parts = [f"line {self.line.line_number} {self.line.label} s={self.line.exponent}"]
        if self.word_result is not None:
            parts.append(f"sup<={self.word_result.sup_bound.decimal_bounds(8)[1]}")
            parts.append("words certified" if self.word_result.certified else "words NOT certified")
        if self.constant_sum is not None:
            parts.append(f"constant sum<={self.constant_sum.decimal_bounds(8)[1]}")
        if self.bound_ok is False:
            parts.append(f"exceeds stated bound {self.line.bound}")
        for word, const, sup in self.constant_discrepancies:
            parts.append(f"constant {const} for {word} is below sup ratio {sup}")
        parts.append("PASS" if self.passed else "FAIL")
        return " ".join(parts)


def check_fixture_line(line: GapFixtureLine, precision_bits: int = DEFAULT_PRECISION) -> GapCheck:
    word_result = verify_gap(line.words, line.exponent, precision_bits=precision_bits) if line.words else None
    constant_sum = None
    constant_ok = None
    discrepancies = []
    if line.constants:
        constant_sum = constants_sum(line.constants, line.exponent, precision_bits)
        constant_ok = constant_sum.less_than(1) is True
        if len(line.constants) == len(line.words):
            for w, c in zip(line.words, line.constants):
                sup = ratio_sup(w, precision_bits)
                if sup.greater_than(parse_exact(c)) is True:
                    discrepancies.append((word_str(w), c, sup.decimal_bounds(6)[1]))
    bound_ok = None
    if line.bound is not None:
        limit = parse_exact(line.bound)
        total = word_result.sup_bound if word_result is not None else constant_sum
        bound_ok = total.less_than(limit) is True
    return GapCheck(line, word_result, constant_sum, constant_ok, bound_ok, discrepancies)
