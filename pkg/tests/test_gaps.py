from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from gausscantor.cf import continuants
from gausscantor.gaps import (
    check_fixture_line,
    constants_sum,
    cylinder_ratio,
    parse_gap_fixture,
    ratio_function,
    ratio_sup,
    verify_gap,
)

words = st.lists(st.integers(1, 4), min_size=1, max_size=6).map(tuple)
prefixes = st.lists(st.integers(1, 5), min_size=1, max_size=10).map(tuple)


@settings(max_examples=100, deadline=None)
@given(prefixes, words)
def test_ratio_matches_exact_cylinders(prefix, w):
    q, q_prev = continuants(prefix)
    assert ratio_function(w)(Fraction(q_prev, q)) == cylinder_ratio(prefix, w)


@pytest.mark.parametrize("word, coefficients", [
    ("2131", (5, 14, 9, 25)),
    ("331312", (53, 173, 72, 235)),
    ("1", (1, 1, 1, 2)),
])
def test_ratio_coefficients(word, coefficients):
    f = ratio_function(tuple(int(c) for c in word))
    assert (f.c1, f.d1, f.c2, f.d2) == coefficients


def test_single_digit_one_is_half_at_most():
    result = verify_gap(["1"], 1)
    assert result.certified
    assert result.sup_bound.hi - Fraction(1, 2) < Fraction(1, 10**7)
    assert result.sup_lower.lo <= Fraction(1, 2)


def test_uncertifiable_family():
    # a small exponent pushes each term close to 1
    result = verify_gap(["1", "2"], "0.1")
    assert not result.certified
    assert result.sup_lower.lo > 1


@settings(max_examples=30, deadline=None)
@given(words)
def test_ratio_sup_dominates_samples(w):
    f = ratio_function(w)
    sup = ratio_sup(w)
    for k in range(0, 21):
        assert f(Fraction(k, 20)) <= sup.hi


def test_constants_sum():
    total = constants_sum(["0.5", "0.25"], 1)
    assert total.contains(Fraction(3, 4))


def test_fixture_line_parsing_and_flags():
    lines = parse_gap_fixture("# c\nx 1 words=231 constants=0.00254\n")
    check = check_fixture_line(lines[0])
    assert check.passed
    assert check.constant_discrepancies and check.constant_discrepancies[0][0] == "231"
    with pytest.raises(ValueError, match="line 1"):
        parse_gap_fixture("x 1 bogus=3\n")


def test_stated_bound_is_enforced():
    line = parse_gap_fixture("x 1 words=1 bound=0.4\n")[0]
    assert not check_fixture_line(line).passed
