import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from gausscantor.sets import base_words, load_set, parse_set_text
from gausscantor.subshift import ForbiddenSet, allowed_words, compatible, reduced_markov


def brute_allowed(words, alphabet_max, n):
    strs = ["".join(map(str, w)) for w in words]
    out = []
    for digits in itertools.product(range(1, alphabet_max + 1), repeat=n):
        s = "".join(map(str, digits))
        if not any(f in s for f in strs):
            out.append(digits)
    return out


def brute_compatible(a, b, words):
    # only windows that straddle the junction can be new
    joined = "".join(map(str, a + b))
    for f in ("".join(map(str, w)) for w in words):
        for start in range(len(joined) - len(f) + 1):
            if start < len(a) < start + len(f) and joined[start:start + len(f)] == f:
                return False
    return True


forbidden_lists = st.lists(
    st.lists(st.integers(1, 2), min_size=2, max_size=5).map(tuple), min_size=1, max_size=4
)


@settings(max_examples=50, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])
@given(forbidden_lists, st.booleans(), st.integers(0, 4))
def test_reduced_matrix_expands_to_brute_force(words, reverses, extra):
    F = ForbiddenSet.build(words, include_reverses=reverses)
    n = min(F.default_n + extra, 8)
    expected_words = brute_allowed(F.words, 2, n)
    assume(expected_words)
    rm, A = reduced_markov(F, n)
    assert A.words == [tuple(w) for w in expected_words]
    brute = np.array([[brute_compatible(a, b, F.words) for b in expected_words] for a in expected_words])
    assert (rm.expand() == brute).all()
    assert rm.K <= F.suffix_count() + 1


def test_empty_set_counts():
    rm, A = reduced_markov(ForbiddenSet.build([]), 10)
    assert (len(A), rm.K) == (1024, 1)


def test_normalization_drops_superwords():
    F = ForbiddenSet.build(["121", "11211", "2"], alphabet_max=3, include_reverses=False)
    assert F.words == ((2,),)
    F = ForbiddenSet.build(["12", "112"], include_reverses=True)
    assert F.words == ((1, 2), (2, 1))


def test_compatible_matches_brute_force():
    F = ForbiddenSet.build(["1221", "212"])
    for a in itertools.product((1, 2), repeat=3):
        for b in itertools.product((1, 2), repeat=3):
            assert compatible(a, b, F) == brute_compatible(a, b, F.words)


def test_every_allowed_word_avoids_forbidden():
    F = load_set("B1")
    A = allowed_words(F)
    assert len(A) > 0
    for w in A.words[:: max(1, len(A) // 200)]:
        s = "".join(map(str, w))
        assert not any("".join(map(str, f)) in s for f in F.words)


@pytest.mark.parametrize("name, listed, closed", [("B1", 14, 26), ("B2", 16, 30), ("X", 24, 46), ("Y", 25, 48), ("E2", 0, 0)])
def test_builtin_sets(name, listed, closed):
    assert len(base_words(name)) == listed
    assert len(load_set(name)) == closed


def test_builtin_suffix_bound(b1_markov):
    rm, _ = b1_markov
    assert rm.K <= load_set("B1").suffix_count() + 1


def test_set_file_format():
    words, amax, rev = parse_set_text("alphabet_max 3\ninclude_reverses false\n# c\n123\n31\n")
    assert (words, amax, rev) == (["123", "31"], 3, False)
    with pytest.raises(ValueError):
        parse_set_text("12a\n")
