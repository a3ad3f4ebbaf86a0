"""End-to-end acceptance checks, one group per criterion.

Each group records its parts; the terminal summary prints a single PASS, FAIL
or SKIP line per criterion.  Reference figures are asserted as given, so a
mismatch shows up here as a failure rather than being adjusted away.
"""

import random
from collections import OrderedDict
from fractions import Fraction
from importlib import resources

import numpy as np
import pytest

from gausscantor.certifier import Direction, bisect_dimension, certify_at
from gausscantor.cf import J_endpoints, PointedWord, TailSpec, continuants, lambda0
from gausscantor.gaps import check_fixture_line, cylinder_ratio, parse_gap_fixture, ratio_function
from gausscantor.search import check_table_fixture, parse_table_fixture, verify_table_row
from gausscantor.sets import load_set
from gausscantor.subshift import ForbiddenSet, compatible, reduced_markov
from gausscantor.transfer import assemble_reduced_Bt, block, chebyshev_basis, leading_eig

TITLES = {
    1: "allowed-word and class counts",
    2: "B1 eigenvalue and certificates",
    3: "B2 certificates",
    4: "OMEGA bracket",
    5: "E2 baseline",
    6: "X and Y eigenvalue estimates",
    7: "interval tables",
    8: "gap inequalities",
    9: "property suites",
}

RESULTS: "OrderedDict[int, list]" = OrderedDict()


def record(criterion, part, ok, detail=""):
    RESULTS.setdefault(criterion, []).append((part, ok, detail))
    return ok


def summary_lines():
    lines = []
    for n in sorted(TITLES):
        parts = RESULTS.get(n)
        if not parts:
            lines.append(f"criterion {n} ({TITLES[n]}): NOT RUN")
            continue
        if all(ok is None for _, ok, _ in parts):
            status = "SKIP"
        else:
            status = "PASS" if all(ok is not False for _, ok, _ in parts) else "FAIL"
        failed = [f"{p}: {d}" for p, ok, d in parts if ok is False]
        tail = f" [{'; '.join(failed)}]" if failed else ""
        lines.append(f"criterion {n} ({TITLES[n]}): {status}{tail}")
    return lines


def expect(criterion, part, ok, detail=""):
    record(criterion, part, bool(ok), detail)
    assert ok, f"{part}: {detail}"


@pytest.fixture(scope="module")
def markov():
    store = {}

    def get(name):
        if name not in store:
            store[name] = reduced_markov(load_set(name))
        return store[name]

    return get


def near(value, target, tol):
    return abs(value - target) <= tol


# ---- 1 -------------------------------------------------------------------------

COUNTS = {"B1": (41186, 138), "B2": (79034, 184), "X": (3940388, 429), "Y": (3940438, 434)}


@pytest.mark.slow
@pytest.mark.parametrize("name", list(COUNTS))
def test_counts(name, markov):
    rm, _ = markov(name)
    got = (rm.word_count, rm.K)
    expect(1, name, got == COUNTS[name], f"#A={got[0]} K={got[1]}, expected #A={COUNTS[name][0]} K={COUNTS[name][1]}")


def test_counts_three_digit_set():
    record(1, "OMEGA", None, "word list not supplied")
    pytest.skip("OMEGA word list not supplied; count check skipped")


# ---- 2 -------------------------------------------------------------------------

@pytest.mark.slow
def test_b1_half(markov):
    rm, A = markov("B1")
    cert = certify_at(rm, A, "0.5")
    expect(2, "eigenvalue t=0.5", near(cert.eigenvalue, 1.0004258, 1e-6), f"{cert.eigenvalue:.9f}")
    expect(2, "ratios t=0.5", cert.direction is Direction.LOWER and 1.000424 <= cert.ratio_lo and cert.ratio_hi <= 1.000427,
           f"[{cert.ratio_lo:.9f}, {cert.ratio_hi:.9f}]")


@pytest.mark.slow
@pytest.mark.parametrize("t, direction, lo, hi", [
    ("0.50001", Direction.LOWER, 1.000223, 1.000225),
    ("0.50005", Direction.UPPER, 0.999416, 0.999418),
])
def test_b1_bracket(markov, t, direction, lo, hi):
    rm, A = markov("B1")
    cert = certify_at(rm, A, t)
    detail = f"{cert.direction.value} [{cert.ratio_lo:.9f}, {cert.ratio_hi:.9f}] vs [{lo}, {hi}]"
    expect(2, f"t={t}", cert.direction is direction and near(cert.ratio_lo, lo, 2e-6) and near(cert.ratio_hi, hi, 2e-6), detail)


# ---- 3 -------------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.parametrize("t, direction, lo, hi", [
    ("0.499995", Direction.UPPER, 0.999713, 0.999714),
    ("0.499975", Direction.LOWER, 1.000141, 1.000143),
])
def test_b2_bracket(markov, t, direction, lo, hi):
    rm, A = markov("B2")
    cert = certify_at(rm, A, t)
    detail = f"{cert.direction.value} [{cert.ratio_lo:.9f}, {cert.ratio_hi:.9f}] vs [{lo}, {hi}]"
    expect(3, f"t={t}", cert.direction is direction and near(cert.ratio_lo, lo, 2e-6) and near(cert.ratio_hi, hi, 2e-6), detail)


# ---- 4 -------------------------------------------------------------------------

def test_three_digit_bracket():
    record(4, "bracket", None, "word list not supplied")
    pytest.skip("OMEGA word list not supplied; bracket check skipped")


# ---- 5 -------------------------------------------------------------------------

def test_unrestricted_lower_bound(markov):
    rm, A = markov("E2")
    cert = certify_at(rm, A, "0.53128")
    expect(5, "LOWER at 0.53128", cert.direction is Direction.LOWER, cert.summary())


def test_unrestricted_bracket(markov):
    rm, A = markov("E2")
    lower, upper = bisect_dimension(load_set("E2"), None, 8, 128, "0.531", "0.532", max_steps=30,
                                    width="1e-6", markov=(rm, A))
    width = upper.t - lower.t
    ok = lower.direction is Direction.LOWER and upper.direction is Direction.UPPER and 0 < width <= Fraction(1, 10**6)
    # consistent with the separate LOWER certificate at 0.53128
    expect(5, "bisection", ok and Fraction(53128, 100000) < upper.t, f"[{float(lower.t)}, {float(upper.t)}]")


# ---- 6 -------------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.parametrize("name, target", [("X", 0.999973), ("Y", 1.0000162)])
def test_large_set_eigenvalues(markov, name, target):
    rm, A = markov(name)
    pair = leading_eig(assemble_reduced_Bt(rm, A, chebyshev_basis(8, 53), "0.5", 53))
    expect(6, name, near(pair.eigenvalue, target, 1e-5), f"{pair.eigenvalue:.8f}")


# ---- 7 -------------------------------------------------------------------------

def test_tables():
    text = resources.files("gausscantor").joinpath("data", "fixtures", "tables.txt").read_text()
    checks = [check_table_fixture(row) for row in parse_table_fixture(text)]
    failed = [f"line {c.row.line_number} {c.row.pointed}" for c in checks if not c.passed]
    control = not verify_table_row(PointedWord.parse("2112*12"), "3.29", "3.31")
    record(7, "negative control", control, "shrunk interval accepted")
    expect(7, "rows", not failed, ", ".join(failed))
    assert control


# ---- 8 -------------------------------------------------------------------------

def test_gap_inequalities():
    text = resources.files("gausscantor").joinpath("data", "fixtures", "gaps.txt").read_text()
    failed = [line.label for line in parse_gap_fixture(text) if not check_fixture_line(line).passed]
    expect(8, "fixture", not failed, ", ".join(failed))


@pytest.mark.parametrize("left, center, right", [("3(1312)", "4*", "(4)"), ("(1213)", "3*134", "(4)")])
def test_nine_halves(left, center, right):
    value = lambda0(TailSpec.parse(left), PointedWord.parse(center), TailSpec.parse(right), 128)
    ok = value.contains(Fraction(9, 2)) and value.width < Fraction(1, 10**25)
    expect(8, f"9/2 from {center}", ok, repr(value))


# ---- 9 -------------------------------------------------------------------------

def _brute_allowed(words, n):
    strs = ["".join(map(str, w)) for w in words]
    out = []
    for code in range(2 ** n):
        w = tuple(1 + ((code >> (n - 1 - i)) & 1) for i in range(n))
        s = "".join(map(str, w))
        if not any(f in s for f in strs):
            out.append(w)
    return out


def _brute_join_ok(a, b, words):
    joined = a + b
    for f in words:
        for start in range(max(0, len(a) - len(f) + 1), len(a)):
            if joined[start:start + len(f)] == f:
                return False
    return True


def test_expansion_property():
    rng = random.Random(2024)
    checked = 0
    while checked < 50:
        words = [tuple(rng.choice((1, 2)) for _ in range(rng.randint(2, 5))) for _ in range(rng.randint(1, 4))]
        F = ForbiddenSet.build(words, include_reverses=rng.random() < 0.5)
        n = rng.randint(F.default_n, 8)
        allowed = _brute_allowed(F.words, n)
        if not allowed:
            continue
        rm, A = reduced_markov(F, n)
        brute = np.array([[_brute_join_ok(a, b, F.words) for b in allowed] for a in allowed])
        ok = A.words == allowed and (rm.expand() == brute).all() and rm.K <= F.suffix_count() + 1
        expect(9, "expansion", ok, f"words {F.words}, n={n}")
        checked += 1


def test_subspace_property():
    rng = random.Random(7)
    checked = 0
    basis = chebyshev_basis(3, 53)
    m = basis.m
    while checked < 20:
        words = [tuple(rng.choice((1, 2)) for _ in range(rng.randint(2, 4))) for _ in range(rng.randint(1, 3))]
        F = ForbiddenSet.build(words)
        try:
            rm, A = reduced_markov(F, min(F.default_n + rng.randint(0, 1), 4))
        except ValueError:
            continue
        t = Fraction(rng.randint(40, 80), 100)
        W = A.words
        full = np.zeros((len(W) * m, len(W) * m))
        for j in range(len(W)):
            for s in range(len(W)):
                if compatible(W[s], W[j], F):
                    full[j * m:(j + 1) * m, s * m:(s + 1) * m] = block(W[s], t, basis)
        u = full @ np.random.default_rng(checked).random(full.shape[1])
        ok = all(
            np.allclose(u[j1 * m:(j1 + 1) * m], u[j2 * m:(j2 + 1) * m], rtol=1e-13, atol=0)
            for j1 in range(len(W)) for j2 in range(j1) if rm.col_map[j1] == rm.col_map[j2]
        )
        expect(9, "subspace", ok and rm.K <= F.suffix_count() + 1, f"words {F.words}")
        checked += 1


def test_interval_property():
    rng = random.Random(11)
    slack = Fraction(1, 2 ** 120)
    for _ in range(1000):
        w = tuple(rng.choice((1, 2)) for _ in range(rng.randint(1, 12)))
        pw = PointedWord(w, rng.randrange(len(w)))
        mirrored = J_endpoints(pw.reversed())
        base = J_endpoints(pw)
        same = all(abs(a.lo - b.lo) <= slack and abs(a.hi - b.hi) <= slack for a, b in zip(base, mirrored))
        child = J_endpoints(pw.extend(rng.choice("LR"), rng.choice((1, 2))))
        nested = child[0].hi >= base[0].lo - slack and child[1].lo <= base[1].hi + slack
        expect(9, "J reversal and nesting", same and nested, str(pw))


def test_ratio_property():
    rng = random.Random(5)
    for _ in range(100):
        prefix = tuple(rng.randint(1, 5) for _ in range(rng.randint(1, 10)))
        w = tuple(rng.randint(1, 4) for _ in range(rng.randint(1, 6)))
        q, q_prev = continuants(prefix)
        ok = ratio_function(w)(Fraction(q_prev, q)) == cylinder_ratio(prefix, w)
        expect(9, "ratio function", ok, f"prefix {prefix}, word {w}")
