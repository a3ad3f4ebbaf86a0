from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from gausscantor.subshift import ForbiddenSet, compatible, reduced_markov
from gausscantor.transfer import assemble_reduced_Bt, block, chebyshev_basis, leading_eig


def full_matrix(rm, A, F, basis, t):
    """Brute-force B^t over all allowed words: block (j, s) is present when s can precede j."""
    W, m = A.words, basis.m
    N = len(W)
    out = np.zeros((N * m, N * m))
    for j in range(N):
        for s in range(N):
            if compatible(W[s], W[j], F):
                out[j * m:(j + 1) * m, s * m:(s + 1) * m] = block(W[s], t, basis)
    return out


def projector(rm, m):
    N = len(rm.col_map)
    P = np.zeros((N * m, rm.K * m))
    for s, c in enumerate(rm.col_map):
        P[s * m:(s + 1) * m, c * m:(c + 1) * m] = np.eye(m)
    return P


def test_basis_is_lagrange():
    basis = chebyshev_basis(6, 53)
    values = basis.eval_float(basis.nodes)
    assert np.allclose(values, np.eye(6), atol=1e-12)
    assert all(0 < x < 1 for x in basis.nodes)


small_sets = st.lists(st.lists(st.integers(1, 2), min_size=2, max_size=4).map(tuple), min_size=1, max_size=3)


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])
@given(small_sets, st.integers(0, 1), st.fractions(Fraction(2, 5), Fraction(4, 5), max_denominator=100))
def test_subspace_invariance(words, extra, t):
    F = ForbiddenSet.build(words)
    n = min(F.default_n + extra, 4)
    try:
        rm, A = reduced_markov(F, n)
    except ValueError:
        assume(False)
    basis = chebyshev_basis(3, 53)
    full = full_matrix(rm, A, F, basis, t)
    u = full @ np.random.default_rng(0).random(full.shape[1])
    m = basis.m
    for j1 in range(len(rm.col_map)):
        for j2 in range(j1):
            if rm.col_map[j1] == rm.col_map[j2]:
                assert np.allclose(u[j1 * m:(j1 + 1) * m], u[j2 * m:(j2 + 1) * m], rtol=1e-13, atol=0)
    # the reduced matrix is the restriction of the full one to that subspace
    P = projector(rm, m)
    reduced = assemble_reduced_Bt(rm, A, basis, t, 53).matrix
    v = np.random.default_rng(1).random(rm.K * m)
    assert np.allclose(full @ P @ v, P @ reduced @ v, rtol=1e-12, atol=1e-15)


def test_float_and_arb_assembly_agree():
    F = ForbiddenSet.build(["121", "2222"])
    rm, A = reduced_markov(F, 4)
    quick = assemble_reduced_Bt(rm, A, chebyshev_basis(5, 53), "0.6", 53).matrix
    exact = assemble_reduced_Bt(rm, A, chebyshev_basis(5, 128), "0.6", 128).matrix
    as_float = np.array([[float(exact[i, j].mid()) for j in range(exact.ncols())] for i in range(exact.nrows())])
    assert np.allclose(quick, as_float, rtol=1e-12, atol=1e-14)


def test_leading_eigenvalue_of_unrestricted_set(e2_markov):
    rm, A = e2_markov
    B = assemble_reduced_Bt(rm, A, chebyshev_basis(8, 128), "0.53128")
    pair = leading_eig(B)
    assert pair.ratio_lo <= pair.eigenvalue <= pair.ratio_hi
    assert pair.eigenvalue == pytest.approx(1.000000668, abs=1e-9)
    assert np.all(pair.vector > 0) and np.max(pair.vector) == pytest.approx(1.0)


def test_assembly_rejects_mismatched_inputs(e2_markov, b1_markov):
    rm, _ = e2_markov
    _, A = b1_markov
    with pytest.raises(ValueError):
        assemble_reduced_Bt(rm, A, chebyshev_basis(4, 53), "0.5")
