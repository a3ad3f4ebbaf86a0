"""Chebyshev collocation of the transfer operator and its leading eigenpair.

Two arithmetic paths share one interface.  With ``precision_bits <= 53``
everything runs vectorized in float64; above that, entries are Arb balls
whose midpoints serve as high-precision point values.  Neither path needs
to be rigorous: the eigenvector is only a candidate test function.
"""

from __future__ import annotations

import hashlib
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from flint import arb, arb_mat, fmpq

from .balls import DEFAULT_PRECISION, working_precision
from .cf import compose
from .subshift import AllowedWords, ReducedMarkov

log = logging.getLogger(__name__)

FLOAT_BITS = 53
CHUNK = 1 << 17


def _exact(t) -> Fraction:
    if isinstance(t, Fraction):
        return t
    if isinstance(t, str):
        from .balls import parse_exact

        return parse_exact(t)
    if isinstance(t, int):
        return Fraction(t)
    return Fraction(str(t))


def _arb_q(q: Fraction) -> arb:
    return arb(fmpq(q.numerator, q.denominator))


@dataclass
class CollocationBasis:
    m: int
    precision_bits: int
    nodes_arb: list
    weights_arb: list
    coefficients: list  # coefficients[l][d]: coefficient of x**d in p_l, as Fractions

    @property
    def nodes(self) -> np.ndarray:
        return np.array([float(x.mid()) for x in self.nodes_arb])

    @property
    def bary_weights(self) -> np.ndarray:
        return np.array([float(w.mid()) for w in self.weights_arb])

    def eval_float(self, y: np.ndarray) -> np.ndarray:
        """Values p_l(y) for an array y; output shape y.shape + (m,)."""
        x = self.nodes
        w = self.bary_weights
        diff = y[..., None] - x
        exact = diff == 0
        diff = np.where(exact, 1.0, diff)
        terms = w / diff
        vals = terms / terms.sum(axis=-1, keepdims=True)
        hit = exact.any(axis=-1)
        if hit.any():
            vals[hit] = exact[hit].astype(float)
        return vals

    def eval_arb(self, y: arb) -> list:
        terms = []
        for xk, wk in zip(self.nodes_arb, self.weights_arb):
            d = y - xk
            if d.is_zero():
                return [arb(1) if other is xk else arb(0) for other in self.nodes_arb]
            terms.append(wk / d)
        total = sum(terms, arb(0))
        return [tk / total for tk in terms]

    def coefficients_float(self) -> np.ndarray:
        return np.array([[float(c) for c in row] for row in self.coefficients])


def chebyshev_basis(m: int, precision_bits: int = DEFAULT_PRECISION) -> CollocationBasis:
    """Nodes 1/2(1 + cos(pi(2k-1)/2m)), k=1..m, with the Lagrange basis on them."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if m > 64:
        raise ValueError("m above 64 is not supported")
    prec = max(precision_bits, 64) + 32
    with working_precision(prec):
        nodes = [(1 + arb(fmpq(2 * k - 1, 2 * m)).cos_pi()) / 2 for k in range(1, m + 1)]
        weights = []
        for k, xk in enumerate(nodes):
            prod = arb(1)
            for j, xj in enumerate(nodes):
                if j != k:
                    prod *= xk - xj
            weights.append(1 / prod)
        coefficients = []
        for k in range(m):
            poly = [arb(1)]
            for j, xj in enumerate(nodes):
                if j == k:
                    continue
                shifted = [arb(0)] + poly
                for d in range(len(poly)):
                    shifted[d] -= xj * poly[d]
                poly = shifted
            coefficients.append([_arb_mid_fraction(c * weights[k]) for c in poly])
    return CollocationBasis(m=m, precision_bits=precision_bits, nodes_arb=nodes, weights_arb=weights, coefficients=coefficients)


def _arb_mid_fraction(x: arb) -> Fraction:
    man, exp = x.mid().man_exp()
    man, exp = int(man), int(exp)
    return Fraction(man * 2**exp) if exp >= 0 else Fraction(man, 2**-exp)


def block(w, t, basis: CollocationBasis, precision_bits: int | None = None) -> np.ndarray:
    """B(i, l) = |T_w'(x_i)|^t * p_l(T_w(x_i)) as an m-by-m array of floats or arbs."""
    prec = basis.precision_bits if precision_bits is None else precision_bits
    g = compose(w)
    t = _exact(t)
    if prec <= FLOAT_BITS:
        x = basis.nodes
        d = g.q_cur + g.q_prev * x
        y = (g.p_cur + g.p_prev * x) / d
        return d[:, None] ** (-2 * float(t)) * basis.eval_float(y)
    with working_precision(prec):
        exponent = -2 * _arb_q(t)
        out = np.empty((basis.m, basis.m), dtype=object)
        for i, xi in enumerate(basis.nodes_arb):
            d = g.q_cur + g.q_prev * xi
            y = (g.p_cur + g.p_prev * xi) / d
            weight = (exponent * d.log()).exp()
            for l, pl in enumerate(basis.eval_arb(y)):
                out[i, l] = weight * pl
        return out


@dataclass
class ReducedBt:
    t: Fraction
    matrix: object  # numpy float64 array or flint arb_mat
    precision_bits: int
    provenance: str
    K: int
    m: int
    assembly_seconds: float = 0.0

    @property
    def size(self) -> int:
        return self.K * self.m

    def as_float(self) -> np.ndarray:
        if isinstance(self.matrix, np.ndarray):
            return self.matrix
        n = self.size
        return np.array([[float(self.matrix[i, j].mid()) for j in range(n)] for i in range(n)])


def provenance_hash(rm: ReducedMarkov, m: int) -> str:
    return hashlib.sha256(f"{rm.digest()};m={m}".encode()).hexdigest()[:16]


def _pair_index(rm: ReducedMarkov) -> tuple[np.ndarray, np.ndarray]:
    """Dense id of each word's (row class, column class) pair plus the pair table."""
    pairs, inverse = np.unique(np.stack([rm.row_map, rm.col_map], axis=1), axis=0, return_inverse=True)
    return pairs, inverse.reshape(-1)


def _float_pair_sums(rm, A, basis, t) -> tuple[np.ndarray, np.ndarray]:
    pairs, pair_of_word = _pair_index(rm)
    m = basis.m
    sums = np.zeros((len(pairs), m, m))
    coeff = A.moebius_arrays()
    x = basis.nodes
    for start in range(0, len(A), CHUNK):
        sl = slice(start, start + CHUNK)
        pc, pp = coeff["p_cur"][sl].astype(float), coeff["p_prev"][sl].astype(float)
        qc, qp = coeff["q_cur"][sl].astype(float), coeff["q_prev"][sl].astype(float)
        d = qc[:, None] + qp[:, None] * x[None, :]
        y = (pc[:, None] + pp[:, None] * x[None, :]) / d
        blocks = (d ** (-2 * float(t)))[:, :, None] * basis.eval_float(y)
        np.add.at(sums, pair_of_word[sl], blocks)
    return pairs, sums


def _arb_pair_sums(rm, A, basis, t, prec) -> tuple[np.ndarray, list]:
    pairs, pair_of_word = _pair_index(rm)
    m = basis.m
    coeff = A.moebius_arrays()
    with working_precision(prec):
        sums = [[[arb(0)] * m for _ in range(m)] for _ in range(len(pairs))]
        exponent = -2 * _arb_q(_exact(t))
        nodes = basis.nodes_arb
        for a in range(len(A)):
            pc, pp = int(coeff["p_cur"][a]), int(coeff["p_prev"][a])
            qc, qp = int(coeff["q_cur"][a]), int(coeff["q_prev"][a])
            target = sums[pair_of_word[a]]
            for i, xi in enumerate(nodes):
                d = qc + qp * xi
                weight = (exponent * d.log()).exp()
                vals = basis.eval_arb((pc + pp * xi) / d)
                row = target[i]
                for l in range(m):
                    row[l] += weight * vals[l]
    return pairs, sums


def assemble_reduced_Bt(
    rm: ReducedMarkov,
    A: AllowedWords,
    basis: CollocationBasis,
    t,
    precision_bits: int | None = None,
) -> ReducedBt:
    """Stream every allowed word's block into its (row class, column class) slot, then
    form Bhat[(k, i), (c, l)] = sum_r Mhat(r, k) * S[r, c](i, l)."""
    if rm.word_count != len(A) or rm.forbidden_digest != A.forbidden_digest or rm.n != A.n:
        raise ValueError("reduced Markov matrix and allowed words come from different inputs")
    prec = basis.precision_bits if precision_bits is None else precision_bits
    t = _exact(t)
    started = time.perf_counter()
    K, R, m = rm.K, rm.row_count, basis.m
    mhat = rm.matrix.astype(float)
    if prec <= FLOAT_BITS:
        pairs, sums = _float_pair_sums(rm, A, basis, t)
        S = np.zeros((R, K, m, m))
        S[pairs[:, 0], pairs[:, 1]] = sums
        bhat = np.tensordot(mhat.T, S, axes=(1, 0))  # (k, c, i, l)
        matrix = bhat.transpose(0, 2, 1, 3).reshape(K * m, K * m)
    else:
        pairs, sums = _arb_pair_sums(rm, A, basis, t, prec)
        with working_precision(prec):
            S = arb_mat(R, K * m * m)
            for (r, c), block_sum in zip(pairs, sums):
                base = c * m * m
                for i in range(m):
                    for l in range(m):
                        S[int(r), base + i * m + l] = block_sum[i][l]
            Mt = arb_mat(K, R, [int(v) for v in rm.matrix.T.ravel()])
            prod = Mt * S
            matrix = arb_mat(K * m, K * m)
            for k in range(K):
                for c in range(K):
                    base = c * m * m
                    for i in range(m):
                        for l in range(m):
                            matrix[k * m + i, c * m + l] = prod[k, base + i * m + l]
    elapsed = time.perf_counter() - started
    log.info("assembled reduced matrix of size %d in %.1fs", K * m, elapsed)
    return ReducedBt(t=t, matrix=matrix, precision_bits=prec, provenance=provenance_hash(rm, m), K=K, m=m, assembly_seconds=elapsed)


@dataclass
class EigenPair:
    eigenvalue: float
    ratio_lo: float
    ratio_hi: float
    vector: np.ndarray
    residual: float
    iterations: int
    precision_bits: int
    start_vector: str = "all-ones"
    vector_exact: list = field(default_factory=list, repr=False)


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def default_tolerance(precision_bits: int) -> float:
    if precision_bits <= FLOAT_BITS:
        return 1e-13
    return 1e-40 if precision_bits >= 190 else 1e-26


def leading_eig(B: ReducedBt, tol: float | None = None, max_iters: int = 5000) -> EigenPair:
    """Power iteration from the all-ones vector with sup-norm normalisation."""
    if tol is None:
        tol = default_tolerance(B.precision_bits)
    if isinstance(B.matrix, np.ndarray):
        return _eig_float(B.matrix, tol, max_iters)
    return _eig_arb(B, tol, max_iters)


def _ratios(image: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    r = image / v
    return float(r.min()), float(r.max())


def _eig_float(M: np.ndarray, tol: float, max_iters: int) -> EigenPair:
    v = np.ones(M.shape[0])
    diff = np.inf
    for it in range(1, max_iters + 1):
        w = M @ v
        lam = np.abs(w).max()
        w = w / lam
        diff = np.abs(w - v).max()
        v = w
        if diff < tol:
            break
    else:
        raise ConvergenceError(f"power iteration did not converge in {max_iters} steps", diff)
    image = M @ v
    lam = float(np.abs(image).max())
    lo, hi = _ratios(image, v)
    residual = float(np.abs(image - lam * v).max())
    if (v <= 0).any():
        log.warning("leading eigenvector has non-positive entries")
    return EigenPair(eigenvalue=lam, ratio_lo=lo, ratio_hi=hi, vector=v, residual=residual, iterations=it, precision_bits=FLOAT_BITS)


def _eig_arb(B: ReducedBt, tol: float, max_iters: int) -> EigenPair:
    n = B.size
    prec = B.precision_bits
    tol_arb = arb(tol)
    with working_precision(prec):
        v = arb_mat(n, 1, [arb(1)] * n)
        diff = None
        for it in range(1, max_iters + 1):
            w = B.matrix * v
            mids = [w[i, 0].mid() for i in range(n)]
            lam = max(abs(x) for x in mids)
            new = arb_mat(n, 1, [x / lam for x in mids])
            new = arb_mat(n, 1, [new[i, 0].mid() for i in range(n)])
            diff = max(abs(new[i, 0] - v[i, 0]).mid() for i in range(n))
            v = new
            if diff < tol_arb:
                break
        else:
            raise ConvergenceError(f"power iteration did not converge in {max_iters} steps", float(diff))
        image = B.matrix * v
        vals = [v[i, 0].mid() for i in range(n)]
        imgs = [image[i, 0].mid() for i in range(n)]
        lam = max(abs(x) for x in imgs)
        ratios = [a / b for a, b in zip(imgs, vals)]
        residual = max(abs(a - lam * b) for a, b in zip(imgs, vals))
    vector = np.array([float(x) for x in vals])
    if (vector <= 0).any():
        log.warning("leading eigenvector has non-positive entries")
    return EigenPair(
        eigenvalue=float(lam),
        ratio_lo=float(min(ratios)),
        ratio_hi=float(max(ratios)),
        vector=vector,
        residual=float(residual),
        iterations=it,
        precision_bits=prec,
        vector_exact=[_arb_mid_fraction(x) for x in vals],
    )
