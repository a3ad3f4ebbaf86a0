"""Rigorous min-max certification of Hausdorff dimension bounds.

Given positive test functions f_k (one polynomial per column class) the image
Q_k = (L_t f)_k is enclosed on every piece of a uniform partition of [0,1].
If Q_k / f_k > 1 everywhere the dimension is at least t; if it is < 1
everywhere the dimension is at most t.

On a piece with centre c and radius h the ratio is enclosed as
Q(c)/f(c) +- h * sup|N| / inf f^2 with N = Q'f - Qf'.  The bound on |N| is a
Taylor model: exact-point coefficients at c up to degree D-1 and an interval
enclosure of the degree-D coefficient over the whole piece.
"""

from __future__ import annotations

import enum
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import ivarray as iv
from .balls import BallInterval
from .ivarray import IV
from .kernels import image_row_sums
from .subshift import AllowedWords, ForbiddenSet, ReducedMarkov, allowed_words, reduced_markov
from .transfer import (
    FLOAT_BITS,
    CollocationBasis,
    EigenPair,
    _exact,
    assemble_reduced_Bt,
    chebyshev_basis,
    leading_eig,
    provenance_hash,
)

log = logging.getLogger(__name__)

TAYLOR_DEGREE = 4
WORK_ELEMENTS = 1 << 19


class Direction(str, enum.Enum):
    LOWER = "LOWER"
    UPPER = "UPPER"
    UNDECIDED = "UNDECIDED"


class CertificationError(RuntimeError):
    pass


@dataclass
class TestFunctionFamily:
    """coefficients[k, d] is the coefficient of x**d in the test function of class k."""

    coefficients: np.ndarray
    t: Fraction
    provenance: str

    __test__ = False

    @property
    def K(self) -> int:
        return self.coefficients.shape[0]

    @property
    def degree(self) -> int:
        return self.coefficients.shape[1] - 1

    def taylor(self, x0: IV, order: int) -> list:
        """Taylor coefficients of every class polynomial about x0; each IV has shape (K, len(x0))."""
        coefs = self.coefficients[:, None, :]
        y = [IV(x0.lo[None, :], x0.hi[None, :]), IV.exact(np.ones((1, 1)))] + [IV.zeros((1, 1))] * (order - 1)
        return iv.series_horner(coefs, y[: order + 1], order)

    def minimum_lower_bound(self, pieces: int = 256) -> float:
        """Rigorous lower bound for min over classes and x in [0,1]."""
        lo, hi = _partition(pieces)
        return float(_centered_lower(self, lo, hi).min())


def _centered_lower(tf: TestFunctionFamily, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Lower bounds of each class polynomial on each piece via an exact Taylor expansion."""
    c = (lo + hi) / 2
    h = (hi - lo) / 2
    ser = tf.taylor(IV.exact(c), tf.degree)
    spread = np.zeros_like(ser[0].hi)
    hp = np.ones_like(h)
    for j in range(1, len(ser)):
        hp = iv.up(hp * h)
        spread = iv.up(spread + iv.up(ser[j].abs_upper() * hp))
    return iv.down(ser[0].lo - spread)


def lift_eigvec(pair: EigenPair, basis: CollocationBasis, rm: ReducedMarkov, t=None) -> TestFunctionFamily:
    """Interpolate the eigenvector's node values into one polynomial per column class."""
    K, m = rm.K, basis.m
    if pair.vector_exact:
        values = pair.vector_exact
    else:
        values = [Fraction(float(v)) for v in pair.vector]
    if len(values) != K * m:
        raise ValueError("eigenvector length does not match K*m")
    if sum(values) < 0:
        values = [-v for v in values]
    coefs = np.empty((K, m))
    for k in range(K):
        node_values = values[k * m : (k + 1) * m]
        for d in range(m):
            coefs[k, d] = float(sum(v * basis.coefficients[l][d] for l, v in enumerate(node_values)))
    tf = TestFunctionFamily(coefficients=coefs, t=_exact(t) if t is not None else Fraction(0), provenance=provenance_hash(rm, m))
    if tf.minimum_lower_bound() <= 0:
        raise CertificationError("candidate not positive; increase m or precision")
    return tf


class ImageFamily:
    """The K image functions Q_k, represented lazily as sums over allowed words."""

    def __init__(self, tf: TestFunctionFamily, t, rm: ReducedMarkov, A: AllowedWords, route: str = "compiled"):
        if route not in ("compiled", "numpy"):
            raise ValueError("route must be 'compiled' or 'numpy'")
        self.route = route
        if tf.K != rm.K:
            raise ValueError("test family and Markov data disagree on K")
        self.t = _exact(t)
        self.rm = rm
        order = np.argsort(rm.row_map, kind="stable")
        coeff = A.moebius_arrays()
        self.rows = rm.row_map[order]
        self.det = (coeff["p_prev"] * coeff["q_cur"] - coeff["p_cur"] * coeff["q_prev"])[order].astype(float)
        self.pc = coeff["p_cur"][order].astype(float)
        self.pp = coeff["p_prev"][order].astype(float)
        self.qc = coeff["q_cur"][order].astype(float)
        self.qp = coeff["q_prev"][order].astype(float)
        for name in ("pc", "pp", "qc", "qp"):
            if np.abs(getattr(self, name)).max() >= 2.0**53:
                raise CertificationError("Moebius coefficients exceed exact float range")
        self.poly = np.ascontiguousarray(tf.coefficients[rm.col_map[order]])
        self.mhat_t = rm.matrix.T.astype(float)
        self.exponent = iv.exact_scalar(-2 * self.t)

    def _binomials(self, order: int) -> list:
        """binom(-2t, k) for k = 0..order as interval scalars."""
        out = [IV.exact(1.0)]
        acc = IV.exact(1.0)
        for k in range(1, order + 1):
            acc = acc * (self.exponent - float(k - 1)) * iv.exact_scalar(Fraction(1, k))
            out.append(acc)
        return out

    def _word_terms(self, sl: slice, x0: IV, order: int) -> list:
        """Taylor coefficients of f_{C(a)}(T_a x) |T_a'(x)|^t for the words in ``sl``."""
        pc, pp = self.pc[sl, None], self.pp[sl, None]
        qc, qp = self.qc[sl, None], self.qp[sl, None]
        xl, xh = x0.lo[None, :], x0.hi[None, :]
        d_lo = IV.exact(qc) + IV.exact(qp) * IV.exact(xl)
        d_hi = IV.exact(qc) + IV.exact(qp) * IV.exact(xh)
        d = IV(d_lo.lo, d_hi.hi)
        inv_d = d.reciprocal_positive()
        y_lo = (IV.exact(pc) + IV.exact(pp) * IV.exact(xl)) * d_lo.reciprocal_positive()
        y_hi = (IV.exact(pc) + IV.exact(pp) * IV.exact(xh)) * d_hi.reciprocal_positive()
        y = [IV(np.minimum(y_lo.lo, y_hi.lo), np.maximum(y_lo.hi, y_hi.hi))]
        r = IV.exact(qp) * inv_d
        inv_d2 = inv_d * inv_d
        det = self.det[sl, None]
        rk = IV.exact(np.ones_like(r.lo))
        for k in range(1, order + 1):
            y.append(rk * inv_d2 * (det * (-1.0) ** (k - 1)))
            rk = rk * r
        w0 = iv.exp(self.exponent * iv.log_positive(d))
        binom = self._binomials(order)
        w = [w0]
        rk = r
        for k in range(1, order + 1):
            w.append(binom[k] * rk * w0)
            rk = rk * r
        fy = iv.series_horner(self.poly[sl, None, :], y, order)
        return iv.series_mul(fy, w, order)

    def row_sums(self, x0: IV, order: int) -> list:
        """G_r = sum over words with row class r; list over orders of IV (R, ns)."""
        if self.route == "compiled":
            return self._row_sums_compiled(x0, order)
        ns = x0.lo.shape[0]
        R = self.rm.row_count
        G = [IV.zeros((R, ns)) for _ in range(order + 1)]
        chunk = max(1, WORK_ELEMENTS // max(ns, 1))
        for start in range(0, len(self.rows), chunk):
            sl = slice(start, min(start + chunk, len(self.rows)))
            rows = self.rows[sl]
            cut = np.flatnonzero(np.diff(rows)) + 1
            starts = np.concatenate([[0], cut])
            counts = np.diff(np.concatenate([starts, [len(rows)]]))
            ids = rows[starts]
            terms = self._word_terms(sl, x0, order)
            for j in range(order + 1):
                part = iv.segment_sum(terms[j], starts, counts)
                G[j] = _scatter_add(G[j], ids, part)
        return G

    def _row_sums_compiled(self, x0: IV, order: int) -> list:
        binom = self._binomials(order)
        b_lo = np.array([float(b.lo) for b in binom])
        b_hi = np.array([float(b.hi) for b in binom])
        R = self.rm.row_count
        s_lo, s_hi, a_lo, a_hi = image_row_sums(
            self.pc, self.pp, self.qc, self.qp, self.det, self.poly, self.rows, R,
            np.ascontiguousarray(x0.lo, dtype=float), np.ascontiguousarray(x0.hi, dtype=float),
            float(self.exponent.lo), float(self.exponent.hi), b_lo, b_hi, order,
        )
        counts = np.bincount(self.rows, minlength=R)[:, None]
        return [
            IV(iv.down(s_lo[j] - iv._sum_error(counts, a_lo[j])), iv.up(s_hi[j] + iv._sum_error(counts, a_hi[j])))
            for j in range(order + 1)
        ]

    def taylor(self, x0: IV, order: int) -> list:
        """Taylor coefficients of Q_k about x0 (a point or an interval); IV (K, ns) per order."""
        G = self.row_sums(x0, order)
        return [iv.nonneg_matmul(self.mhat_t, g) for g in G]


def apply_operator(tf: TestFunctionFamily, t, rm: ReducedMarkov, A: AllowedWords, route: str = "compiled") -> ImageFamily:
    return ImageFamily(tf, t, rm, A, route)


def _scatter_add(total: IV, ids: np.ndarray, part: IV) -> IV:
    lo, hi = total.lo.copy(), total.hi.copy()
    lo[ids] = iv.down(lo[ids] + part.lo)
    hi[ids] = iv.up(hi[ids] + part.hi)
    return IV(lo, hi)


def _partition(P: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.arange(P + 1, dtype=float) / P
    return edges[:-1], edges[1:]


def ratio_bounds_on_pieces(image: ImageFamily, tf: TestFunctionFamily, lo: np.ndarray, hi: np.ndarray, degree: int = TAYLOR_DEGREE) -> tuple[np.ndarray, np.ndarray]:
    """Rigorous (K, ns) lower and upper bounds of Q_k/f_k on the pieces [lo, hi]."""
    c = (lo + hi) / 2
    h = (hi - lo) / 2
    if not np.all(c - h == lo) or not np.all(c + h == hi):
        raise CertificationError("partition endpoints must be exactly representable")
    centre = IV.exact(c)
    whole = IV(lo, hi)
    Qc = image.taylor(centre, degree)
    Qx = image.taylor(whole, degree + 1)
    pc = tf.taylor(centre, degree)
    px = tf.taylor(whole, degree + 1)

    def n_coef(Q, p, j):
        acc = None
        for i in range(j + 1):
            term = Q[i + 1] * p[j - i] * float(i + 1) - Q[i] * p[j - i + 1] * float(j - i + 1)
            acc = term if acc is None else acc + term
        return acc

    sup_n = np.zeros_like(Qc[0].hi)
    hp = np.ones_like(h)
    for j in range(degree):
        sup_n = iv.up(sup_n + iv.up(n_coef(Qc, pc, j).abs_upper() * hp))
        hp = iv.up(hp * h)
    sup_n = iv.up(sup_n + iv.up(n_coef(Qx, px, degree).abs_upper() * hp))
    inf_p = px[0].lo
    if np.any(inf_p <= 0):
        raise CertificationError("test function not provably positive on a piece")
    slope = iv.up(sup_n / iv.down(inf_p * inf_p))
    slope = iv.up(slope * (1 + 4 * iv.EPS))
    centre_ratio = Qc[0] * pc[0].reciprocal_positive()
    spread = iv.up(slope * h)
    return iv.down(centre_ratio.lo - spread), iv.up(centre_ratio.hi + spread)


@dataclass
class DimensionCertificate:
    t: Fraction
    direction: Direction
    ratio_lo: float
    ratio_hi: float
    partition_count: int
    precision_bits: int
    eigen_precision_bits: int
    provenance: str
    seconds: float
    m: int
    n: int
    n_override: bool = False
    escalations: list = field(default_factory=list)
    eigenvalue: float | None = None

    def __post_init__(self):
        if self.direction is Direction.LOWER and not self.ratio_lo > 1:
            raise CertificationError("LOWER certificate requires ratio_lo > 1")
        if self.direction is Direction.UPPER and not self.ratio_hi < 1:
            raise CertificationError("UPPER certificate requires ratio_hi < 1")

    @property
    def certified(self) -> bool:
        return self.direction is not Direction.UNDECIDED

    def ratio_ball(self) -> BallInterval:
        return BallInterval.hull(BallInterval(Fraction(self.ratio_lo)), BallInterval(Fraction(self.ratio_hi)))

    def record(self) -> dict:
        lo = Fraction(self.ratio_lo)
        hi = Fraction(self.ratio_hi)
        out = asdict(self)
        out["t"] = _fraction_text(self.t)
        out["direction"] = self.direction.value
        out["ratio_lo"] = _decimal_floor(lo, 12) + " (rounded down)"
        out["ratio_hi"] = _decimal_ceil(hi, 12) + " (rounded up)"
        return out

    def summary(self) -> str:
        claim = {Direction.LOWER: "dim >= t", Direction.UPPER: "dim <= t", Direction.UNDECIDED: "undecided"}[self.direction]
        return (
            f"t={_fraction_text(self.t)} {self.direction.value}: "
            f"{_decimal_floor(Fraction(self.ratio_lo), 9)} <= Q/f <= {_decimal_ceil(Fraction(self.ratio_hi), 9)} "
            f"({claim}; P={self.partition_count}, m={self.m})"
        )


def _fraction_text(q: Fraction) -> str:
    from decimal import Decimal, getcontext

    getcontext().prec = 40
    d = Decimal(q.numerator) / Decimal(q.denominator)
    if Fraction(d) == q:
        return format(d.normalize(), "f")
    return f"{q.numerator}/{q.denominator}"


def _decimal_floor(q: Fraction, digits: int) -> str:
    scaled = (q.numerator * 10**digits) // q.denominator
    return _fixed(scaled, digits)


def _decimal_ceil(q: Fraction, digits: int) -> str:
    scaled = -((-q.numerator * 10**digits) // q.denominator)
    return _fixed(scaled, digits)


def _fixed(value: int, digits: int) -> str:
    sign = "-" if value < 0 else ""
    whole, frac = divmod(abs(value), 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


def certify(
    tf: TestFunctionFamily,
    t,
    rm: ReducedMarkov,
    A: AllowedWords,
    partition: int = 256,
    threads: int = 1,
    batch: int = 8,
    m: int | None = None,
    eigen_precision_bits: int = FLOAT_BITS,
) -> DimensionCertificate:
    """Enclose min and max of Q_k/f_k over all classes and all pieces of [0,1]."""
    if partition < 16:
        raise ValueError("partition must have at least 16 pieces")
    started = time.perf_counter()
    image = ImageFamily(tf, t, rm, A)
    lo_edges, hi_edges = _partition(partition)
    spans = [slice(s, min(s + batch, partition)) for s in range(0, partition, batch)]

    def run(span):
        return ratio_bounds_on_pieces(image, tf, lo_edges[span], hi_edges[span])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, spans))
    else:
        results = [run(s) for s in spans]
    ratio_lo = float(min(r[0].min() for r in results))
    ratio_hi = float(max(r[1].max() for r in results))
    if ratio_lo > 1:
        direction = Direction.LOWER
    elif ratio_hi < 1:
        direction = Direction.UPPER
    else:
        direction = Direction.UNDECIDED
    return DimensionCertificate(
        t=_exact(t),
        direction=direction,
        ratio_lo=ratio_lo,
        ratio_hi=ratio_hi,
        partition_count=partition,
        precision_bits=FLOAT_BITS,
        eigen_precision_bits=eigen_precision_bits,
        provenance=provenance_hash(rm, m if m is not None else tf.degree + 1),
        seconds=time.perf_counter() - started,
        m=m if m is not None else tf.degree + 1,
        n=rm.n,
        n_override=rm.n_override,
    )


def certify_at(
    rm: ReducedMarkov,
    A: AllowedWords,
    t,
    m: int = 8,
    precision_bits: int = 128,
    partition: int = 256,
    threads: int = 1,
    escalate: bool = True,
) -> DimensionCertificate:
    """Full pipeline at one t: assemble, eigenvector, lift, certify (with escalation)."""
    t = _exact(t)
    escalations = []
    prec = precision_bits
    P = partition
    attempts = [(P, prec)]
    if escalate:
        attempts += [(2 * P, prec), (2 * P, prec + 32)]
    cert = None
    for step, (P, prec) in enumerate(attempts):
        basis = chebyshev_basis(m, prec)
        B = assemble_reduced_Bt(rm, A, basis, t)
        pair = leading_eig(B)
        tf = lift_eigvec(pair, basis, rm, t)
        cert = certify(tf, t, rm, A, partition=P, threads=threads, m=m, eigen_precision_bits=prec)
        cert.eigenvalue = pair.eigenvalue
        cert.escalations = list(escalations)
        if cert.certified:
            return cert
        escalations.append(f"undecided at P={P}, precision={prec}")
        log.info("t=%s undecided at P=%d precision=%d", t, P, prec)
    return cert


def bisect_dimension(
    F: ForbiddenSet,
    n: int | None,
    m: int,
    precision: int,
    t_lo,
    t_hi,
    max_steps: int = 20,
    partition: int = 256,
    threads: int = 1,
    width: float | None = None,
    markov: tuple | None = None,
) -> tuple[DimensionCertificate, DimensionCertificate]:
    """Certify t_lo (LOWER) and t_hi (UPPER), then shrink the bracket at midpoints."""
    rm, A = markov if markov is not None else reduced_markov(F, n)
    t_lo, t_hi = _exact(t_lo), _exact(t_hi)
    if not t_lo < t_hi:
        raise ValueError("need t_lo < t_hi")
    lower = certify_at(rm, A, t_lo, m, precision, partition, threads)
    upper = certify_at(rm, A, t_hi, m, precision, partition, threads)
    failures = [c for c in (lower, upper) if not c.certified]
    if lower.direction is not Direction.LOWER or upper.direction is not Direction.UPPER:
        raise CertificationError(
            "bracket endpoints not certified: "
            + "; ".join(c.summary() for c in (lower, upper))
            + (f" ({len(failures)} undecided)" if failures else "")
        )
    for _ in range(max_steps):
        if width is not None and upper.t - lower.t <= Fraction(str(width)):
            break
        mid = (lower.t + upper.t) / 2
        cert = certify_at(rm, A, mid, m, precision, partition, threads)
        if cert.direction is Direction.LOWER:
            lower = cert
        elif cert.direction is Direction.UPPER:
            upper = cert
        else:
            log.info("bisection stopped: %s", cert.summary())
            break
    if lower.t > upper.t:
        raise CertificationError("inconsistent certificates: LOWER above UPPER")
    return lower, upper
