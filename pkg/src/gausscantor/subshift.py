"""Forbidden-word subshifts: allowed words, prefix/suffix classes, reduced Markov matrix.

Allowed words of length n are stored as integer codes in base ``alphabet_max``
(digit d contributes d-1), so numeric order equals lexicographic order.
Enumeration runs an Aho-Corasick automaton level by level over numpy arrays.
"""

from __future__ import annotations

import hashlib
import logging
import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .cf import Word, check_alphabet, parse_word, word_str

log = logging.getLogger(__name__)


def _contains(word: Sequence[int], sub: Sequence[int]) -> bool:
    m = len(sub)
    return any(tuple(word[i : i + m]) == tuple(sub) for i in range(len(word) - m + 1))


@dataclass(frozen=True)
class ForbiddenSet:
    alphabet_max: int
    words: tuple
    closed_under_reversal: bool

    @classmethod
    def build(cls, words: Iterable, alphabet_max: int = 2, include_reverses: bool = True) -> "ForbiddenSet":
        """Normalize: optionally add reverses, drop duplicates and words containing another."""
        ws = {parse_word(w) if isinstance(w, str) else tuple(w) for w in words}
        for w in ws:
            if not w:
                raise ValueError("empty forbidden word")
            check_alphabet(w, alphabet_max)
        if include_reverses:
            ws |= {tuple(reversed(w)) for w in ws}
        ordered = sorted(ws, key=lambda w: (len(w), w))
        kept: list = []
        for w in ordered:
            if not any(_contains(w, k) for k in kept):
                kept.append(w)
        closed = all(tuple(reversed(w)) in set(kept) for w in kept)
        return cls(alphabet_max, tuple(kept), closed)

    @property
    def max_length(self) -> int:
        return max((len(w) for w in self.words), default=0)

    @property
    def default_n(self) -> int:
        return max(self.max_length - 1, 1)

    def suffix_count(self) -> int:
        """Number of distinct proper nonempty suffixes over all forbidden words."""
        return len({w[i:] for w in self.words for i in range(1, len(w))})

    def digest(self) -> str:
        text = f"A={self.alphabet_max};" + ",".join(word_str(w) for w in self.words)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def __len__(self) -> int:
        return len(self.words)


class Automaton:
    """Aho-Corasick automaton with a total transition table."""

    def __init__(self, words: Sequence[Word], alphabet_max: int):
        self.alphabet_max = alphabet_max
        children: list[dict] = [{}]
        depth = [0]
        self.node_of_prefix: dict = {(): 0}
        for w in words:
            node = 0
            for i, d in enumerate(w):
                if d not in children[node]:
                    children.append({})
                    depth.append(i + 1)
                    children[node][d] = len(children) - 1
                    self.node_of_prefix[tuple(w[: i + 1])] = len(children) - 1
                node = children[node][d]
        size = len(children)
        self.depth = np.array(depth, dtype=np.int64)
        self.fail = np.zeros(size, dtype=np.int64)
        self.goto = np.zeros((size, alphabet_max + 1), dtype=np.int64)
        terminal = np.zeros(size, dtype=bool)
        for w in words:
            terminal[self.node_of_prefix[tuple(w)]] = True
        queue = deque()
        for d in range(1, alphabet_max + 1):
            child = children[0].get(d)
            if child is None:
                self.goto[0, d] = 0
            else:
                self.goto[0, d] = child
                queue.append(child)
        while queue:
            node = queue.popleft()
            terminal[node] |= terminal[self.fail[node]]
            for d in range(1, alphabet_max + 1):
                child = children[node].get(d)
                if child is None:
                    self.goto[node, d] = self.goto[self.fail[node], d]
                else:
                    self.fail[child] = self.goto[self.fail[node], d]
                    self.goto[node, d] = child
                    queue.append(child)
        self.terminal = terminal
        self.prefix_of_node = {v: k for k, v in self.node_of_prefix.items()}

    @property
    def size(self) -> int:
        return len(self.depth)

    def chain(self, node: int) -> list[int]:
        """The node and its failure ancestors, excluding the root."""
        out = []
        while node != 0:
            out.append(node)
            node = int(self.fail[node])
        return out


@dataclass
class AllowedWords:
    n: int
    alphabet_max: int
    codes: np.ndarray
    forbidden_digest: str = ""
    n_override: bool = False

    def __len__(self) -> int:
        return len(self.codes)

    def digit_column(self, position: int) -> np.ndarray:
        """Digits (1-based) at ``position`` of every word."""
        base = self.alphabet_max
        return (self.codes // base ** (self.n - 1 - position)) % base + 1

    @cached_property
    def digits(self) -> np.ndarray:
        out = np.empty((len(self.codes), self.n), dtype=np.uint8)
        for i in range(self.n):
            out[:, i] = self.digit_column(i)
        return out

    def word(self, index: int) -> Word:
        return tuple(int(d) for d in self.digits[index])

    @property
    def words(self) -> list:
        return [tuple(int(d) for d in row) for row in self.digits]

    def moebius_arrays(self) -> dict:
        """Integer coefficients (p_prev, p_cur, q_prev, q_cur) of every composition."""
        size = len(self.codes)
        p_prev = np.ones(size, dtype=np.int64)
        p = np.zeros(size, dtype=np.int64)
        q_prev = np.zeros(size, dtype=np.int64)
        q = np.ones(size, dtype=np.int64)
        for i in range(self.n):
            a = self.digit_column(i)
            p_prev, p = p, a * p + p_prev
            q_prev, q = q, a * q + q_prev
        return {"p_prev": p_prev, "p_cur": p, "q_prev": q_prev, "q_cur": q}


def allowed_words(F: ForbiddenSet, n: int | None = None) -> AllowedWords:
    """All length-n words over 1..alphabet_max avoiding every forbidden word."""
    override = False
    if n is None:
        n = F.default_n
    if n < 1:
        raise ValueError("n must be at least 1")
    if n < F.max_length - 1:
        warnings.warn(
            f"n={n} is shorter than the longest forbidden word minus one; boundary "
            "compatibility no longer captures every forbidden occurrence",
            stacklevel=2,
        )
        override = True
    base = F.alphabet_max
    auto = Automaton(F.words, base)
    codes = np.zeros(1, dtype=np.int64)
    states = np.zeros(1, dtype=np.int64)
    for _ in range(n):
        new_states = auto.goto[states][:, 1:]
        new_codes = codes[:, None] * base + np.arange(base, dtype=np.int64)[None, :]
        keep = ~auto.terminal[new_states]
        codes = new_codes[keep]
        states = new_states[keep]
    return AllowedWords(n=n, alphabet_max=base, codes=codes, forbidden_digest=F.digest(), n_override=override)


def compatible(w1: Sequence[int], w2: Sequence[int], F: ForbiddenSet) -> bool:
    """True when w1.w2 has no forbidden word straddling the junction."""
    joined = tuple(w1) + tuple(w2)
    cut = len(w1)
    for f in F.words:
        r = len(f)
        for start in range(max(0, cut - r + 1), min(cut, len(joined) - r + 1)):
            if joined[start : start + r] == f:
                return False
    return True


@dataclass
class ClassPartition:
    """A partition of the allowed words by a class key with its step-4 pair encodings."""

    labels: np.ndarray
    keys: list
    encodings: list
    representatives: np.ndarray

    @property
    def count(self) -> int:
        return len(self.keys)


def _classify(states: np.ndarray, auto: Automaton, F_words: Sequence[Word], reversed_side: bool) -> ClassPartition:
    """Group words by automaton state; label classes in order of first occurrence."""
    uniq, first, inverse = np.unique(states, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    labels = rank[inverse]
    keys, encodings = [], []
    prefixes_to_words: dict = {}
    for j, f in enumerate(F_words):
        g = tuple(reversed(f)) if reversed_side else f
        for length in range(1, len(g)):
            prefixes_to_words.setdefault(g[:length], []).append(j)
    for idx in order:
        state = int(uniq[idx])
        pairs = set()
        for node in auto.chain(state):
            prefix = auto.prefix_of_node[node]
            for j in prefixes_to_words.get(prefix, ()):
                if reversed_side:
                    pairs.add((j, len(prefix)))
                else:
                    pairs.add((j, len(F_words[j]) - len(prefix)))
        keys.append(state)
        encodings.append(frozenset(pairs))
    return ClassPartition(labels=labels, keys=keys, encodings=encodings, representatives=first[order])


def equivalence_classes(A: AllowedWords, F: ForbiddenSet) -> tuple[ClassPartition, ClassPartition]:
    """(suffix classes by SF_w, prefix classes by PF_w) with pair encodings.

    PF_w holds forbidden-word prefixes that are suffixes of w and decides the
    row of w; SF_w holds forbidden-word suffixes that are prefixes of w and
    decides the column.
    """
    base = A.alphabet_max
    fwd = Automaton(F.words, base)
    rev = Automaton([tuple(reversed(f)) for f in F.words], base)
    fwd_states = np.zeros(len(A), dtype=np.int64)
    rev_states = np.zeros(len(A), dtype=np.int64)
    for i in range(A.n):
        fwd_states = fwd.goto[fwd_states, A.digit_column(i)]
        rev_states = rev.goto[rev_states, A.digit_column(A.n - 1 - i)]
    suffix_classes = _classify(rev_states, rev, F.words, reversed_side=True)
    prefix_classes = _classify(fwd_states, fwd, F.words, reversed_side=False)
    return suffix_classes, prefix_classes


def _encode_masks(encodings: list, index: dict) -> list[int]:
    masks = []
    for enc in encodings:
        m = 0
        for pair in enc:
            m |= 1 << index.setdefault(pair, len(index))
        masks.append(m)
    return masks


@dataclass
class ReducedMarkov:
    matrix: np.ndarray
    row_map: np.ndarray
    col_map: np.ndarray
    row_representatives: np.ndarray
    col_representatives: np.ndarray
    n: int
    alphabet_max: int
    forbidden_digest: str
    word_count: int
    prefix_class_count: int
    suffix_class_count: int
    n_override: bool = False
    warnings: list = field(default_factory=list)

    @property
    def K(self) -> int:
        return self.matrix.shape[1]

    @property
    def row_count(self) -> int:
        return self.matrix.shape[0]

    def expand(self) -> np.ndarray:
        """The full compatibility matrix M(j, k) = Mhat(R(j), C(k))."""
        return self.matrix[np.ix_(self.row_map, self.col_map)]

    def class_pairs(self) -> np.ndarray:
        """Distinct (row class, column class) pairs realised by allowed words."""
        return np.unique(np.stack([self.row_map, self.col_map], axis=1), axis=0)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.forbidden_digest};n={self.n};A={self.alphabet_max}".encode())
        return h.hexdigest()[:16]

    def column_multiplicities(self) -> np.ndarray:
        return np.bincount(self.col_map, minlength=self.K)


def _merge_identical(matrix: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapse identical rows (axis 0) or columns (axis 1), keeping first-occurrence order."""
    lines = matrix if axis == 0 else matrix.T
    _, first, inverse = np.unique(lines, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    kept = lines[np.sort(first)]
    return (kept if axis == 0 else kept.T), rank[inverse]


def reduced_markov(F: ForbiddenSet, n: int | None = None, A: AllowedWords | None = None) -> tuple[ReducedMarkov, AllowedWords]:
    if A is None:
        A = allowed_words(F, n)
    if len(A) == 0:
        raise ValueError("empty subshift: no allowed words (dimension is 0)")
    suffix_classes, prefix_classes = equivalence_classes(A, F)
    index: dict = {}
    row_masks = _encode_masks(prefix_classes.encodings, index)
    col_masks = _encode_masks(suffix_classes.encodings, index)
    raw = np.array([[1 if (r & c) == 0 else 0 for c in col_masks] for r in row_masks], dtype=np.int8)
    merged_rows, row_of_prefix = _merge_identical(raw, axis=0)
    matrix, col_of_suffix = _merge_identical(merged_rows, axis=1)
    row_map = row_of_prefix[prefix_classes.labels]
    col_map = col_of_suffix[suffix_classes.labels]
    _, row_reps = np.unique(row_map, return_index=True)
    _, col_reps = np.unique(col_map, return_index=True)
    rm = ReducedMarkov(
        matrix=matrix,
        row_map=row_map.astype(np.int64),
        col_map=col_map.astype(np.int64),
        row_representatives=row_reps,
        col_representatives=col_reps,
        n=A.n,
        alphabet_max=A.alphabet_max,
        forbidden_digest=F.digest(),
        word_count=len(A),
        prefix_class_count=prefix_classes.count,
        suffix_class_count=suffix_classes.count,
        n_override=A.n_override,
    )
    bound = F.suffix_count() + 1
    if rm.K > bound:
        raise AssertionError(f"column classes {rm.K} exceed suffix bound {bound}")
    if not is_irreducible(rm):
        msg = "class transition graph is not strongly connected; Perron theory may not apply"
        warnings.warn(msg, stacklevel=2)
        rm.warnings.append(msg)
    return rm, A


def is_irreducible(rm: ReducedMarkov) -> bool:
    """Strong connectivity of the column-class graph k -> C(a) for words a with Mhat(R(a), k)."""
    pairs = rm.class_pairs()
    src, dst = [], []
    for r, c in pairs:
        for k in np.nonzero(rm.matrix[r])[0]:
            src.append(k)
            dst.append(c)
    g = csr_matrix((np.ones(len(src)), (src, dst)), shape=(rm.K, rm.K))
    ncomp, _ = connected_components(g, directed=True, connection="strong")
    return ncomp == 1
