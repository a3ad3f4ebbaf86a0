"""Recursive threshold search over pointed words and table-row verification.

A pointed word whose J interval lies above the threshold T is excluded, one
below T is abandoned (its right end bounds the Markov values it can carry),
and one straddling T is split by adding a digit on one side.
"""

from __future__ import annotations

import enum
import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Union

from .balls import DEFAULT_PRECISION, BallInterval, parse_exact
from .cf import J_endpoints, PointedWord, side_gaps, word_str
from .subshift import _contains

log = logging.getLogger(__name__)

SQRT_TWELVE = "sqrt(12)"
PRUNE_DEPTH = 10


class Status(str, enum.Enum):
    EXCLUDE = "E"
    ABANDON = "A"
    SUBDIVIDE = "S"
    OPEN = "O"


@dataclass
class SearchNode:
    pointed: PointedWord
    lower: Optional[BallInterval]
    upper: Optional[BallInterval]
    status: Status
    pruned_by: Optional[tuple] = None
    note: str = ""

    @property
    def interval(self) -> Optional[BallInterval]:
        if self.lower is None:
            return None
        return BallInterval.hull(self.lower, self.upper)


def _threshold(T) -> Fraction:
    if isinstance(T, Fraction):
        return T
    return parse_exact(str(T))


def classify(pw: PointedWord, T, precision_bits: int = DEFAULT_PRECISION) -> SearchNode:
    """Three-valued classification of J(pw) against T; one precision doubling on a tie."""
    T = _threshold(T)
    for prec in (precision_bits, 2 * precision_bits):
        lo, hi = J_endpoints(pw, prec)
        if lo.greater_than(T) is True:
            return SearchNode(pw, lo, hi, Status.EXCLUDE)
        if hi.less_than(T) is True:
            return SearchNode(pw, lo, hi, Status.ABANDON)
        if lo.less_than(T) is True and hi.greater_than(T) is True:
            return SearchNode(pw, lo, hi, Status.SUBDIVIDE)
    return SearchNode(pw, lo, hi, Status.OPEN, note="undecided even after doubling the precision")


def widest_side(pw: PointedWord) -> str:
    """Extend the side whose unknown tail contributes more to the width of J."""
    left, right = side_gaps(pw)
    return "L" if left > right else "R"


Policy = Union[str, Mapping[str, str], Callable[[PointedWord], str]]


def _side_chooser(policy: Policy) -> Callable[[PointedWord], str]:
    if callable(policy):
        return policy
    if isinstance(policy, str):
        if policy == "widest":
            return widest_side
        if policy in ("left", "right"):
            return lambda pw: policy[0].upper()
        raise ValueError(f"unknown policy {policy!r}")
    schedule = {str(PointedWord.parse(k)): v.upper() for k, v in policy.items()}
    return lambda pw: schedule.get(str(pw), widest_side(pw))


@dataclass
class SearchResult:
    forbidden: list
    excluded: list
    upper_candidate: Optional[BallInterval]
    tree: list
    budget_exhausted: bool
    threshold: Fraction
    open_nodes: list = field(default_factory=list)

    def forbidden_strings(self) -> list:
        return [word_str(w) for w in self.forbidden]

    def report(self) -> str:
        lines = [f"threshold {self.threshold} ({float(self.threshold):.10f})"]
        for node in self.tree:
            bounds = ""
            if node.lower is not None:
                bounds = f"[{node.lower.decimal_bounds(10)[0]}, {node.upper.decimal_bounds(10)[1]}]"
            extra = f" contains excluded {word_str(node.pruned_by)}" if node.pruned_by else ""
            lines.append(f"{node.status.value} {node.pointed} {bounds}{extra}{' ' + node.note if node.note else ''}")
        if self.upper_candidate is not None:
            lines.append(f"upper candidate S <= {self.upper_candidate.decimal_bounds(10)[1]}")
        if self.budget_exhausted:
            lines.append("node budget exhausted; remaining open nodes counted in S")
        lines.append("forbidden: " + " ".join(self.forbidden_strings()))
        return "\n".join(lines)


def minimize_exclusion(pw: PointedWord, T, precision_bits: int = DEFAULT_PRECISION) -> PointedWord:
    """Drop outer digits while the shorter pointed word is still excluded.

    A shorter pointed word has a larger J interval, so any survivor is still
    entirely above T and forbids more sequences.
    """
    T = _threshold(T)
    current = pw
    changed = True
    while changed:
        changed = False
        for side in ("L", "R"):
            count = current.left_count if side == "L" else current.right_count
            if count == 0:
                continue
            candidate = current.trim(side)
            lo, _ = J_endpoints(candidate, precision_bits)
            if lo.greater_than(T) is True:
                current = candidate
                changed = True
    return current


def _hits(word: tuple, excluded: list) -> Optional[tuple]:
    for e in excluded:
        if _contains(word, e) or _contains(word, tuple(reversed(e))):
            return e
    return None


def explore(
    seed: PointedWord,
    T,
    policy: Policy = "widest",
    max_nodes: int = 2000,
    minimize: bool = True,
    precision_bits: int = DEFAULT_PRECISION,
) -> SearchResult:
    """Breadth-first subdivision from ``seed`` against threshold T."""
    T = _threshold(T)
    choose = _side_chooser(policy)
    tree: list[SearchNode] = []
    excluded: list[tuple] = []
    excluded_pointed: list[PointedWord] = []
    upper: Optional[BallInterval] = None
    queue = deque([seed])
    open_nodes: list[SearchNode] = []
    budget_exhausted = False

    def raise_upper(b: BallInterval):
        # keep the ball with the largest upper end; a ball hull would loosen it
        nonlocal upper
        if upper is None or b.hi > upper.hi:
            upper = b

    while queue:
        if len(tree) >= max_nodes:
            budget_exhausted = True
            break
        pw = queue.popleft()
        hit = _hits(pw.word, excluded)
        if hit is not None:
            tree.append(SearchNode(pw, None, None, Status.EXCLUDE, pruned_by=hit))
            continue
        node = classify(pw, T, precision_bits)
        tree.append(node)
        if node.status is Status.EXCLUDE:
            shortest = minimize_exclusion(pw, T, precision_bits) if minimize else pw
            if shortest != pw:
                node.note = f"shortened to {shortest}"
            excluded.append(shortest.word)
            excluded_pointed.append(shortest)
        elif node.status is Status.ABANDON:
            raise_upper(node.upper)
        elif node.status is Status.SUBDIVIDE:
            side = choose(pw)
            queue.extend(pw.extend(side, d) for d in (1, 2))
        else:
            open_nodes.append(node)
            raise_upper(node.upper)
    for pw in queue:
        # unexpanded frontier: J(pw) may still reach above T
        if _hits(pw.word, excluded) is None:
            _, hi = J_endpoints(pw, precision_bits)
            raise_upper(hi)
    words = set()
    for w in excluded:
        words.add(w)
        words.add(tuple(reversed(w)))
    forbidden = sorted(words, key=lambda w: (len(w), w))
    return SearchResult(
        forbidden=forbidden,
        excluded=excluded_pointed,
        upper_candidate=upper,
        tree=tree,
        budget_exhausted=budget_exhausted,
        threshold=T,
        open_nodes=open_nodes,
    )


def verify_table_row(
    pw: PointedWord,
    claimed_lo: str,
    claimed_hi: str,
    precision_bits: int = DEFAULT_PRECISION,
) -> bool:
    """True iff the rigorous J(pw) lies inside the claimed interval.

    ``sqrt(12)`` as an upper end is always met: every {1,2} sequence has
    Markov value at most sqrt(12).
    """
    lo, hi = J_endpoints(pw, precision_bits)
    lo_ok = lo.greater_or_equal(_claim(claimed_lo, precision_bits)) is True
    if claimed_hi.replace(" ", "") == SQRT_TWELVE:
        hi_ok = True
    else:
        hi_ok = hi.less_or_equal(_claim(claimed_hi, precision_bits)) is True
    return lo_ok and hi_ok


def _claim(text: str, precision_bits: int) -> BallInterval:
    text = text.replace(" ", "")
    if text.startswith("sqrt(") and text.endswith(")"):
        return BallInterval(parse_exact(text[5:-1]), precision_bits).sqrt()
    return BallInterval(parse_exact(text), precision_bits)


def J_pruned(pw: PointedWord, excluded: list, depth: int = PRUNE_DEPTH, precision_bits: int = DEFAULT_PRECISION) -> tuple[BallInterval, BallInterval]:
    """Hull of J over the depth-``depth`` two-sided extensions of ``pw`` that avoid
    every word in ``excluded``; encloses J restricted to sequences avoiding them."""
    frontier = [pw]
    for step in range(depth):
        side = "R" if step % 2 == 0 else "L"
        nxt = []
        for node in frontier:
            for d in (1, 2):
                child = node.extend(side, d)
                if _hits(child.word, excluded) is None:
                    nxt.append(child)
        frontier = nxt
    if not frontier:
        raise ValueError("every extension contains an excluded word")
    lows, highs = zip(*(J_endpoints(node, precision_bits) for node in frontier))
    lo = min(lows, key=lambda b: b.lo)
    hi = max(highs, key=lambda b: b.hi)
    return lo, hi


def verify_table_row_pruned(pw: PointedWord, claimed_lo: str, claimed_hi: str, excluded: list, depth: int = PRUNE_DEPTH, precision_bits: int = DEFAULT_PRECISION) -> bool:
    lo, hi = J_pruned(pw, excluded, depth, precision_bits)
    return lo.greater_or_equal(_claim(claimed_lo, precision_bits)) is True and (
        claimed_hi.replace(" ", "") == SQRT_TWELVE or hi.less_or_equal(_claim(claimed_hi, precision_bits)) is True
    )


@dataclass
class TableFixtureRow:
    line_number: int
    group: str
    label: str
    pointed: PointedWord
    claimed_lo: str
    claimed_hi: str
    action: str
    excluding: tuple = ()
    depth: int = PRUNE_DEPTH


def parse_table_fixture(text: str) -> list[TableFixtureRow]:
    """Rows ``group label pointed lo hi action [excluding=w1,w2] [depth=k]``."""
    rows = []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 6:
            raise ValueError(f"line {n}: expected at least six columns, got {len(parts)}")
        group, label, pointed, lo, hi, action, *opts = parts
        if action not in ("E", "A", "S"):
            raise ValueError(f"line {n}: action must be E, A or S, got {action!r}")
        try:
            pw = PointedWord.parse(pointed)
            for claim in (lo, hi):
                _claim(claim, 64)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"line {n}: {exc}") from None
        row = TableFixtureRow(n, group, label, pw, lo, hi, action)
        for opt in opts:
            key, _, value = opt.partition("=")
            if key == "excluding" and value:
                row.excluding = tuple(tuple(int(c) for c in w) for w in value.split(","))
            elif key == "depth" and value.isdigit():
                row.depth = int(value)
            else:
                raise ValueError(f"line {n}: unknown option {opt!r}")
        rows.append(row)
    return rows


@dataclass
class TableCheck:
    row: TableFixtureRow
    lower: BallInterval
    upper: BallInterval
    passed: bool

    def report(self) -> str:
        r = self.row
        got = f"[{self.lower.decimal_bounds(10)[0]}, {self.upper.decimal_bounds(10)[1]}]"
        context = f" avoiding {','.join(word_str(w) for w in r.excluding)}" if r.excluding else ""
        verdict = "PASS" if self.passed else "FAIL"
        return f"line {r.line_number} {r.group} {r.label} {r.pointed} claimed [{r.claimed_lo}, {r.claimed_hi}] got {got}{context} {verdict}"

    def record(self) -> dict:
        return {
            "line": self.row.line_number,
            "group": self.row.group,
            "label": self.row.label,
            "pointed": str(self.row.pointed),
            "lower": self.lower.decimal_bounds(12)[0],
            "upper": self.upper.decimal_bounds(12)[1],
            "passed": self.passed,
        }


def check_table_fixture(row: TableFixtureRow, precision_bits: int = DEFAULT_PRECISION) -> TableCheck:
    if row.excluding:
        lo, hi = J_pruned(row.pointed, list(row.excluding), row.depth, precision_bits)
        ok = verify_table_row_pruned(row.pointed, row.claimed_lo, row.claimed_hi, list(row.excluding), row.depth, precision_bits)
    else:
        lo, hi = J_endpoints(row.pointed, precision_bits)
        ok = verify_table_row(row.pointed, row.claimed_lo, row.claimed_hi, precision_bits)
    return TableCheck(row, lo, hi, ok)
