from importlib import resources

import pytest

from gausscantor.cf import J_endpoints, PointedWord
from gausscantor.search import (
    Status,
    check_table_fixture,
    classify,
    explore,
    minimize_exclusion,
    parse_table_fixture,
    verify_table_row,
    verify_table_row_pruned,
)

ROOT = "222211112*12112221"
SUBTREE_SCHEDULE = {
    ROOT: "R",
    ROOT + "1": "L",
    "1" + ROOT + "1": "L",
    "21" + ROOT + "1": "L",
    "11" + ROOT + "1": "R",
    "221" + ROOT + "1": "R",
    "221" + ROOT + "11": "R",
}


def test_classification_statuses():
    assert classify(PointedWord.parse("212*12"), "3.334369").status is Status.EXCLUDE
    assert classify(PointedWord.parse("112*11"), "3.334369").status is Status.ABANDON
    assert classify(PointedWord.parse("2*"), "3.334369").status is Status.SUBDIVIDE


def test_minimized_exclusion_stays_above():
    pw = PointedWord.parse("1212*1211")
    short = minimize_exclusion(pw, "3.334369")
    assert len(short.word) < len(pw.word)
    assert J_endpoints(short)[0].greater_than("3.334369") is True


def test_search_from_two_finds_first_exclusion():
    result = explore(PointedWord.parse("2*"), "3.334369")
    assert not result.budget_exhausted
    assert (2, 1, 2, 1, 2) in result.forbidden
    assert min(len(w) for w in result.forbidden) == 5
    assert result.upper_candidate.less_than("3.334369") is True
    # every forbidden word's J interval sits above the threshold with the zero placed where it was found
    for pw in result.excluded:
        assert J_endpoints(pw)[0].greater_than("3.334369") is True


def test_high_threshold_abandons_root():
    result = explore(PointedWord.parse("112*11"), "3.4")
    assert [n.status for n in result.tree] == [Status.ABANDON]
    assert result.forbidden == []


def test_scheduled_subtree():
    result = explore(PointedWord.parse(ROOT), "3.334384009", policy=SUBTREE_SCHEDULE, max_nodes=14)
    found = set(result.forbidden_strings())
    for word in ("12222111121211222112", "121222211112121122211", "2122221111212112221111"):
        assert word in found


def test_sqrt_twelve_upper_is_always_met():
    assert verify_table_row(PointedWord.parse("212*12"), "3.4", "sqrt(12)")


def test_negative_control_fails():
    pw = PointedWord.parse("2112*12")
    assert verify_table_row(pw, "3.2802", "3.3193")
    assert not verify_table_row(pw, "3.29", "3.31")


def test_pruned_row_needs_enough_depth():
    pw = PointedWord.parse("211221112*12211")
    assert verify_table_row_pruned(pw, "3.3343894", "3.3352", [(2, 1, 1, 1, 2, 1, 2, 1)], depth=10)
    assert not verify_table_row_pruned(pw, "3.3343894", "3.3352", [(2, 1, 1, 1, 2, 1, 2, 1)], depth=6)


@pytest.mark.parametrize("pointed, lo, hi", [
    ("2211112*121121", "3.33369", "3.33426"),
    ("11222211112*1211222111", "3.334381", "3.3343837"),
])
def test_corrected_rows_fit(pointed, lo, hi):
    assert verify_table_row(PointedWord.parse(pointed), lo, hi)


def test_fixture_reports_line_numbers():
    rows = parse_table_fixture("# header\n\nbase x 2112*12 3.29 3.31 A\n")
    check = check_table_fixture(rows[0])
    assert not check.passed
    assert check.report().startswith("line 3 ")
    with pytest.raises(ValueError, match="line 1"):
        parse_table_fixture("base x 21*12 3.1 A\n")


def test_packaged_fixture_parses():
    text = resources.files("gausscantor").joinpath("data", "fixtures", "tables.txt").read_text()
    rows = parse_table_fixture(text)
    assert {r.group for r in rows} == {"base", "extra", "first", "second", "third"}
    assert len(rows) == 60
