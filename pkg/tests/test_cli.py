import json

import pytest

from gausscantor import cli


def run(argv, capsys):
    code = cli.main(argv)
    return code, capsys.readouterr().out


def test_matrix_stats_empty_set(capsys):
    code, out = run(["matrix-stats", "--set", "n=10"], capsys)
    assert code == 0
    assert "#A=1024 K=1" in out


def test_external_set_is_skipped(capsys):
    code, out = run(["matrix-stats", "--set", "set=OMEGA"], capsys)
    assert code == 0 and "skipped" in out


def test_config_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("set: B1\npartition: many\n")
    code, out = run(["matrix-stats", "--config", str(path)], capsys)
    assert code == 1 and "bad.yaml:2" in out


def test_dim_report_json(tmp_path, capsys):
    report = tmp_path / "r.json"
    code, out = run(["--report-json", str(report), "dim", "--set", "set=E2", "--t", "0.53128",
                     "--cache-dir", str(tmp_path / "cache")], capsys)
    assert code == 0 and "LOWER" in out
    record = json.loads(report.read_text())
    assert record["certificates"][0]["direction"] == "LOWER"
    assert record["counts"]["K"] == 1
    assert all(not e["rigorous"] for e in record["eigenvalues"])
    # second run reuses the cached matrix and reports the same certificate
    code, again = run(["dim", "--set", "set=E2", "--t", "0.53128", "--cache-dir", str(tmp_path / "cache")], capsys)
    assert "loaded from cache" in again
    assert out.splitlines()[0] == again.splitlines()[1]


def test_undecided_exit_code(capsys):
    code, out = run(["certify", "--set", "set=E2", "--t", "0.5312805063", "--set", "escalate=false",
                     "--partition", "16"], capsys)
    assert code == 2 and "undecided" in out


def test_bisection_bracket(capsys):
    code, out = run(["dim", "--set", "set=E2", "--t-lo", "0.531", "--t-hi", "0.532", "--set", "width=1e-5"], capsys)
    assert code == 0 and "< dim <" in out


def test_guardrail_requires_allow_long(monkeypatch, capsys):
    monkeypatch.setattr(cli, "LONG_RUN_COST", 10)
    code, out = run(["dim", "--set", "set=E2", "--t", "0.5"], capsys)
    assert code == 1 and "--allow-long" in out
    code, _ = run(["dim", "--set", "set=E2", "--t", "0.5", "--allow-long"], capsys)
    assert code == 0


def test_eigen_only(capsys):
    code, out = run(["dim", "--set", "set=E2", "--t", "0.53128", "--eigen-only", "--precision", "53"], capsys)
    assert code == 0 and "not a certificate" in out


def test_search_script_writes_set(tmp_path, capsys):
    script = tmp_path / "s.txt"
    target = tmp_path / "found.txt"
    script.write_text("seed 2*\nthreshold 3.334369\nbudget 2000\n")
    code, out = run(["search", str(script), "--output", str(target)], capsys)
    assert code == 0
    lines = [l for l in target.read_text().splitlines() if l and not l.startswith("#")]
    assert lines[:3] == ["alphabet_max 2", "include_reverses true", "21212"]


def test_search_script_errors(tmp_path, capsys):
    script = tmp_path / "s.txt"
    script.write_text("seed 2*\nthreshold 3.3\nside 2 Q\n")
    code, out = run(["search", str(script)], capsys)
    assert code == 1 and "s.txt:3" in out


def test_search_schedule_script(tmp_path, capsys):
    root = "222211112*12112221"
    script = tmp_path / "table.txt"
    script.write_text(
        f"seed {root}\nthreshold 3.334384009\nbudget 14\npolicy schedule\n"
        f"side {root} R\nside {root}1 L\nside 1{root}1 L\nside 21{root}1 L\n"
        f"side 11{root}1 R\nside 221{root}1 R\nside 221{root}11 R\n"
    )
    code, out = run(["search", str(script)], capsys)
    assert "121222211112121122211" in out


def test_verify_tables_flags_corrupt_line(tmp_path, capsys):
    fixture = tmp_path / "t.txt"
    fixture.write_text("g a 2112*12 3.2802 3.3193 A\ng b 2112*12 3.29 3.31 A\n")
    code, out = run(["verify-tables", str(fixture)], capsys)
    assert code == 1
    assert "line 2 g b" in out and "FAIL" in out and "1/2 rows pass" in out


def test_missing_fixture(capsys):
    code, out = run(["gap-check", "/nonexistent/gaps.txt"], capsys)
    assert code == 1 and "not found" in out


def test_gap_check_small_fixture(tmp_path, capsys):
    fixture = tmp_path / "g.txt"
    fixture.write_text("one 1 words=1 bound=0.5000001\n")
    code, out = run(["gap-check", str(fixture)], capsys)
    assert code == 0 and "1/1" in out
