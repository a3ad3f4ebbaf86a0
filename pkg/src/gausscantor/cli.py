"""Command-line entry point.

    gausscantor matrix-stats --set set=B1
    gausscantor dim --set set=B1 --t 0.50001 --t 0.50005
    gausscantor search script.txt
    gausscantor verify-tables
    gausscantor gap-check

Exit status is 0 when every requested check passed or certified, 2 when some
certification came back undecided, and 1 on errors or failed checks.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .balls import parse_exact
from .cache import ArtifactCache, bt_key_for, load_bt, load_markov, markov_key, store_bt, store_markov
from .certifier import CertificationError, bisect_dimension, certify_at
from .cf import PointedWord
from .config import ConfigError, JobConfig, load_config
from .subshift import reduced_markov
from .transfer import assemble_reduced_Bt, chebyshev_basis, leading_eig, provenance_hash

log = logging.getLogger("gausscantor")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_UNDECIDED = 2

# certification work above this many word-piece-class evaluations needs --allow-long
LONG_RUN_COST = 2 * 10**10


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage


@dataclass
class RunReport:
    command: str
    input_hash: str = ""
    timings: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    eigenvalues: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    lines: list = field(default_factory=list)
    exit_code: int = EXIT_OK

    def say(self, text: str) -> None:
        self.lines.append(text)

    def warn(self, text: str) -> None:
        self.warnings.append(text)

    def record(self) -> dict:
        return {
            "command": self.command,
            "input_hash": self.input_hash,
            "timings": {k: round(v, 3) for k, v in self.timings.items()},
            "counts": self.counts,
            "eigenvalues": self.eigenvalues,
            "certificates": self.certificates,
            "checks": self.checks,
            "warnings": self.warnings,
            "exit_code": self.exit_code,
        }

    def text(self) -> str:
        out = list(self.lines)
        out += [f"warning: {w}" for w in self.warnings]
        if self.timings:
            out.append("timings: " + ", ".join(f"{k} {v:.1f}s" for k, v in self.timings.items()))
        return "\n".join(out)


class _Timer:
    def __init__(self, report: RunReport, stage: str):
        self.report, self.stage = report, stage

    def __enter__(self):
        self.started = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.report.timings[self.stage] = self.report.timings.get(self.stage, 0.0) + time.perf_counter() - self.started
        if exc is not None and not isinstance(exc, (StageError, KeyboardInterrupt)):
            raise StageError(self.stage, exc) from exc
        return False


def _job_config(args) -> JobConfig:
    overrides = list(args.set or [])
    for flag, key in (("degree", "m"), ("precision", "precision_bits"), ("partition", "partition"),
                      ("threads", "threads"), ("cache_dir", "cache_dir"), ("t_lo", "t_lo"), ("t_hi", "t_hi")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides.append(f"{key}={value}")
    if getattr(args, "t", None):
        overrides.append("t=" + ",".join(args.t))
    if getattr(args, "allow_long", False):
        overrides.append("allow_long=true")
    return load_config(args.config, overrides)


def _markov(cfg: JobConfig, report: RunReport):
    with _Timer(report, "forbidden-set"):
        F = cfg.forbidden_set()
    cache = ArtifactCache(cfg.cache_dir) if cfg.cache_dir else None
    n = cfg.n if cfg.n is not None else F.default_n
    key = markov_key(F.digest(), n, F.alphabet_max)
    if cache is not None:
        found = load_markov(cache, key)
        if found is not None:
            report.say(f"reduced Markov matrix loaded from cache ({key})")
            return F, found[0], found[1], cache
    with _Timer(report, "reduced-markov"):
        rm, A = reduced_markov(F, cfg.n)
    if cache is not None:
        store_markov(cache, rm, A)
    return F, rm, A, cache


def _describe_set(cfg: JobConfig) -> str:
    if cfg.set:
        return cfg.set
    if cfg.words_file:
        return cfg.words_file
    return "custom" if cfg.words else "empty"


def cmd_matrix_stats(cfg: JobConfig, report: RunReport) -> None:
    if cfg.needs_external_words():
        report.say(f"{cfg.set}: skipped, no word list supplied (set words or words_file)")
        report.checks.append({"name": "matrix-stats", "status": "skipped"})
        return
    F, rm, A, _ = _markov(cfg, report)
    report.counts = {
        "forbidden_words": len(F),
        "n": rm.n,
        "allowed_words": rm.word_count,
        "row_classes": rm.row_count,
        "K": rm.K,
        "suffix_bound": F.suffix_count() + 1,
    }
    for w in rm.warnings:
        report.warn(w)
    if rm.n_override:
        report.warn(f"n={rm.n} is below the longest forbidden word minus one; counts are for the overridden n")
    report.say(f"{_describe_set(cfg)}: #A={rm.word_count} K={rm.K} (n={rm.n}, {rm.row_count} row classes)")


def _certification_cost(rm, cfg: JobConfig) -> int:
    return rm.word_count * cfg.partition * rm.K


def _eigen_only(cfg: JobConfig, rm, A, cache, report: RunReport) -> None:
    basis = chebyshev_basis(cfg.m, cfg.precision_bits)
    for t in cfg.t_values():
        B = None
        if cache is not None and cfg.precision_bits <= 53:
            B = load_bt(cache, bt_key_for(provenance_hash(rm, cfg.m), t, cfg.precision_bits))
        if B is None:
            with _Timer(report, "assemble"):
                B = assemble_reduced_Bt(rm, A, basis, t, cfg.precision_bits)
            if cache is not None and cfg.precision_bits <= 53:
                store_bt(cache, B)
        with _Timer(report, "eigen"):
            pair = leading_eig(B)
        report.eigenvalues.append({
            "t": str(t) if t.denominator != 1 else str(t.numerator),
            "eigenvalue": pair.eigenvalue,
            "collatz_lo": pair.ratio_lo,
            "collatz_hi": pair.ratio_hi,
            "rigorous": False,
        })
        report.say(f"t={float(t)} leading eigenvalue {pair.eigenvalue:.10f} (estimate, not a certificate)")


def _record_certificate(cert, report: RunReport) -> None:
    report.certificates.append(cert.record())
    report.say(cert.summary())
    if cert.eigenvalue is not None:
        report.eigenvalues.append({"t": cert.record()["t"], "eigenvalue": cert.eigenvalue, "rigorous": False})
    for note in cert.escalations:
        report.warn(f"t={cert.record()['t']}: {note}")
    if not cert.certified:
        report.exit_code = max(report.exit_code, EXIT_UNDECIDED)


def cmd_dim(cfg: JobConfig, report: RunReport, eigen_only: bool = False, allow_bracket: bool = True) -> None:
    if cfg.needs_external_words():
        report.say(f"{cfg.set}: skipped, no word list supplied (set words or words_file)")
        report.checks.append({"name": "dim", "status": "skipped"})
        return
    bracket = cfg.bracket() if allow_bracket else None
    if not cfg.t and bracket is None:
        raise ConfigError("give t values (--t) or a bracket (--t-lo/--t-hi)")
    F, rm, A, cache = _markov(cfg, report)
    report.counts = {"allowed_words": rm.word_count, "K": rm.K, "n": rm.n}
    for w in rm.warnings:
        report.warn(w)
    if eigen_only:
        _eigen_only(cfg, rm, A, cache, report)
        return
    cost = _certification_cost(rm, cfg)
    if cost > LONG_RUN_COST and not cfg.allow_long:
        raise ConfigError(
            f"estimated certification cost #A*P*K = {cost:.3g} exceeds {LONG_RUN_COST:.0e}; "
            "rerun with --allow-long, or use --eigen-only for a non-rigorous estimate"
        )
    for t in cfg.t_values():
        with _Timer(report, "certify"):
            cert = certify_at(rm, A, t, cfg.m, cfg.precision_bits, cfg.partition, cfg.threads, cfg.escalate)
        _record_certificate(cert, report)
    if bracket is not None:
        width = parse_exact(cfg.width) if cfg.width else None
        with _Timer(report, "bisect"):
            try:
                lower, upper = bisect_dimension(
                    F, cfg.n, cfg.m, cfg.precision_bits, bracket[0], bracket[1],
                    max_steps=cfg.max_steps, partition=cfg.partition, threads=cfg.threads,
                    width=width, markov=(rm, A),
                )
            except CertificationError as exc:
                report.warn(str(exc))
                report.exit_code = max(report.exit_code, EXIT_UNDECIDED)
                return
        for cert in (lower, upper):
            _record_certificate(cert, report)
        report.say(f"bracket: {lower.record()['t']} < dim < {upper.record()['t']}")
        report.checks.append({"name": "bracket", "lower": lower.record()["t"], "upper": upper.record()["t"]})


# ---- search scripts ----------------------------------------------------------

@dataclass
class SearchScript:
    seed: PointedWord
    threshold: str
    policy: object = "widest"
    budget: int = 2000
    minimize: bool = True
    output: Optional[str] = None


def parse_search_script(text: str, source: str = "<script>") -> SearchScript:
    """Lines ``key value``; keys seed, threshold, policy, budget, minimize, output,
    and repeatable ``side POINTED L|R`` entries forming a schedule."""
    values: dict = {}
    schedule: dict = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        where = f"{source}:{n}"
        if key == "side":
            if len(rest) != 2 or rest[1].upper() not in ("L", "R"):
                raise ConfigError(f"{where}: expected 'side POINTED L|R'")
            try:
                PointedWord.parse(rest[0])
            except ValueError as exc:
                raise ConfigError(f"{where}: {exc}") from None
            schedule[rest[0]] = rest[1].upper()
        elif key in ("seed", "threshold", "policy", "budget", "minimize", "output"):
            if len(rest) != 1:
                raise ConfigError(f"{where}: {key} takes one value")
            values[key] = (rest[0], where)
        else:
            raise ConfigError(f"{where}: unknown key {key!r}")
    if "seed" not in values or "threshold" not in values:
        raise ConfigError(f"{source}: seed and threshold are required")
    try:
        seed = PointedWord.parse(values["seed"][0])
    except ValueError as exc:
        raise ConfigError(f"{values['seed'][1]}: {exc}") from None
    try:
        parse_exact(values["threshold"][0])
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{values['threshold'][1]}: bad threshold {values['threshold'][0]!r}") from None
    script = SearchScript(seed=seed, threshold=values["threshold"][0])
    if "policy" in values:
        policy, where = values["policy"]
        if policy not in ("widest", "left", "right", "schedule"):
            raise ConfigError(f"{where}: policy must be widest, left, right or schedule")
        script.policy = policy
    if schedule or script.policy == "schedule":
        script.policy = schedule
    if "budget" in values:
        try:
            script.budget = int(values["budget"][0])
        except ValueError:
            raise ConfigError(f"{values['budget'][1]}: budget must be an integer") from None
    if "minimize" in values:
        script.minimize = values["minimize"][0].lower() in ("true", "yes", "1", "on")
    if "output" in values:
        script.output = values["output"][0]
    return script


def forbidden_set_text(words: list, comment: str) -> str:
    lines = [f"# {comment}", "alphabet_max 2", "include_reverses true"]
    return "\n".join(lines + list(words)) + "\n"


def cmd_search(script_path: str, output: Optional[str], report: RunReport) -> None:
    from .search import explore

    text = Path(script_path).read_text()
    report.input_hash = hashlib.sha256(text.encode()).hexdigest()[:16]
    script = parse_search_script(text, script_path)
    with _Timer(report, "search"):
        result = explore(script.seed, script.threshold, script.policy, script.budget, script.minimize)
    report.lines.extend(result.report().splitlines())
    report.counts = {"nodes": len(result.tree), "forbidden_words": len(result.forbidden)}
    if result.budget_exhausted:
        report.warn("node budget exhausted before the tree closed")
    if result.open_nodes:
        report.warn(f"{len(result.open_nodes)} nodes undecided at doubled precision")
        report.exit_code = max(report.exit_code, EXIT_UNDECIDED)
    target = output or script.output
    if target:
        Path(target).write_text(forbidden_set_text(result.forbidden_strings(), f"search from {script.seed} at threshold {script.threshold}"))
        report.say(f"forbidden set written to {target}")
    upper = result.upper_candidate.decimal_bounds(10)[1] if result.upper_candidate is not None else None
    report.checks.append({"name": "search", "forbidden": result.forbidden_strings(), "upper_candidate": upper,
                          "budget_exhausted": result.budget_exhausted})


# ---- fixtures ------------------------------------------------------------------

def _fixture_text(path: Optional[str], name: str) -> tuple[str, str]:
    if path:
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(f"fixture {path} not found")
        return p.read_text(), str(p)
    return resources.files("gausscantor").joinpath("data", "fixtures", name).read_text(), name


def cmd_verify_tables(path: Optional[str], groups: list, report: RunReport) -> None:
    from .search import check_table_fixture, parse_table_fixture

    text, source = _fixture_text(path, "tables.txt")
    report.input_hash = hashlib.sha256(text.encode()).hexdigest()[:16]
    rows = parse_table_fixture(text)
    if groups:
        rows = [r for r in rows if r.group in groups]
    failures = 0
    with _Timer(report, "verify-tables"):
        for row in rows:
            check = check_table_fixture(row)
            report.say(check.report())
            report.checks.append(check.record())
            failures += not check.passed
    report.say(f"{source}: {len(rows) - failures}/{len(rows)} rows pass")
    if failures:
        report.exit_code = EXIT_FAILED


def cmd_gap_check(path: Optional[str], report: RunReport) -> None:
    from .gaps import check_fixture_line, parse_gap_fixture

    text, source = _fixture_text(path, "gaps.txt")
    report.input_hash = hashlib.sha256(text.encode()).hexdigest()[:16]
    lines = parse_gap_fixture(text)
    failures = 0
    with _Timer(report, "gap-check"):
        for line in lines:
            check = check_fixture_line(line)
            report.say(check.report())
            report.checks.append({"line": line.line_number, "label": line.label, "passed": check.passed})
            for word, const, sup in check.constant_discrepancies:
                report.warn(f"line {line.line_number}: constant {const} for {word} is below the true sup {sup}")
            failures += not check.passed
    report.say(f"{source}: {len(lines) - failures}/{len(lines)} inequalities pass")
    if failures:
        report.exit_code = EXIT_FAILED


# ---- argument parsing ----------------------------------------------------------

def _add_job_flags(p: argparse.ArgumentParser, with_t: bool) -> None:
    p.add_argument("--config", help="YAML job file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field (repeatable)")
    p.add_argument("--degree", type=int, help="collocation points per class (m)")
    p.add_argument("--precision", type=int, help="working precision in bits")
    p.add_argument("--partition", type=int, help="pieces of [0,1] in the min-max check")
    p.add_argument("--threads", type=int)
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--allow-long", dest="allow_long", action="store_true", help="permit runs above the cost guardrail")
    if with_t:
        p.add_argument("--t", action="append", help="exponent to certify (repeatable, exact decimal)")
        p.add_argument("--t-lo", dest="t_lo")
        p.add_argument("--t-hi", dest="t_hi")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gausscantor", description="Rigorous dimension bounds for Gauss-Cantor sets.")
    parser.add_argument("--report-json", dest="report_json", help="also write the run record as JSON here")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("matrix-stats", help="count allowed words and reduced classes")
    _add_job_flags(p, with_t=False)

    p = sub.add_parser("dim", help="certify at t values or bisect a bracket")
    _add_job_flags(p, with_t=True)
    p.add_argument("--eigen-only", dest="eigen_only", action="store_true",
                   help="only estimate the leading eigenvalue (not rigorous)")

    p = sub.add_parser("certify", help="certify at the given t values only")
    _add_job_flags(p, with_t=True)

    p = sub.add_parser("search", help="run a threshold search script")
    p.add_argument("script")
    p.add_argument("--output", help="write the forbidden set here (overrides the script)")

    p = sub.add_parser("verify-tables", help="check interval claims for pointed words")
    p.add_argument("fixture", nargs="?")
    p.add_argument("--group", action="append", default=[], help="only rows of this group (repeatable)")

    p = sub.add_parser("gap-check", help="check cylinder-ratio inequalities")
    p.add_argument("fixture", nargs="?")
    return parser


def run(argv=None) -> RunReport:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    report = RunReport(command=args.command)
    try:
        if args.command in ("matrix-stats", "dim", "certify"):
            cfg = _job_config(args)
            report.input_hash = cfg.input_hash()
            if args.command == "matrix-stats":
                cmd_matrix_stats(cfg, report)
            elif args.command == "dim":
                cmd_dim(cfg, report, eigen_only=args.eigen_only)
            else:
                cmd_dim(cfg, report, allow_bracket=False)
        elif args.command == "search":
            cmd_search(args.script, args.output, report)
        elif args.command == "verify-tables":
            cmd_verify_tables(args.fixture, args.group, report)
        else:
            cmd_gap_check(args.fixture, report)
    except (ConfigError, StageError, FileNotFoundError, ValueError) as exc:
        report.say(f"error: {exc}")
        report.exit_code = EXIT_FAILED
    if args.report_json:
        Path(args.report_json).write_text(json.dumps(report.record(), indent=2, default=str))
    return report


def main(argv=None) -> int:
    report = run(argv)
    print(report.text())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
