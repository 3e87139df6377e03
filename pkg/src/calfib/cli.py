"""Command-line front end: ``calfib --suite NAME [options]``.

Exit codes: 0 all cases pass, 1 some case fails, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from .config import SUITE_CHOICES, ConfigError, RunConfig, load_config, parse_assignment
from .suites import SUITES, SuiteContext, run_cases

SCHEMA_VERSION = "1.0"


class ScalarCaseError(ValueError):
    pass


def run_suite(name: str, config: RunConfig) -> tuple[int, dict]:
    """Run one suite (or all) and return ``(exit_status, report)``."""
    if name not in SUITE_CHOICES:
        raise ConfigError(f"unknown suite {name!r}")
    ctx = SuiteContext(config.seed, config.effective_resolutions(), config.effective_tolerances())
    names = SUITES if name == "all" else (name,)
    cases = [c.to_dict() for n in names for c in run_cases(n, ctx, parallel=config.parallel)]
    passed = sum(c["pass"] for c in cases)
    report = {
        "header": {"schema_version": SCHEMA_VERSION,
                   "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                   "seed": config.seed, "config": config.to_dict()},
        "suite": name,
        "cases": cases,
        "summary": {"total": len(cases), "passed": passed, "failed": len(cases) - passed},
    }
    return (0 if passed == len(cases) else 1), report


def report_body(report: dict) -> str:
    """The report without its header; identical for identical config and seed."""
    return json.dumps({k: v for k, v in report.items() if k != "header"}, sort_keys=True)


def emit_plot_data(case_id: str, report: dict) -> str:
    """CSV of a case's array data, header row naming units."""
    case = next((c for c in report["cases"] if c["id"] == case_id), None)
    if case is None:
        raise KeyError(f"no case {case_id!r} in the report")
    data = case.get("data")
    if not data or not data.get("rows"):
        raise ScalarCaseError(f"case {case_id!r} is scalar-only and has no array data to plot")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(data["columns"])
    for row in data["rows"]:
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="calfib", description="Run the calibrated-fibration verification suites.")
    p.add_argument("--suite", choices=SUITE_CHOICES, help="suite to run (default: all)")
    p.add_argument("--config", type=Path, help="flat key=value configuration file")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--out", type=Path, help="output directory for reports and CSV files")
    p.add_argument("--resolution", action="append", default=[], metavar="NAME=INT",
                   help="override a sampling resolution (repeatable)")
    p.add_argument("--tolerance", action="append", default=[], metavar="NAME=FLOAT",
                   help="override a tolerance (repeatable)")
    p.add_argument("--parallel", action="store_true", help="run case groups concurrently")
    p.add_argument("--csv", action="append", default=[], metavar="CASE_ID",
                   help="write plot data of a case as CSV (repeatable)")
    p.add_argument("--quiet", action="store_true", help="suppress per-case lines")
    return p


def _config_from_args(args) -> RunConfig:
    kw = load_config(args.config) if args.config else {"resolutions": {}, "tolerances": {}}
    if args.suite:
        kw["suite"] = args.suite
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.out:
        kw["out"] = args.out
    if args.parallel:
        kw["parallel"] = True
    try:
        for item in args.resolution:
            k, v = parse_assignment(item, int)
            kw["resolutions"][k] = v
        for item in args.tolerance:
            k, v = parse_assignment(item, float)
            kw["tolerances"][k] = v
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(**kw)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = _config_from_args(args)
    except ConfigError as exc:
        print(f"calfib: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2

    status, report = run_suite(config.suite, config)
    config.out.mkdir(parents=True, exist_ok=True)
    path = config.out / f"report-{config.suite}.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if not args.quiet:
        for c in report["cases"]:
            print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['id']}  measured={json.dumps(c['measured'])}")
    for case_id in args.csv:
        try:
            text = emit_plot_data(case_id, report)
        except (KeyError, ScalarCaseError) as exc:
            print(f"calfib: {exc.args[0]}", file=sys.stderr)
            status = max(status, 2)
            continue
        (config.out / f"{case_id}.csv").write_text(text)
    s = report["summary"]
    print(f"{s['passed']}/{s['total']} cases passed; report written to {path}")
    return status


if __name__ == "__main__":
    sys.exit(main())
