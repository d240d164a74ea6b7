"""Command-line interface.

Subcommands map one-to-one onto harness entry points:

  run <scenario-file>        evaluate a scenario in its own mode
  enumerate <scenario-file>  force exact evaluation
  table1                     intercept-resend branch table for |0>_z
  attack-suite               preset battery with expectation checks
  report <report.json>       re-render a saved JSON report (json/csv)
  presets                    list (or show) the preset scenarios
  serve                      start the HTTP service

Exit codes: 0 success, 1 expectation failure, 2 configuration/usage error.
Relative --out paths resolve under $BASISKEY_OUTPUT_DIR when it is set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path
from typing import List, Optional

from .harness import (
    MODE_ENUMERATE,
    NotEnumerableError,
    ScenarioError,
    build_report,
    check_expectations,
    enumerate_exact,
    load_scenario,
    run_attack_suite,
    run_monte_carlo,
    table1_report,
)
from .harness.presets import PRESET_ORDER, PRESETS
from .harness.reports import render_csv, render_json, report_passed
from .harness.table import TABLE1_COLUMNS, render_table1_text

OUTPUT_DIR_ENV = "BASISKEY_OUTPUT_DIR"

_EXIT_OK = 0
_EXIT_EXPECTATION = 1
_EXIT_CONFIG = 2


def _resolve_out(path: Optional[str]) -> Optional[Path]:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")


def _render_reports(reports: List[dict], fmt: str) -> str:
    return render_csv(reports) if fmt == "csv" else render_json(reports)


def _load_scenario_or_fail(path: str):
    try:
        return load_scenario(path)
    except OSError as exc:
        raise SystemExit(_fail_config(f"cannot read scenario file: {exc}"))
    except ScenarioError as exc:
        raise SystemExit(_fail_config(f"{path}: {exc}"))


def _fail_config(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return _EXIT_CONFIG


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = _load_scenario_or_fail(args.scenario)
    t0 = time.perf_counter()
    try:
        if scenario.mode == MODE_ENUMERATE:
            metrics = enumerate_exact(scenario)
            seed = None
        else:
            metrics = run_monte_carlo(scenario, master_seed=args.seed)
            seed = args.seed if args.seed is not None else scenario.seed
    except NotEnumerableError as exc:
        return _fail_config(str(exc))
    rows, ok = check_expectations(scenario, metrics)
    report = build_report(
        scenario.name, metrics, rows, seed=seed,
        elapsed_seconds=time.perf_counter() - t0,
    )
    _emit(_render_reports([report], args.format), _resolve_out(args.out))
    return _EXIT_OK if ok else _EXIT_EXPECTATION


def _cmd_enumerate(args: argparse.Namespace) -> int:
    scenario = _load_scenario_or_fail(args.scenario)
    t0 = time.perf_counter()
    try:
        metrics = enumerate_exact(scenario)
    except NotEnumerableError as exc:
        return _fail_config(str(exc))
    rows, ok = check_expectations(scenario, metrics)
    report = build_report(
        scenario.name, metrics, rows, elapsed_seconds=time.perf_counter() - t0
    )
    _emit(_render_reports([report], args.format), _resolve_out(args.out))
    return _EXIT_OK if ok else _EXIT_EXPECTATION


def _cmd_table1(args: argparse.Namespace) -> int:
    rows = table1_report()
    if args.format == "text":
        text = render_table1_text(rows) + "\n"
    elif args.format == "json":
        payload = {
            "rows": [
                {
                    **{c: row[c] for c in TABLE1_COLUMNS[:-1]},
                    "probability": str(row["probability"]),
                    "probability_float": float(row["probability"]),
                }
                for row in rows
            ]
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:  # csv
        lines = [",".join(TABLE1_COLUMNS)]
        for row in rows:
            lines.append(
                ",".join(str(row[c]) for c in TABLE1_COLUMNS)
            )
        text = "\n".join(lines) + "\n"
    _emit(text, _resolve_out(args.out))
    return _EXIT_OK


def _cmd_attack_suite(args: argparse.Namespace) -> int:
    names = args.preset if args.preset else None
    try:
        result = run_attack_suite(
            master_seed=args.seed, mc_scale=args.mc_scale, names=names
        )
    except (KeyError, ValueError) as exc:
        detail = exc.args[0] if exc.args else exc
        return _fail_config(str(detail))

    if args.format == "text":
        lines = []
        for report in result.reports:
            failed = [r for r in report["expectations"] if not r["pass"]]
            status = "ok  " if not failed else "FAIL"
            lines.append(
                f"{status} {report['scenario']:40s} "
                f"{len(report['expectations'])} checks"
            )
            for row in failed:
                lines.append(
                    f"       {row['metric']}: expected {row['expected']} "
                    f"+/- {row['tolerance']}"
                )
        lines.append(
            f"{'ok' if result.ok else 'FAIL'}: {len(result.reports)} presets "
            f"in {result.elapsed_seconds:.1f}s"
        )
        text = "\n".join(lines) + "\n"
    elif args.format == "json":
        payload = {
            "ok": result.ok,
            "elapsed_seconds": result.elapsed_seconds,
            "reports": result.reports,
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:  # csv
        text = render_csv(result.reports)
    _emit(text, _resolve_out(args.out))
    return _EXIT_OK if result.ok else _EXIT_EXPECTATION


def _cmd_report(args: argparse.Namespace) -> int:
    try:
        payload = json.loads(Path(args.report).read_text(encoding="utf-8"))
    except OSError as exc:
        return _fail_config(f"cannot read report: {exc}")
    except json.JSONDecodeError as exc:
        return _fail_config(f"{args.report}: invalid JSON: {exc}")
    if isinstance(payload, dict) and "reports" in payload:
        reports = payload["reports"]  # suite output
    elif isinstance(payload, dict):
        reports = [payload]
    elif isinstance(payload, list):
        reports = payload
    else:
        return _fail_config(f"{args.report}: not a report document")
    for report in reports:
        if not isinstance(report, dict) or "metrics" not in report:
            return _fail_config(f"{args.report}: not a report document")
    _emit(_render_reports(reports, args.format), _resolve_out(args.out))
    return _EXIT_OK if all(report_passed(r) for r in reports) else _EXIT_EXPECTATION


def _cmd_presets(args: argparse.Namespace) -> int:
    if args.show:
        if args.show not in PRESETS:
            return _fail_config(f"unknown preset {args.show!r}")
        sys.stdout.write(PRESETS[args.show].strip() + "\n")
        return _EXIT_OK
    for name in PRESET_ORDER:
        print(name)
    return _EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return _EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="basiskey",
        description="Basis-keyed QKD protocol simulator and analysis toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_output_opts(p: argparse.ArgumentParser, formats=("json", "csv"), default="json"):
        p.add_argument("--format", choices=formats, default=default)
        p.add_argument(
            "--out",
            help=f"output file (relative paths resolve under ${OUTPUT_DIR_ENV})",
        )

    p_run = sub.add_parser("run", help="evaluate a scenario file in its own mode")
    p_run.add_argument("scenario")
    p_run.add_argument("--seed", type=int, help="master seed override")
    add_output_opts(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_enum = sub.add_parser("enumerate", help="evaluate a scenario file exactly")
    p_enum.add_argument("scenario")
    add_output_opts(p_enum)
    p_enum.set_defaults(fn=_cmd_enumerate)

    p_table = sub.add_parser("table1", help="intercept-resend branch table for |0>_z")
    add_output_opts(p_table, formats=("text", "json", "csv"), default="text")
    p_table.set_defaults(fn=_cmd_table1)

    p_suite = sub.add_parser("attack-suite", help="run the preset scenario battery")
    p_suite.add_argument("--seed", type=int, help="master seed override")
    p_suite.add_argument(
        "--mc-scale", type=float, default=1.0,
        help="Monte Carlo size multiplier (checks guaranteed only at 1.0)",
    )
    p_suite.add_argument(
        "--preset", action="append", metavar="NAME",
        help="run only this preset (repeatable)",
    )
    add_output_opts(p_suite, formats=("text", "json", "csv"), default="text")
    p_suite.set_defaults(fn=_cmd_attack_suite)

    p_report = sub.add_parser("report", help="re-render a saved JSON report")
    p_report.add_argument("report")
    add_output_opts(p_report)
    p_report.set_defaults(fn=_cmd_report)

    p_presets = sub.add_parser("presets", help="list preset scenarios")
    p_presets.add_argument("--show", metavar="NAME", help="print one preset's text")
    p_presets.set_defaults(fn=_cmd_presets)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(fn=_cmd_serve)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit as exc:  # raised by helpers carrying an exit code
        code = exc.code
        return code if isinstance(code, int) else _EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
