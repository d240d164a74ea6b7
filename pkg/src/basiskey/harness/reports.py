"""Report assembly and serialization.

JSON reports follow REPORT_SCHEMA (draft-07); CSV uses the fixed column
order CSV_COLUMNS with one row per (scenario, metric).  Expectation checks
are exact-rational whenever the metric carries an exact value, so a
tolerance of 0 means equality of fractions, not of floats.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Dict, List, Optional, Tuple

from .metrics import MetricSet, MetricValue
from .scenario import Scenario

CSV_COLUMNS = (
    "scenario",
    "mode",
    "metric",
    "value",
    "exact",
    "stderr",
    "n",
    "expected",
    "tolerance",
    "pass",
)

REPORT_SCHEMA: Dict[str, object] = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "scenario report",
    "type": "object",
    "required": ["scenario", "mode", "metrics", "expectations"],
    "additionalProperties": False,
    "properties": {
        "scenario": {"type": "string"},
        "mode": {"enum": ["enumerate", "montecarlo"]},
        "seed": {"type": ["integer", "null"]},
        "elapsed_seconds": {"type": "number", "minimum": 0},
        "metrics": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["value"],
                "additionalProperties": False,
                "properties": {
                    "value": {"type": "number"},
                    "exact": {"type": ["string", "null"]},
                    "stderr": {"type": ["number", "null"]},
                    "n": {"type": ["integer", "null"]},
                },
            },
        },
        "expectations": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["metric", "expected", "tolerance", "pass"],
                "additionalProperties": False,
                "properties": {
                    "metric": {"type": "string"},
                    "expected": {"type": "number"},
                    "tolerance": {"type": "number", "minimum": 0},
                    "pass": {"type": "boolean"},
                },
            },
        },
    },
}


def check_expectations(
    scenario: Scenario, metrics: MetricSet
) -> Tuple[List[Dict[str, object]], bool]:
    """Evaluate the scenario's expectation lines against computed metrics.

    A missing metric fails its expectation.  Metrics carrying an exact
    fraction are compared in rational arithmetic; sampled metrics compare
    as floats.  Returns (rows, all_passed)."""
    rows: List[Dict[str, object]] = []
    all_ok = True
    for exp in scenario.expectations:
        mv = metrics.get(exp.metric)
        if mv is None:
            ok = False
        elif mv.exact is not None:
            ok = abs(mv.exact - exp.expected) <= exp.tolerance
        else:
            ok = abs(mv.value - float(exp.expected)) <= float(exp.tolerance)
        all_ok &= ok
        rows.append(
            {
                "metric": exp.metric,
                "expected": float(exp.expected),
                "tolerance": float(exp.tolerance),
                "pass": ok,
            }
        )
    return rows, all_ok


def oracle_rows(
    sampled: MetricSet, exact: MetricSet, floor: float = 1e-3
) -> Tuple[List[Dict[str, object]], bool]:
    """Cross-check rows comparing sampled metrics against exact ones.

    Tolerance is 4 standard errors, floored at `floor` to absorb the small
    estimator bias of information-type metrics.  Metrics present on only
    one side (randomness z-scores, the covertness verdict) are skipped."""
    rows: List[Dict[str, object]] = []
    all_ok = True
    for name, ev in exact.metrics.items():
        mv = sampled.get(name)
        if mv is None:
            continue
        tol = max(4.0 * (mv.stderr or 0.0), floor)
        ok = abs(mv.value - ev.value) <= tol
        all_ok &= ok
        rows.append(
            {
                "metric": f"oracle:{name}",
                "expected": ev.value,
                "tolerance": tol,
                "pass": ok,
            }
        )
    return rows, all_ok


def _metric_json(mv: MetricValue) -> Dict[str, object]:
    out: Dict[str, object] = {"value": mv.value}
    if mv.exact is not None:
        out["exact"] = str(mv.exact)
    if mv.stderr is not None:
        out["stderr"] = mv.stderr
    if mv.n is not None:
        out["n"] = mv.n
    return out


def build_report(
    scenario_name: str,
    metrics: MetricSet,
    expectation_rows: List[Dict[str, object]],
    seed: Optional[int] = None,
    elapsed_seconds: Optional[float] = None,
) -> Dict[str, object]:
    report: Dict[str, object] = {
        "scenario": scenario_name,
        "mode": metrics.mode,
        "metrics": {name: _metric_json(mv) for name, mv in metrics.metrics.items()},
        "expectations": expectation_rows,
    }
    if seed is not None:
        report["seed"] = seed
    if elapsed_seconds is not None:
        report["elapsed_seconds"] = elapsed_seconds
    return report


def report_passed(report: Dict[str, object]) -> bool:
    return all(row["pass"] for row in report["expectations"])  # type: ignore[index,union-attr]


def render_json(reports: List[Dict[str, object]]) -> str:
    """One report -> object; several -> array.  Stable key order."""
    payload: object = reports[0] if len(reports) == 1 else reports
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def render_csv(reports: List[Dict[str, object]]) -> str:
    """One row per (scenario, metric); expectation columns are filled on the
    matching metric row when there is one, else on a value-less extra row."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for report in reports:
        scenario = report["scenario"]
        mode = report["mode"]
        expectations: Dict[str, Dict[str, object]] = {}
        orphans: List[Dict[str, object]] = []
        for row in report["expectations"]:  # type: ignore[union-attr]
            name = str(row["metric"])
            target = name.split(":", 1)[1] if name.startswith("oracle:") else name
            # Oracle rows never displace a scenario expectation on the same
            # metric; they fall through to their own rows.
            if target in report["metrics"] and target not in expectations and not name.startswith("oracle:"):  # type: ignore[operator]
                expectations[target] = row
            else:
                orphans.append(row)
        for name, mv in report["metrics"].items():  # type: ignore[union-attr]
            exp = expectations.get(name)
            writer.writerow(
                {
                    "scenario": scenario,
                    "mode": mode,
                    "metric": name,
                    "value": mv["value"],
                    "exact": mv.get("exact", ""),
                    "stderr": mv.get("stderr", ""),
                    "n": mv.get("n", ""),
                    "expected": exp["expected"] if exp else "",
                    "tolerance": exp["tolerance"] if exp else "",
                    "pass": str(exp["pass"]).lower() if exp else "",
                }
            )
        for row in orphans:
            writer.writerow(
                {
                    "scenario": scenario,
                    "mode": mode,
                    "metric": row["metric"],
                    "value": "",
                    "exact": "",
                    "stderr": "",
                    "n": "",
                    "expected": row["expected"],
                    "tolerance": row["tolerance"],
                    "pass": str(row["pass"]).lower(),
                }
            )
    return buf.getvalue()
