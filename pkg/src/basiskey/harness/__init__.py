"""Experiment harness: scenario files, the exact rational enumerator, the
Monte Carlo runner, the intercept-resend branch table, machine-readable
reports, and the preset battery behind `attack-suite`."""

from .exact import NotEnumerableError, enumerate_exact, is_enumerable
from .metrics import MODE_ENUMERATE, MODE_MONTECARLO, MetricSet, MetricValue
from .montecarlo import derive_seed, run_monte_carlo
from .presets import PRESETS, get_preset, run_attack_suite
from .reports import build_report, check_expectations, render_csv, render_json
from .scenario import Expectation, Scenario, ScenarioError, load_scenario, parse_scenario
from .table import table1_report

__all__ = [
    "Expectation",
    "MODE_ENUMERATE",
    "MODE_MONTECARLO",
    "MetricSet",
    "MetricValue",
    "NotEnumerableError",
    "PRESETS",
    "Scenario",
    "ScenarioError",
    "build_report",
    "check_expectations",
    "derive_seed",
    "enumerate_exact",
    "get_preset",
    "is_enumerable",
    "load_scenario",
    "parse_scenario",
    "render_csv",
    "render_json",
    "run_attack_suite",
    "run_monte_carlo",
    "table1_report",
]
