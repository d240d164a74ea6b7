"""Named metrics shared by the enumerator and the Monte Carlo runner.

Both back ends emit the same metric names so scenario expectations and the
oracle cross-check can compare them one-to-one.  Exact values carry the
underlying Fraction alongside the float; sampled values carry a standard
error and the repeat count instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, Optional

# Metric names.  Rates are per protocol round unless the name says otherwise.
SIFT_FRACTION = "sift_fraction"
QBER = "qber"
KEY_ONES_FRACTION = "key_ones_fraction"
NO_CLICK_RATE = "no_click_rate"
DOUBLE_CLICK_RATE = "double_click_rate"
SUPPRESSION_RATE = "suppression_rate"
LOSS_COVERED = "loss_covered"

# conclusive / kept-with-eve, and conclusive / total rounds respectively.
EVE_CONCLUSIVE_FRACTION = "eve_conclusive_fraction"
EVE_CONCLUSIVE_PER_ROUND = "eve_conclusive_per_round"
EVE_MUTUAL_INFORMATION = "eve_mutual_information"
EVE_GUESS_ACCURACY = "eve_guess_accuracy"
EVE_CONCLUSIVE_GIVEN_ALICE_BASIS = "eve_conclusive_given_alice_basis"
EVE_CONCLUSIVE_GIVEN_BOB_BASIS = "eve_conclusive_given_bob_basis"

FINAL_KEY_RATE = "final_key_rate_per_round"
EC_SUCCESS_RATE = "ec_success_rate"
MONOBIT_Z = "monobit_z"
RUNS_Z = "runs_z"
RANDOMNESS_PASS = "randomness_pass"

MODE_ENUMERATE = "enumerate"
MODE_MONTECARLO = "montecarlo"


@dataclass(frozen=True)
class MetricValue:
    """One measured or derived quantity.

    ``exact`` is set only by the enumerator (and only for rational
    quantities); ``stderr``/``n`` only by the Monte Carlo runner.
    """

    value: float
    exact: Optional[Fraction] = None
    stderr: Optional[float] = None
    n: Optional[int] = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError("metric values must be finite")
        if self.exact is not None and float(self.exact) != self.value:
            raise ValueError("exact fraction disagrees with float value")


@dataclass
class MetricSet:
    """All metrics produced by one scenario evaluation."""

    mode: str
    metrics: Dict[str, MetricValue] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.mode not in (MODE_ENUMERATE, MODE_MONTECARLO):
            raise ValueError(f"unknown metric mode {self.mode!r}")

    def __contains__(self, name: str) -> bool:
        return name in self.metrics

    def __getitem__(self, name: str) -> MetricValue:
        return self.metrics[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.metrics)

    def get(self, name: str) -> Optional[MetricValue]:
        return self.metrics.get(name)

    def value(self, name: str) -> float:
        return self.metrics[name].value

    def put_exact(self, name: str, frac: Fraction) -> None:
        self.metrics[name] = MetricValue(value=float(frac), exact=frac)

    def put_float(self, name: str, value: float, stderr: Optional[float] = None,
                  n: Optional[int] = None) -> None:
        # Non-finite values (runs z-score on a constant key) are unrepresentable
        # in the JSON report, so they are dropped rather than serialized.
        if math.isfinite(value):
            self.metrics[name] = MetricValue(value=value, stderr=stderr, n=n)
