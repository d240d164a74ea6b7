"""Scenario files: a small line-oriented config format for experiments.

One setting per line (``key = value``), ``#`` comments, plus expectation
lines of the form::

    expect <metric> = <value> tol <tolerance>

Numbers may be written as decimals ("0.25"), rationals ("1/3"), or with an
exponent ("1e-6").  Parse failures raise ScenarioError carrying the
1-based line number.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Dict, Optional, Tuple

from ..adversary import AttackStrategy, EfficiencyPolicy, EveMeasurement
from ..devices import DetectorPair, DoubleClickPolicy, SourceModel, as_probability
from ..protocol import ProtocolKind, SessionConfig
from .metrics import MODE_ENUMERATE, MODE_MONTECARLO


class ScenarioError(ValueError):
    """Parse or validation failure, anchored to a scenario line."""

    def __init__(self, line_no: Optional[int], message: str) -> None:
        self.line_no = line_no
        self.reason = message
        prefix = f"line {line_no}: " if line_no is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class Expectation:
    metric: str
    expected: Fraction
    tolerance: Fraction

    def __post_init__(self) -> None:
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")


@dataclass(frozen=True)
class Scenario:
    """A parsed scenario: the physics/attack configuration, how to evaluate
    it (enumerate or sample), and the expectations to check afterwards."""

    name: str
    protocol: ProtocolKind
    mode: str = MODE_MONTECARLO
    rounds: int = 100_000
    repeats: int = 10
    seed: int = 1
    source: SourceModel = field(default_factory=SourceModel.single_photon)
    detectors: DetectorPair = field(default_factory=DetectorPair.ideal)
    depolarize: Fraction = Fraction(0)
    loss: Fraction = Fraction(0)
    attack: AttackStrategy = field(default_factory=AttackStrategy.none)
    postprocess: bool = False
    sample_fraction: float = 0.1
    expectations: Tuple[Expectation, ...] = ()

    def session_config(self, n_rounds: Optional[int] = None, seed: Optional[int] = None) -> SessionConfig:
        return SessionConfig(
            protocol=self.protocol,
            n_rounds=self.rounds if n_rounds is None else n_rounds,
            source=self.source,
            detectors=self.detectors,
            channel_depolarize_p=self.depolarize,
            channel_loss_p=self.loss,
            attack=self.attack,
            rng_seed=self.seed if seed is None else seed,
        )

    def with_expectations(self, extra: Tuple[Expectation, ...]) -> "Scenario":
        return replace(self, expectations=self.expectations + extra)


_EXPECT_RE = re.compile(
    r"^expect\s+(?P<metric>[a-z0-9_]+)\s*=\s*(?P<value>\S+)\s+tol\s+(?P<tol>\S+)$"
)
_KV_RE = re.compile(r"^(?P<key>[a-z_]+)\s*=\s*(?P<value>.+)$")

_PROTOCOLS = {"basiskey": ProtocolKind.BASISKEY, "bb84": ProtocolKind.BB84}
_MODES = {MODE_ENUMERATE: MODE_ENUMERATE, MODE_MONTECARLO: MODE_MONTECARLO}
_BOOLS = {"on": True, "true": True, "off": False, "false": False}
_DOUBLE_CLICK = {
    "random": DoubleClickPolicy.RANDOM_ASSIGN,
    "discard": DoubleClickPolicy.DISCARD,
}


def _number(text: str, line_no: int, what: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ScenarioError(line_no, f"{what} is not a number: {text!r}") from None


def _probability(text: str, line_no: int, what: str) -> Fraction:
    try:
        return as_probability(text, what)
    except ValueError as exc:
        raise ScenarioError(line_no, str(exc)) from None


def _int(text: str, line_no: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ScenarioError(line_no, f"{what} is not an integer: {text!r}") from None


def _parse_source(text: str, line_no: int) -> SourceModel:
    head, _, arg = text.partition(":")
    try:
        if head == "single":
            if arg:
                raise ScenarioError(line_no, "source 'single' takes no argument")
            return SourceModel.single_photon()
        if head == "weak":
            return SourceModel.weak_coherent(float(_number(arg, line_no, "mu")))
        if head == "fixed":
            return SourceModel.fixed_number(_int(arg, line_no, "photon number"))
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(line_no, str(exc)) from None
    raise ScenarioError(line_no, f"unknown source {text!r} (expected single, weak:<mu>, fixed:<n>)")


def _parse_attack(text: str, line_no: int) -> AttackStrategy:
    parts = [p.strip() for p in text.split(":")]
    head, args = parts[0], parts[1:]
    try:
        if head == "none" and not args:
            return AttackStrategy.none()
        if head == "intercept_resend" and not args:
            return AttackStrategy.intercept_resend()
        if head == "efficiency":
            if len(args) != 1:
                raise ScenarioError(
                    line_no, "efficiency attack needs ':<eta0>,<eta1>' or ':alternating'"
                )
            if args[0] == "alternating":
                return AttackStrategy.efficiency_control(EfficiencyPolicy.alternating())
            etas = [e.strip() for e in args[0].split(",")]
            if len(etas) != 2:
                raise ScenarioError(line_no, "efficiency attack needs two efficiencies")
            return AttackStrategy.efficiency_control(EfficiencyPolicy.fixed(etas[0], etas[1]))
        if head == "pns":
            measurement = EveMeasurement.RANDOM_BASIS
            conditioned = False
            for token in args:
                if token == "random":
                    measurement = EveMeasurement.RANDOM_BASIS
                elif token == "optimal_usd":
                    measurement = EveMeasurement.OPTIMAL_USD
                elif token == "conditioned":
                    conditioned = True
                else:
                    raise ScenarioError(line_no, f"unknown pns option {token!r}")
            return AttackStrategy.pns(measurement, conditioned)
        if head == "usd_filter":
            block = True
            fallback = False
            for token in args:
                if token == "block":
                    block = True
                elif token == "forward":
                    block = False
                elif token == "pns2":
                    fallback = True
                else:
                    raise ScenarioError(line_no, f"unknown usd_filter option {token!r}")
            return AttackStrategy.usd_filter(block_inconclusive=block, pns_fallback=fallback)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(line_no, str(exc)) from None
    raise ScenarioError(line_no, f"unknown attack {text!r}")


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    """Parse scenario text into a Scenario.  `name` seeds the scenario name
    and is overridden by an explicit `name =` line."""
    settings: Dict[str, object] = {"name": name}
    detector_etas: Tuple[Fraction, Fraction] = (Fraction(1), Fraction(1))
    dark = Fraction(0)
    double_click = DoubleClickPolicy.RANDOM_ASSIGN
    expectations = []
    seen = set()

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        m = _EXPECT_RE.match(line)
        if m:
            expectations.append(
                Expectation(
                    metric=m.group("metric"),
                    expected=_number(m.group("value"), line_no, "expected value"),
                    tolerance=_number(m.group("tol"), line_no, "tolerance"),
                )
            )
            continue

        m = _KV_RE.match(line)
        if not m:
            raise ScenarioError(line_no, f"cannot parse line {raw.strip()!r}")
        key = m.group("key")
        value = m.group("value").strip()
        if key in seen:
            raise ScenarioError(line_no, f"duplicate key {key!r}")
        seen.add(key)

        if key == "name":
            settings["name"] = value
        elif key == "protocol":
            if value not in _PROTOCOLS:
                raise ScenarioError(line_no, f"unknown protocol {value!r}")
            settings["protocol"] = _PROTOCOLS[value]
        elif key == "mode":
            if value not in _MODES:
                raise ScenarioError(line_no, f"unknown mode {value!r}")
            settings["mode"] = value
        elif key == "rounds":
            n = _int(value, line_no, "rounds")
            if n < 1:
                raise ScenarioError(line_no, "rounds must be >= 1")
            settings["rounds"] = n
        elif key == "repeats":
            n = _int(value, line_no, "repeats")
            if n < 1:
                raise ScenarioError(line_no, "repeats must be >= 1")
            settings["repeats"] = n
        elif key == "seed":
            settings["seed"] = _int(value, line_no, "seed")
        elif key == "source":
            settings["source"] = _parse_source(value, line_no)
        elif key == "detectors":
            etas = [e.strip() for e in value.split(",")]
            if len(etas) != 2:
                raise ScenarioError(line_no, "detectors needs '<eta0>, <eta1>'")
            detector_etas = (
                _probability(etas[0], line_no, "eta0"),
                _probability(etas[1], line_no, "eta1"),
            )
        elif key == "dark":
            dark = _probability(value, line_no, "dark_prob")
        elif key == "double_click":
            if value not in _DOUBLE_CLICK:
                raise ScenarioError(line_no, f"unknown double_click policy {value!r}")
            double_click = _DOUBLE_CLICK[value]
        elif key == "depolarize":
            settings["depolarize"] = _probability(value, line_no, "depolarize")
        elif key == "loss":
            settings["loss"] = _probability(value, line_no, "loss")
        elif key == "attack":
            settings["attack"] = _parse_attack(value, line_no)
        elif key == "postprocess":
            if value not in _BOOLS:
                raise ScenarioError(line_no, f"postprocess must be on/off, got {value!r}")
            settings["postprocess"] = _BOOLS[value]
        elif key == "sample_fraction":
            frac = _number(value, line_no, "sample_fraction")
            if not 0 < frac <= 1:
                raise ScenarioError(line_no, "sample_fraction must be in (0, 1]")
            settings["sample_fraction"] = float(frac)
        else:
            raise ScenarioError(line_no, f"unknown key {key!r}")

    if "protocol" not in settings:
        raise ScenarioError(None, "scenario must set 'protocol' (basiskey or bb84)")

    settings["detectors"] = DetectorPair(
        detector_etas[0], detector_etas[1], dark, double_click
    )
    settings["expectations"] = tuple(expectations)
    try:
        return Scenario(**settings)  # type: ignore[arg-type]
    except ValueError as exc:
        raise ScenarioError(None, str(exc)) from None


def load_scenario(path: str) -> Scenario:
    """Parse a scenario file; the file stem is the default scenario name."""
    p = Path(path)
    return parse_scenario(p.read_text(encoding="utf-8"), name=p.stem)
