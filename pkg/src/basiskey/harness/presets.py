"""Preset scenario battery behind the `attack-suite` subcommand.

Presets are stored as scenario text so the suite exercises the parser on
every run.  Exact presets pin closed-form values with tolerance 0
(rational equality); Monte Carlo presets carry loose absolute expectations
and are additionally cross-checked against the enumerator (4 standard
errors) whenever they are enumerable.

Derived numbers used below (all checked against the enumerator or closed
forms in the tests):
- intercept-resend on the basis-keyed protocol: kept 3/8, QBER 1/3, Eve's
  basis guess right 1/3 of kept rounds; on BB84: kept 1/2, QBER 1/4,
  outcome guess right 3/4.
- 2-photon PNS: conclusive 1/4 of kept rounds (0 given Eve picked Alice's
  basis, 1/2 given Bob's), worth 1/4 bit/round; 3-photon: 3/8 and 3/4.
- Optimal USD on one stored copy succeeds with 1 - 1/sqrt(2) ~ 0.29289.
- 3-photon USD filter: conclusive 1/2 per pulse; blocking turns the other
  half into apparent loss (sift 1/8, Eve knows every kept bit).
- Efficiency control (1,0): sift 1/8 vs BB84's 1/4; the announced bit
  carries nothing (MI 0, accuracy 1/2) while the BB84 key is frozen to 0.
- Detector mismatch (1, 0.2): sift 3/20 with a uniform key vs BB84's 3/10
  with ones fraction 1/6 (bias 5/6 toward zero).
- Depolarization 1/49: QBER 1/50, sift (1+1/49)/4 = 25/98.
- Weak source mu=0.5: vacuum fraction e^-0.5 ~ 0.60653.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from .exact import enumerate_exact, is_enumerable
from .metrics import MODE_ENUMERATE
from .montecarlo import run_monte_carlo
from .reports import build_report, check_expectations, oracle_rows
from .scenario import Expectation, Scenario, parse_scenario

PRESETS: Dict[str, str] = {
    # ---- exact presets: rational equalities ------------------------------
    "ideal-basiskey-exact": """
        protocol = basiskey
        mode = enumerate
        expect sift_fraction = 1/4 tol 0
        expect qber = 0 tol 0
        expect key_ones_fraction = 1/2 tol 0
        expect no_click_rate = 0 tol 0
        expect double_click_rate = 0 tol 0
    """,
    "ideal-bb84-exact": """
        protocol = bb84
        mode = enumerate
        expect sift_fraction = 1/2 tol 0
        expect qber = 0 tol 0
        expect key_ones_fraction = 1/2 tol 0
    """,
    "intercept-resend-basiskey-exact": """
        protocol = basiskey
        mode = enumerate
        attack = intercept_resend
        expect sift_fraction = 3/8 tol 0
        expect qber = 1/3 tol 0
        expect eve_guess_accuracy = 1/3 tol 0
    """,
    "intercept-resend-bb84-exact": """
        protocol = bb84
        mode = enumerate
        attack = intercept_resend
        expect sift_fraction = 1/2 tol 0
        expect qber = 1/4 tol 0
        expect eve_guess_accuracy = 3/4 tol 0
    """,
    "pns2-basiskey-exact": """
        protocol = basiskey
        mode = enumerate
        source = fixed:2
        attack = pns
        expect sift_fraction = 1/4 tol 0
        expect qber = 0 tol 0
        expect eve_conclusive_fraction = 1/4 tol 0
        expect eve_conclusive_given_alice_basis = 0 tol 0
        expect eve_conclusive_given_bob_basis = 1/2 tol 0
        expect eve_guess_accuracy = 1 tol 0
        expect eve_mutual_information = 0.25 tol 1e-9
    """,
    "pns2-conditioned-basiskey-exact": """
        # Conditioning Eve's delayed basis on the public bit changes nothing.
        protocol = basiskey
        mode = enumerate
        source = fixed:2
        attack = pns:conditioned
        expect eve_conclusive_fraction = 1/4 tol 0
        expect eve_conclusive_given_alice_basis = 0 tol 0
        expect eve_conclusive_given_bob_basis = 1/2 tol 0
        expect eve_mutual_information = 0.25 tol 1e-9
    """,
    "pns3-basiskey-exact": """
        protocol = basiskey
        mode = enumerate
        source = fixed:3
        attack = pns
        expect eve_conclusive_fraction = 3/8 tol 0
        expect eve_conclusive_given_bob_basis = 3/4 tol 0
        expect eve_mutual_information = 0.375 tol 1e-9
    """,
    "pns2-bb84-exact": """
        # Public bases make every stored copy readable after the fact.
        protocol = bb84
        mode = enumerate
        source = fixed:2
        attack = pns
        expect sift_fraction = 1/2 tol 0
        expect qber = 0 tol 0
        expect eve_conclusive_fraction = 1 tol 0
        expect eve_guess_accuracy = 1 tol 0
        expect eve_mutual_information = 1.0 tol 1e-9
    """,
    "usd3-block-basiskey-exact": """
        protocol = basiskey
        mode = enumerate
        source = fixed:3
        attack = usd_filter:block
        expect eve_conclusive_per_round = 1/2 tol 0
        expect suppression_rate = 1/2 tol 0
        expect sift_fraction = 1/8 tol 0
        expect qber = 0 tol 0
        expect eve_conclusive_fraction = 1 tol 0
        expect eve_mutual_information = 1.0 tol 1e-9
        expect loss_covered = 0 tol 0
    """,
    "usd3-covert-basiskey-exact": """
        # With an honest loss budget of 1/2 the blocked half hides exactly:
        # same sift fraction and no-click rate an honest lossy line shows.
        protocol = basiskey
        mode = enumerate
        source = fixed:3
        loss = 1/2
        attack = usd_filter:block
        expect suppression_rate = 1/2 tol 0
        expect loss_covered = 1 tol 0
        expect sift_fraction = 1/8 tol 0
        expect no_click_rate = 1/2 tol 0
        expect eve_mutual_information = 1.0 tol 1e-9
    """,
    "usd3-forward-basiskey-exact": """
        protocol = basiskey
        mode = enumerate
        source = fixed:3
        attack = usd_filter:forward
        expect suppression_rate = 0 tol 0
        expect sift_fraction = 1/4 tol 0
        expect eve_conclusive_per_round = 1/2 tol 0
        expect eve_conclusive_fraction = 1/2 tol 0
        expect eve_mutual_information = 0.5 tol 1e-9
    """,
    "efficiency-basiskey-exact": """
        protocol = basiskey
        mode = enumerate
        attack = efficiency:1,0
        expect sift_fraction = 1/8 tol 0
        expect qber = 0 tol 0
        expect key_ones_fraction = 1/2 tol 0
        expect eve_mutual_information = 0 tol 0
        expect eve_guess_accuracy = 1/2 tol 0
    """,
    "efficiency-bb84-exact": """
        protocol = bb84
        mode = enumerate
        attack = efficiency:1,0
        expect sift_fraction = 1/4 tol 0
        expect qber = 0 tol 0
        expect key_ones_fraction = 0 tol 0
        expect eve_guess_accuracy = 1 tol 0
    """,
    "mismatch-basiskey-exact": """
        protocol = basiskey
        mode = enumerate
        detectors = 1, 0.2
        expect sift_fraction = 3/20 tol 0
        expect qber = 0 tol 0
        expect key_ones_fraction = 1/2 tol 0
    """,
    "mismatch-bb84-exact": """
        protocol = bb84
        mode = enumerate
        detectors = 1, 0.2
        expect sift_fraction = 3/10 tol 0
        expect key_ones_fraction = 1/6 tol 0
    """,
    "depolarize-basiskey-exact": """
        protocol = basiskey
        mode = enumerate
        depolarize = 1/49
        expect sift_fraction = 25/98 tol 0
        expect qber = 1/50 tol 0
    """,
    # ---- Monte Carlo presets: sampled, oracle-checked where enumerable ---
    "ideal-basiskey-mc": """
        protocol = basiskey
        seed = 101
        rounds = 50000
        repeats = 10
        expect sift_fraction = 0.25 tol 0.01
        expect qber = 0 tol 0.001
        expect monobit_z = 0 tol 3
        expect randomness_pass = 1 tol 0
    """,
    "ideal-bb84-mc": """
        protocol = bb84
        seed = 102
        rounds = 50000
        repeats = 10
        expect sift_fraction = 0.5 tol 0.01
        expect randomness_pass = 1 tol 0
    """,
    "intercept-resend-basiskey-mc": """
        protocol = basiskey
        seed = 103
        rounds = 50000
        repeats = 10
        attack = intercept_resend
        expect sift_fraction = 0.375 tol 0.01
        expect qber = 0.333333 tol 0.01
    """,
    "intercept-resend-bb84-mc": """
        protocol = bb84
        seed = 104
        rounds = 50000
        repeats = 10
        attack = intercept_resend
        expect qber = 0.25 tol 0.01
    """,
    "pns2-basiskey-mc": """
        protocol = basiskey
        seed = 105
        rounds = 50000
        repeats = 10
        source = fixed:2
        attack = pns
        expect eve_conclusive_fraction = 0.25 tol 0.01
        expect eve_conclusive_given_alice_basis = 0 tol 0
        expect eve_conclusive_given_bob_basis = 0.5 tol 0.015
        expect eve_mutual_information = 0.25 tol 0.015
    """,
    "pns2-optimal-usd-basiskey-mc": """
        # 1 - 1/sqrt(2): irrational, so only the sampler can check it.
        protocol = basiskey
        seed = 106
        rounds = 50000
        repeats = 10
        source = fixed:2
        attack = pns:optimal_usd
        expect eve_conclusive_fraction = 0.292893 tol 0.006
    """,
    "usd3-block-basiskey-mc": """
        protocol = basiskey
        seed = 107
        rounds = 50000
        repeats = 10
        source = fixed:3
        attack = usd_filter:block
        expect eve_conclusive_per_round = 0.5 tol 0.01
        expect suppression_rate = 0.5 tol 0.01
        expect eve_mutual_information = 1.0 tol 0.01
    """,
    "efficiency-basiskey-mc": """
        protocol = basiskey
        seed = 108
        rounds = 50000
        repeats = 10
        attack = efficiency:1,0
        expect sift_fraction = 0.125 tol 0.005
        expect key_ones_fraction = 0.5 tol 0.01
        expect eve_mutual_information = 0 tol 0.005
        expect randomness_pass = 1 tol 0
    """,
    "efficiency-bb84-mc": """
        protocol = bb84
        seed = 109
        rounds = 50000
        repeats = 10
        attack = efficiency:1,0
        expect key_ones_fraction = 0 tol 0
        expect eve_guess_accuracy = 1 tol 0
    """,
    "efficiency-alternating-basiskey-mc": """
        # Round-indexed policy: not enumerable, sampler-only coverage.
        protocol = basiskey
        seed = 110
        rounds = 50000
        repeats = 10
        attack = efficiency:alternating
        expect sift_fraction = 0.125 tol 0.005
        expect key_ones_fraction = 0.5 tol 0.01
        expect eve_mutual_information = 0 tol 0.005
        expect randomness_pass = 1 tol 0
    """,
    "mismatch-basiskey-mc": """
        protocol = basiskey
        seed = 111
        rounds = 100000
        repeats = 8
        detectors = 1, 0.2
        expect sift_fraction = 0.15 tol 0.005
        expect key_ones_fraction = 0.5 tol 0.01
        expect randomness_pass = 1 tol 0
    """,
    "mismatch-bb84-mc": """
        protocol = bb84
        seed = 112
        rounds = 100000
        repeats = 8
        detectors = 1, 0.2
        expect sift_fraction = 0.3 tol 0.005
        expect key_ones_fraction = 0.166667 tol 0.01
        expect randomness_pass = 0 tol 0
    """,
    "depolarize-postproc-basiskey-mc": """
        protocol = basiskey
        seed = 113
        rounds = 50000
        repeats = 6
        depolarize = 1/49
        postprocess = on
        expect qber = 0.02 tol 0.005
        expect ec_success_rate = 1 tol 0
    """,
    "weak05-basiskey-mc": """
        protocol = basiskey
        seed = 114
        rounds = 50000
        repeats = 10
        source = weak:0.5
        expect no_click_rate = 0.606531 tol 0.005
        expect qber = 0 tol 0.002
    """,
    "weak05-pns-basiskey-mc": """
        # Composite: Poisson source feeding the splitter.  Per round, Eve is
        # conclusive with sum_n P(n) * 1/4 * 1/2 * (1 - 2**(1-n)) ~ 0.00611.
        protocol = basiskey
        seed = 115
        rounds = 50000
        repeats = 10
        source = weak:0.5
        attack = pns
        expect no_click_rate = 0.606531 tol 0.005
        expect sift_fraction = 0.098367 tol 0.003
        expect qber = 0 tol 0.002
        expect eve_conclusive_per_round = 0.006115 tol 0.001
    """,
    "dark-loss-basiskey-mc": """
        protocol = basiskey
        seed = 116
        rounds = 60000
        repeats = 10
        dark = 0.001
        loss = 0.1
    """,
    "dark-loss-discard-bb84-mc": """
        protocol = bb84
        seed = 117
        rounds = 60000
        repeats = 10
        dark = 0.001
        loss = 0.1
        double_click = discard
    """,
}

# Evaluation order: exact first, then sampled.
PRESET_ORDER = tuple(PRESETS)


def get_preset(name: str) -> Scenario:
    try:
        text = PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(PRESET_ORDER)}"
        ) from None
    return parse_scenario(text, name=name)


@dataclass
class SuiteResult:
    ok: bool
    reports: List[Dict[str, object]] = field(default_factory=list)
    elapsed_seconds: float = 0.0


def run_attack_suite(
    master_seed: Optional[int] = None,
    mc_scale: float = 1.0,
    names: Optional[Sequence[str]] = None,
) -> SuiteResult:
    """Run the preset battery and check every expectation.

    `mc_scale` shrinks/grows Monte Carlo round counts for quick smoke runs;
    absolute tolerances are widened by 1/sqrt(scale) so statistically sized
    expectations stay meaningful (exact presets are unaffected).  The suite
    is guaranteed green only at the committed scale of 1.0.
    """
    if mc_scale <= 0:
        raise ValueError("mc_scale must be positive")
    tol_scale = max(1.0, 1.0 / math.sqrt(mc_scale))
    t0 = time.perf_counter()
    result = SuiteResult(ok=True)
    for name in names if names is not None else PRESET_ORDER:
        scenario = get_preset(name) if isinstance(name, str) else name
        t1 = time.perf_counter()
        if scenario.mode == MODE_ENUMERATE:
            metrics = enumerate_exact(scenario)
            rows, good = check_expectations(scenario, metrics)
        else:
            rounds = scenario.rounds
            if mc_scale != 1.0:
                rounds = max(1000, round(rounds * mc_scale))
            metrics = run_monte_carlo(scenario, master_seed=master_seed, rounds=rounds)
            rows, good = check_expectations(
                _widen(scenario, tol_scale), metrics
            )
            if is_enumerable(scenario):
                orows, ogood = oracle_rows(metrics, enumerate_exact(scenario))
                rows += orows
                good &= ogood
        result.reports.append(
            build_report(
                scenario.name,
                metrics,
                rows,
                seed=None if scenario.mode == MODE_ENUMERATE else (
                    scenario.seed if master_seed is None else master_seed
                ),
                elapsed_seconds=time.perf_counter() - t1,
            )
        )
        result.ok &= good
    result.elapsed_seconds = time.perf_counter() - t0
    return result


def _widen(scenario: Scenario, tol_scale: float) -> Scenario:
    if tol_scale == 1.0:
        return scenario
    widened = tuple(
        Expectation(e.metric, e.expected, e.tolerance * Fraction(tol_scale))
        for e in scenario.expectations
    )
    return replace(scenario, expectations=widened)
