"""Monte Carlo scenario evaluation: repeated sessions, aggregated metrics.

Each repeat runs a full session on its own derived seed, producing one
sample per metric; aggregation reports the sample mean with the standard
error of the mean.  Randomness-test metrics are computed once on the
pooled sifted key instead (z-scores don't average), and postprocessing
metrics come from running the full classical pipeline per repeat.
"""

from __future__ import annotations

import hashlib
import math
import random
from typing import Dict, List, Optional

from ..adversary import AttackKind, mutual_information_bits
from ..postproc import postprocess, randomness_tests
from ..protocol import SessionStats, run_session
from .metrics import (
    DOUBLE_CLICK_RATE,
    EC_SUCCESS_RATE,
    EVE_CONCLUSIVE_FRACTION,
    EVE_CONCLUSIVE_GIVEN_ALICE_BASIS,
    EVE_CONCLUSIVE_GIVEN_BOB_BASIS,
    EVE_CONCLUSIVE_PER_ROUND,
    EVE_GUESS_ACCURACY,
    EVE_MUTUAL_INFORMATION,
    FINAL_KEY_RATE,
    KEY_ONES_FRACTION,
    MODE_MONTECARLO,
    MONOBIT_Z,
    NO_CLICK_RATE,
    QBER,
    RANDOMNESS_PASS,
    RUNS_Z,
    SIFT_FRACTION,
    SUPPRESSION_RATE,
    MetricSet,
)
from .scenario import Scenario

# Offset separating session seeds from postprocessing seeds in the derived
# stream; repeats must stay far below it.
_POSTPROC_SEED_OFFSET = 1_000_000

# randomness_tests needs at least 100 bits to say anything.
_MIN_RANDOMNESS_BITS = 100


def derive_seed(master: int, index: int) -> int:
    """Independent per-repeat seed: first 8 bytes of sha256("master:index")."""
    digest = hashlib.sha256(f"{master}:{index}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def _metrics_from_stats(stats: SessionStats, scenario: Scenario) -> Dict[str, float]:
    """Per-repeat metric samples.  Names and emission conditions mirror
    enumerate_exact (minus the exact-only covertness verdict)."""
    n = stats.n_rounds
    akind = scenario.attack.kind
    out: Dict[str, float] = {
        SIFT_FRACTION: stats.n_kept / n,
        NO_CLICK_RATE: stats.n_no_click / n,
        DOUBLE_CLICK_RATE: stats.n_double_click / n,
    }
    if stats.n_kept:
        out[QBER] = stats.n_key_errors / stats.n_kept

    if akind is AttackKind.USD_FILTER:
        out[SUPPRESSION_RATE] = stats.n_suppressed / n
    if akind in (AttackKind.PNS, AttackKind.USD_FILTER):
        out[EVE_CONCLUSIVE_PER_ROUND] = stats.n_eve_conclusive / n
    if akind is not AttackKind.NONE:
        if stats.n_eve_kept:
            out[EVE_CONCLUSIVE_FRACTION] = stats.n_eve_conclusive_kept / stats.n_eve_kept
        if stats.eve_joint:
            out[EVE_MUTUAL_INFORMATION] = mutual_information_bits(stats.eve_joint)
            guessed = sum(c for (_k, g), c in stats.eve_joint.items() if g is not None)
            if guessed:
                right = sum(c for (k, g), c in stats.eve_joint.items() if g == k)
                out[EVE_GUESS_ACCURACY] = right / guessed
        if stats.n_kept_eve_alice_basis:
            out[EVE_CONCLUSIVE_GIVEN_ALICE_BASIS] = (
                stats.n_concl_eve_alice_basis / stats.n_kept_eve_alice_basis
            )
        if stats.n_kept_eve_bob_basis:
            out[EVE_CONCLUSIVE_GIVEN_BOB_BASIS] = (
                stats.n_concl_eve_bob_basis / stats.n_kept_eve_bob_basis
            )
    return out


def run_monte_carlo(
    scenario: Scenario,
    master_seed: Optional[int] = None,
    rounds: Optional[int] = None,
    repeats: Optional[int] = None,
) -> MetricSet:
    """Run `repeats` independent sessions and aggregate.

    `master_seed`/`rounds`/`repeats` override the scenario's own settings
    (CLI --seed and suite scaling use this).  Results are deterministic in
    (scenario, master_seed, rounds, repeats).
    """
    seed = scenario.seed if master_seed is None else master_seed
    n_rounds = scenario.rounds if rounds is None else rounds
    n_repeats = scenario.repeats if repeats is None else repeats
    if n_repeats >= _POSTPROC_SEED_OFFSET:
        raise ValueError("too many repeats")

    samples: Dict[str, List[float]] = {}
    pooled_key = bytearray()
    for r in range(n_repeats):
        cfg = scenario.session_config(n_rounds=n_rounds, seed=derive_seed(seed, r))
        result = run_session(cfg, keep_records=False)
        for name, value in _metrics_from_stats(result.stats, scenario).items():
            samples.setdefault(name, []).append(value)
        if len(result.keys):
            samples.setdefault(KEY_ONES_FRACTION, []).append(
                sum(result.keys.alice_bits) / len(result.keys)
            )
        pooled_key.extend(result.keys.alice_bits)

        if scenario.postprocess and len(result.keys) >= 10:
            pp_rng = random.Random(derive_seed(seed, _POSTPROC_SEED_OFFSET + r))
            pp = postprocess(
                result.keys,
                pp_rng,
                sample_fraction=scenario.sample_fraction,
                run_randomness=False,
            )
            samples.setdefault(FINAL_KEY_RATE, []).append(
                pp.report.final_key_length / n_rounds
            )
            samples.setdefault(EC_SUCCESS_RATE, []).append(
                1.0 if pp.report.ec_success else 0.0
            )

    ms = MetricSet(mode=MODE_MONTECARLO)
    for name, values in samples.items():
        k = len(values)
        mean = math.fsum(values) / k
        stderr = None
        if k > 1:
            var = math.fsum((v - mean) ** 2 for v in values) / (k - 1)
            stderr = math.sqrt(var / k)
        ms.put_float(name, mean, stderr=stderr, n=k)

    if len(pooled_key) >= _MIN_RANDOMNESS_BITS:
        report = randomness_tests(bytes(pooled_key))
        ms.put_float(MONOBIT_Z, report.monobit_z, n=len(pooled_key))
        ms.put_float(RUNS_Z, report.runs_z, n=len(pooled_key))
        ms.put_float(RANDOMNESS_PASS, 1.0 if report.passed else 0.0, n=len(pooled_key))
    return ms
