"""Eavesdropper strategies and information accounting.

Four attack families are modeled: intercept-and-resend, basis-independent
detector-efficiency control, photon-number splitting (PNS) with delayed
measurement, and USD-based filtering of multi-photon pulses.  Efficiency
policies see only public data: they receive a view that structurally lacks
Bob's basis, which is the information boundary the whole protocol rests on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence, Tuple

from .devices import PhotonPulse, as_probability
from .qcore import Basis, QubitSymbol, RandomStream, StateKind, measure, pure_state, usd_success_prob

_BASES = (Basis.Z, Basis.X)


def _basis_bit(basis: Basis) -> int:
    # Same convention as Alice's key map in `protocol`: Z -> 0, X -> 1.
    return 0 if basis is Basis.Z else 1


class AttackKind(Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept_resend"
    EFFICIENCY_CONTROL = "efficiency_control"
    PNS = "pns"
    USD_FILTER = "usd_filter"


class EveMeasurement(Enum):
    RANDOM_BASIS = "random_basis"
    OPTIMAL_USD = "optimal_usd"


@dataclass(frozen=True)
class PublicView:
    """What an efficiency policy is allowed to see: the round index and the
    public announcements of *prior* rounds.  Deliberately has no field for
    Bob's basis — policies cannot depend on it even by accident."""

    round_index: int
    announcements: Tuple[object, ...] = ()


class PolicyKind(Enum):
    FIXED = "fixed"
    ALTERNATING = "alternating"
    CUSTOM = "custom"


@dataclass(frozen=True)
class EfficiencyPolicy:
    """Per-round (eta0, eta1) chooser for the efficiency-control attack."""

    kind: PolicyKind
    pairs: Tuple[Tuple[Fraction, Fraction], ...] = ()
    fn: Optional[Callable[[PublicView], Tuple[float, float]]] = None

    def __post_init__(self) -> None:
        if self.kind is PolicyKind.CUSTOM:
            if self.fn is None:
                raise ValueError("custom efficiency policy requires a callable")
        elif not self.pairs:
            raise ValueError("efficiency policy requires at least one (eta0, eta1) pair")

    @classmethod
    def fixed(cls, eta0, eta1) -> "EfficiencyPolicy":
        pair = (as_probability(eta0, "eta0"), as_probability(eta1, "eta1"))
        return cls(PolicyKind.FIXED, (pair,))

    @classmethod
    def alternating(cls, first=(1, 0), second=(0, 1)) -> "EfficiencyPolicy":
        pairs = tuple(
            (as_probability(e0, "eta0"), as_probability(e1, "eta1")) for e0, e1 in (first, second)
        )
        return cls(PolicyKind.ALTERNATING, pairs)

    @classmethod
    def custom(cls, fn: Callable[[PublicView], Tuple[float, float]]) -> "EfficiencyPolicy":
        return cls(PolicyKind.CUSTOM, (), fn)


@dataclass(frozen=True)
class AttackStrategy:
    """Configured attack.  Only the fields relevant to `kind` are meaningful:
    `policy` for EFFICIENCY_CONTROL, `eve_measurement`/`condition_on_announced`
    for PNS, `block_inconclusive`/`pns_fallback` for USD_FILTER."""

    kind: AttackKind = AttackKind.NONE
    policy: Optional[EfficiencyPolicy] = None
    eve_measurement: EveMeasurement = EveMeasurement.RANDOM_BASIS
    condition_on_announced: bool = False
    block_inconclusive: bool = True
    pns_fallback: bool = False

    def __post_init__(self) -> None:
        if self.kind is AttackKind.EFFICIENCY_CONTROL and self.policy is None:
            raise ValueError("efficiency-control attack requires a policy")
        if self.kind is not AttackKind.EFFICIENCY_CONTROL and self.policy is not None:
            raise ValueError("policy is only meaningful for the efficiency-control attack")

    @classmethod
    def none(cls) -> "AttackStrategy":
        return cls(AttackKind.NONE)

    @classmethod
    def intercept_resend(cls) -> "AttackStrategy":
        return cls(AttackKind.INTERCEPT_RESEND)

    @classmethod
    def efficiency_control(cls, policy: EfficiencyPolicy) -> "AttackStrategy":
        return cls(AttackKind.EFFICIENCY_CONTROL, policy=policy)

    @classmethod
    def pns(
        cls,
        eve_measurement: EveMeasurement = EveMeasurement.RANDOM_BASIS,
        condition_on_announced: bool = False,
    ) -> "AttackStrategy":
        return cls(
            AttackKind.PNS,
            eve_measurement=eve_measurement,
            condition_on_announced=condition_on_announced,
        )

    @classmethod
    def usd_filter(cls, block_inconclusive: bool = True, pns_fallback: bool = False) -> "AttackStrategy":
        return cls(
            AttackKind.USD_FILTER,
            block_inconclusive=block_inconclusive,
            pns_fallback=pns_fallback,
        )


@dataclass(frozen=True)
class EveRecord:
    """Eve's knowledge about one round.

    `key_guess` follows the protocol's key definition: for the basis-keyed
    protocol it is her guess of Alice's basis as a bit (Z=0, X=1), for BB84
    her guess of Alice's outcome bit.  `conclusive` means the guess is
    certain, so conclusive=True implies key_guess is present; a guess may
    also be present on inconclusive rounds (then it is merely her best bet).
    """

    round_id: int
    stored_copies: int = 0
    conclusive: bool = False
    key_guess: Optional[int] = None
    suppressed: bool = False
    eve_basis: Optional[Basis] = None
    eve_outcome: Optional[int] = None

    def __post_init__(self) -> None:
        if self.conclusive and self.key_guess is None:
            raise ValueError("a conclusive record must carry a key guess")


def intercept_resend(
    state: QubitSymbol, rng: RandomStream, round_id: int = 0
) -> Tuple[QubitSymbol, EveRecord]:
    """Measure in a uniformly random basis and resend the collapsed state.

    Eve's key guess (basis-keyed convention) is her measurement basis as a
    bit: it is her maximum-likelihood guess whenever she happened to match
    Alice's basis, and carries no information otherwise.
    """
    resent, m, outcome = _intercept_raw(state, rng)
    record = EveRecord(
        round_id=round_id,
        key_guess=_basis_bit(m),
        eve_basis=m,
        eve_outcome=outcome,
    )
    return resent, record


def _intercept_raw(state: QubitSymbol, rng: RandomStream) -> Tuple[QubitSymbol, Basis, int]:
    m = _BASES[rng.getrandbits(1)]
    outcome = measure(state, m, rng)
    return pure_state(m, outcome), m, outcome


def pns_split(pulse: PhotonPulse) -> Tuple[PhotonPulse, int]:
    """Keep n-1 photons, forward a single one; pass-through below 2 photons."""
    if pulse.n < 2:
        return pulse, 0
    return PhotonPulse(1, pulse.state), pulse.n - 1


def eve_delayed_measure(
    stored_copies: int,
    alice_state: QubitSymbol,
    announced: int,
    kept: bool,
    strategy: EveMeasurement,
    rng: RandomStream,
    round_id: int = 0,
    condition_on_announced: bool = False,
) -> EveRecord:
    """Measure stored PNS copies after the announcement, on kept rounds only.

    RANDOM_BASIS: Eve measures every copy in one basis m.  A kept round
    pins Alice's bit to the flip of the announced bit, so any copy outcome
    that disagrees with it rules out "Alice prepared in m" and she learns
    the basis with certainty.  OPTIMAL_USD: conclusive with the closed-form
    optimal probability for the number of copies, and then exact.
    """
    if not kept:
        raise ValueError("delayed measurement applies to kept rounds only")
    if stored_copies < 1:
        raise ValueError("delayed measurement requires at least one stored copy")
    if alice_state.kind is not StateKind.PURE:
        raise ValueError("stored copies must be one of the four signal states")
    conclusive, guess, m = _delayed_raw(
        stored_copies, alice_state, announced, strategy, condition_on_announced, rng
    )
    return EveRecord(
        round_id=round_id,
        stored_copies=stored_copies,
        conclusive=conclusive,
        key_guess=guess,
        eve_basis=m,
    )


def _delayed_raw(
    stored_copies: int,
    alice_state: QubitSymbol,
    announced: int,
    strategy: EveMeasurement,
    condition_on_announced: bool,
    rng: RandomStream,
) -> Tuple[bool, Optional[int], Optional[Basis]]:
    if strategy is EveMeasurement.OPTIMAL_USD:
        if rng.random() < usd_success_prob(stored_copies):
            return True, _basis_bit(alice_state.basis), None
        return False, None, None
    if condition_on_announced:
        # Any deterministic map from the public bit works; basis choice and
        # announcement are independent, so the statistics match the uniform
        # variant.  This keeps the conditioned mode reproducible.
        m = Basis.X if announced == 0 else Basis.Z
    else:
        m = _BASES[rng.getrandbits(1)]
    if m is alice_state.basis:
        # Every copy collapses to Alice's bit, which a kept round forces to
        # flip(announced): always consistent, never conclusive.
        return False, None, m
    target = announced ^ 1
    outcomes = rng.getrandbits(stored_copies)
    if outcomes == (((1 << stored_copies) - 1) if target else 0):
        return False, None, m
    return True, _basis_bit(m) ^ 1, m


def eve_delayed_measure_bb84(
    stored_copies: int,
    alice_state: QubitSymbol,
    rng: RandomStream,
    round_id: int = 0,
) -> EveRecord:
    """Delayed PNS measurement against the BB84 baseline: once the bases are
    public, Eve measures a stored copy in Alice's basis and reads the key bit
    exactly.  Included for contrast with the basis-keyed protocol."""
    if stored_copies < 1:
        raise ValueError("delayed measurement requires at least one stored copy")
    if alice_state.kind is not StateKind.PURE:
        raise ValueError("stored copies must be one of the four signal states")
    bit = measure(alice_state, alice_state.basis, rng)
    return EveRecord(
        round_id=round_id,
        stored_copies=stored_copies,
        conclusive=True,
        key_guess=bit,
        eve_basis=alice_state.basis,
        eve_outcome=bit,
    )


def efficiency_control_round(
    policy: EfficiencyPolicy,
    round_index: int,
    public_history: Sequence[object] = (),
) -> Tuple[Fraction, Fraction]:
    """The (eta0, eta1) pair Eve imposes this round.  Custom policies get a
    PublicView; the built-in kinds never look at the history at all."""
    if policy.kind is PolicyKind.FIXED:
        return policy.pairs[0]
    if policy.kind is PolicyKind.ALTERNATING:
        return policy.pairs[round_index % len(policy.pairs)]
    assert policy.fn is not None
    eta0, eta1 = policy.fn(PublicView(round_index, tuple(public_history)))
    return as_probability(eta0, "eta0"), as_probability(eta1, "eta1")


def usd_filter(
    pulse: PhotonPulse,
    channel_loss_p: float,
    rng: RandomStream,
    block_inconclusive: bool = True,
    round_id: int = 0,
) -> Tuple[Optional[PhotonPulse], EveRecord]:
    """Unambiguous-discrimination filtering of 3-photon-and-up pulses.

    Eve keeps n-1 photons and runs USD on them; a conclusive result hands
    her the basis outright.  Forwarded pulses travel on her lossless line,
    so with block_inconclusive=True she converts inconclusive rounds into
    apparent channel loss.  `channel_loss_p` is the honest loss budget her
    suppression must hide inside; the filter itself never consumes it, and
    callers compare suppression rate against it for the covertness verdict.
    Pulses below 3 photons pass through untouched.
    """
    if pulse.n < 3:
        return pulse, EveRecord(round_id=round_id)
    stored = pulse.n - 1
    if rng.random() < usd_success_prob(stored):
        record = EveRecord(
            round_id=round_id,
            stored_copies=stored,
            conclusive=True,
            key_guess=_basis_bit(pulse.state.basis),
        )
        return PhotonPulse(1, pulse.state), record
    if block_inconclusive:
        record = EveRecord(round_id=round_id, stored_copies=stored, suppressed=True)
        return None, record
    return PhotonPulse(1, pulse.state), EveRecord(round_id=round_id, stored_copies=stored)


def mutual_information_bits(joint_counts: Mapping[Tuple[int, object], float]) -> float:
    """Mutual information (bits) of an empirical joint distribution over
    (key bit, Eve's guess-or-none).  Accepts integer, float, or exact
    rational weights; zero-weight cells are ignored."""
    total = sum(joint_counts.values())
    if total <= 0:
        raise ValueError("empty joint distribution")
    key_marginal: dict = {}
    guess_marginal: dict = {}
    for (key_bit, guess), weight in joint_counts.items():
        if weight < 0:
            raise ValueError("negative weight in joint distribution")
        key_marginal[key_bit] = key_marginal.get(key_bit, 0) + weight
        guess_marginal[guess] = guess_marginal.get(guess, 0) + weight
    info = 0.0
    for (key_bit, guess), weight in joint_counts.items():
        if weight == 0:
            continue
        p = weight / total
        ratio = (weight * total) / (key_marginal[key_bit] * guess_marginal[guess])
        info += float(p) * math.log2(float(ratio))
    # Clamp tiny negative rounding residue from the float log.
    return max(info, 0.0)


def eve_information(
    eve_records: Sequence[EveRecord],
    true_keys: Sequence[int],
) -> Tuple[float, float, float]:
    """Summarize Eve's knowledge over aligned kept rounds.

    Returns (conclusive_fraction, guess_accuracy, mutual_information_bits).
    Accuracy is taken over rounds where Eve committed to a guess; it is NaN
    when she never guessed.  Mutual information uses the (key, guess-or-none)
    joint, so refusing to guess is informative only through its frequency.
    """
    if len(eve_records) != len(true_keys):
        raise ValueError("records and keys must be aligned")
    if not eve_records:
        raise ValueError("no records to analyze")
    joint: dict = {}
    conclusive = 0
    guessed = 0
    correct = 0
    for record, key_bit in zip(eve_records, true_keys):
        guess = record.key_guess
        joint[(key_bit, guess)] = joint.get((key_bit, guess), 0) + 1
        if record.conclusive:
            conclusive += 1
        if guess is not None:
            guessed += 1
            if guess == key_bit:
                correct += 1
    accuracy = correct / guessed if guessed else math.nan
    return (
        conclusive / len(eve_records),
        accuracy,
        mutual_information_bits(joint),
    )
