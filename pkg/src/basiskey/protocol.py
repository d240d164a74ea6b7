"""Alice/Bob state machines for the basis-keyed protocol and the BB84
baseline.

Basis-keyed rounds: Alice sends one of the four signal states; Bob measures
in a random basis and publicly announces the OUTCOME bit while keeping his
basis secret; the round is kept iff the announced bit differs from Alice's
prepared bit; the key bits are then derived from the basis choices alone
(Alice: Z->0, X->1; Bob: X->0, Z->1).  On a clean kept round the bases are
necessarily conjugate, so those two maps agree.

BB84 rounds: bases are announced, outcomes stay secret, the round is kept
iff the bases match, and the key bits are the prepared/measured outcome
bits.

The session runner executes rounds sequentially from a single seeded
stream; identical configs replay bit-identically.  Monte Carlo repeats get
independent derived seeds in `harness` and merge by repeat index.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .adversary import (
    AttackKind,
    AttackStrategy,
    EveRecord,
    PolicyKind,
    _basis_bit,
    _delayed_raw,
    _intercept_raw,
    efficiency_control_round,
    pns_split,
    usd_filter,
)
from .devices import (
    DetectionEvent,
    DetectionOutcome,
    DetectorPair,
    PhotonPulse,
    SourceKind,
    SourceModel,
    _detect_core,
    as_probability,
    emit,
)
from .postproc import SiftedKeyPair
from .qcore import MIXED, Basis, QubitSymbol, RandomStream, pure_state

_BASES = (Basis.Z, Basis.X)


class ProtocolKind(Enum):
    BASISKEY = "basiskey"
    BB84 = "bb84"


@dataclass(slots=True)
class RoundRecord:
    """Complete transcript of one round."""

    round_id: int
    alice_basis: Basis
    alice_bit: int
    bob_basis: Basis
    detection: DetectionEvent
    announced: Optional[int]
    kept: bool
    alice_key_bit: Optional[int]
    bob_key_bit: Optional[int]
    double_click_flag: bool


@dataclass(frozen=True)
class SessionConfig:
    protocol: ProtocolKind
    n_rounds: int
    source: SourceModel = field(default_factory=SourceModel.single_photon)
    detectors: DetectorPair = field(default_factory=DetectorPair.ideal)
    channel_depolarize_p: Fraction = Fraction(0)
    channel_loss_p: Fraction = Fraction(0)
    attack: AttackStrategy = field(default_factory=AttackStrategy.none)
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_rounds < 1:
            raise ValueError("a session needs at least one round")
        object.__setattr__(
            self, "channel_depolarize_p", as_probability(self.channel_depolarize_p, "channel_depolarize_p")
        )
        object.__setattr__(
            self, "channel_loss_p", as_probability(self.channel_loss_p, "channel_loss_p")
        )
        if not isinstance(self.rng_seed, int):
            raise ValueError("rng_seed must be an integer")


def alice_prepare(protocol: ProtocolKind, rng: RandomStream) -> Tuple[Basis, int]:
    """Uniform basis and bit, independent of each other (and, for our two
    protocols, of the protocol kind)."""
    return _BASES[rng.getrandbits(1)], rng.getrandbits(1)


def alice_key_bit_basiskey(alice_basis: Basis) -> int:
    """Alice's key bit is her preparation basis: Z -> 0, X -> 1."""
    return 0 if alice_basis is Basis.Z else 1


def bob_key_bit_basiskey(bob_basis: Basis) -> int:
    """Bob's key bit is his measurement basis: X -> 0, Z -> 1."""
    return 0 if bob_basis is Basis.X else 1


def sift_basiskey(alice_bit: int, announced: int) -> bool:
    """Keep iff the announced outcome differs from Alice's prepared bit."""
    return announced != alice_bit


def sift_bb84(alice_basis: Basis, bob_basis: Basis) -> bool:
    """Keep iff the bases match."""
    return alice_basis is bob_basis


@dataclass
class SessionStats:
    """Streaming counters for one session (all rounds, then kept subset)."""

    n_rounds: int = 0
    n_click: int = 0
    n_no_click: int = 0
    n_double_click: int = 0
    n_kept: int = 0
    n_key_errors: int = 0
    n_suppressed: int = 0
    n_eve_conclusive: int = 0
    n_eve_conclusive_kept: int = 0
    n_eve_kept: int = 0
    n_kept_eve_alice_basis: int = 0
    n_concl_eve_alice_basis: int = 0
    n_kept_eve_bob_basis: int = 0
    n_concl_eve_bob_basis: int = 0
    eve_joint: Dict[Tuple[int, Optional[int]], int] = field(default_factory=dict)


@dataclass
class SessionResult:
    """run_session output: transcript (optional), sifted keys, counters."""

    config: SessionConfig
    stats: SessionStats
    keys: SiftedKeyPair
    records: Optional[List[RoundRecord]] = None
    eve_records: Optional[List[EveRecord]] = None


def run_session(config: SessionConfig, keep_records: bool = True) -> SessionResult:
    """Execute a full session.

    Per round: prepare -> emit -> attack transform -> channel noise/loss ->
    Bob's uniform basis choice -> detection -> announcement -> sift -> key
    bits -> (PNS only) Eve's delayed measurement.  No-click rounds are
    recorded with kept=False.  With keep_records=False only counters and the
    sifted keys are built, which is what the Monte Carlo runner uses.

    Under the USD filter the whole channel belongs to Eve: every forwarded
    pulse rides her lossless, noiseless line, and the configured loss budget
    is only the covertness yardstick her suppression rate is compared to.
    """
    rng = random.Random(config.rng_seed)
    getrandbits = rng.getrandbits
    uniform = rng.random

    protocol = config.protocol
    is_bk = protocol is ProtocolKind.BASISKEY
    attack = config.attack
    akind = attack.kind
    conditioned = attack.condition_on_announced
    eve_measurement = attack.eve_measurement

    source = config.source
    weak = source.kind is SourceKind.WEAK_COHERENT
    n_fixed = 1 if source.kind is SourceKind.SINGLE_PHOTON else source.n
    pulse_cache: Dict[Tuple[Basis, int], PhotonPulse] = {}
    if not weak and akind in (AttackKind.PNS, AttackKind.USD_FILTER):
        for basis in _BASES:
            for bit in (0, 1):
                pulse_cache[(basis, bit)] = PhotonPulse(n_fixed, pure_state(basis, bit))

    dep_p = float(config.channel_depolarize_p)
    loss_p = float(config.channel_loss_p)
    base_detectors = config.detectors
    usd_bypass = akind is AttackKind.USD_FILTER

    # Efficiency-control setup: detector pairs are cached per imposed pair so
    # the loop never rebuilds them; only custom policies see the history.
    policy = attack.policy
    pair_cache: Dict[Tuple[Fraction, Fraction], DetectorPair] = {}
    history: Optional[List[object]] = None
    if akind is AttackKind.EFFICIENCY_CONTROL and policy is not None and policy.kind is PolicyKind.CUSTOM:
        history = []

    def detectors_for(pair: Tuple[Fraction, Fraction]) -> DetectorPair:
        cached = pair_cache.get(pair)
        if cached is None:
            cached = DetectorPair(
                pair[0],
                pair[1],
                base_detectors.dark_prob,
                base_detectors.double_click_policy,
            )
            pair_cache[pair] = cached
        return cached

    stats = SessionStats(n_rounds=config.n_rounds)
    joint = stats.eve_joint
    alice_key_bits = bytearray()
    bob_key_bits = bytearray()
    records: Optional[List[RoundRecord]] = [] if keep_records else None
    eve_records: Optional[List[EveRecord]] = [] if keep_records else None

    for i in range(config.n_rounds):
        a_basis = _BASES[getrandbits(1)]
        a_bit = getrandbits(1)
        if weak:
            pulse = emit(source, a_basis, a_bit, rng)
            n_ph = pulse.n
            alice_state = pulse.state
        else:
            n_ph = n_fixed
            alice_state = pure_state(a_basis, a_bit)
        state: QubitSymbol = alice_state

        stored = 0
        eve_active = False
        eve_conclusive = False
        eve_guess: Optional[int] = None
        eve_suppressed = False
        eve_basis: Optional[Basis] = None
        eve_outcome: Optional[int] = None
        eve_stored = 0
        det_pair = base_detectors

        if akind is AttackKind.NONE:
            pass
        elif akind is AttackKind.INTERCEPT_RESEND:
            if n_ph:
                state, eve_basis, eve_outcome = _intercept_raw(state, rng)
                eve_active = True
                eve_guess = _basis_bit(eve_basis) if is_bk else eve_outcome
        elif akind is AttackKind.EFFICIENCY_CONTROL:
            pair = efficiency_control_round(policy, i, history if history is not None else ())
            det_pair = detectors_for(pair)
            eve_active = True
        elif akind is AttackKind.PNS:
            if n_ph >= 2:
                pulse_in = pulse if weak else pulse_cache[(a_basis, a_bit)]
                forwarded, stored = pns_split(pulse_in)
                eve_stored = stored
                n_ph = forwarded.n
                eve_active = True
        else:  # USD_FILTER
            if n_ph >= 3:
                pulse_in = pulse if weak else pulse_cache[(a_basis, a_bit)]
                forwarded_opt, rec = usd_filter(
                    pulse_in, loss_p, rng, attack.block_inconclusive, i
                )
                eve_active = True
                eve_stored = rec.stored_copies
                eve_conclusive = rec.conclusive
                eve_suppressed = rec.suppressed
                if eve_conclusive:
                    # USD identifies the state outright, so it covers both
                    # key conventions.
                    eve_guess = rec.key_guess if is_bk else a_bit
                if forwarded_opt is None:
                    n_ph = 0
                else:
                    n_ph = forwarded_opt.n
            elif n_ph == 2 and attack.pns_fallback:
                pulse_in = pulse if weak else pulse_cache[(a_basis, a_bit)]
                forwarded, stored = pns_split(pulse_in)
                eve_stored = stored
                n_ph = forwarded.n
                eve_active = True

        if n_ph and not usd_bypass:
            if dep_p > 0.0 and uniform() < dep_p:
                state = MIXED
            if loss_p > 0.0 and uniform() < loss_p:
                n_ph = 0

        b_basis = _BASES[getrandbits(1)]
        event = _detect_core(n_ph, state, b_basis, det_pair, rng)
        clicked = event.outcome is DetectionOutcome.CLICK
        if event.double_click:
            stats.n_double_click += 1

        announced: Optional[int] = None
        kept = False
        a_key: Optional[int] = None
        b_key: Optional[int] = None
        if clicked:
            stats.n_click += 1
            bit = event.bit
            if is_bk:
                announced = bit
                kept = sift_basiskey(a_bit, bit)
                if kept:
                    a_key = alice_key_bit_basiskey(a_basis)
                    b_key = bob_key_bit_basiskey(b_basis)
            else:
                kept = sift_bb84(a_basis, b_basis)
                if kept:
                    a_key = a_bit
                    b_key = bit
        else:
            stats.n_no_click += 1

        if kept:
            stats.n_kept += 1
            alice_key_bits.append(a_key)
            bob_key_bits.append(b_key)
            if a_key != b_key:
                stats.n_key_errors += 1
            if stored:  # PNS-style split happened (PNS or USD n=2 fallback)
                if is_bk:
                    eve_conclusive, eve_guess, eve_basis = _delayed_raw(
                        stored, alice_state, announced, eve_measurement, conditioned, rng
                    )
                else:
                    # Bases are public in BB84: Eve reads the bit exactly.
                    eve_basis = a_basis
                    eve_conclusive = True
                    eve_guess = a_bit
                if eve_basis is not None:
                    if eve_basis is a_basis:
                        stats.n_kept_eve_alice_basis += 1
                        if eve_conclusive:
                            stats.n_concl_eve_alice_basis += 1
                    if eve_basis is b_basis:
                        stats.n_kept_eve_bob_basis += 1
                        if eve_conclusive:
                            stats.n_concl_eve_bob_basis += 1
            elif akind is AttackKind.EFFICIENCY_CONTROL:
                if is_bk:
                    # Everything public: the announced bit. It carries no
                    # basis information, which is the point of the protocol.
                    eve_guess = announced
                else:
                    e0 = det_pair._eta0_f  # type: ignore[attr-defined]
                    e1 = det_pair._eta1_f  # type: ignore[attr-defined]
                    if e1 == 0.0 and e0 > 0.0:
                        eve_guess = 0
                    elif e0 == 0.0 and e1 > 0.0:
                        eve_guess = 1
                    else:
                        eve_guess = None
            if eve_active:
                stats.n_eve_kept += 1
                key = (a_key, eve_guess)
                joint[key] = joint.get(key, 0) + 1
                if eve_conclusive:
                    stats.n_eve_conclusive_kept += 1

        if eve_conclusive:
            stats.n_eve_conclusive += 1
        if eve_suppressed:
            stats.n_suppressed += 1

        if history is not None:
            if is_bk:
                history.append(announced)
            else:
                history.append(
                    (_basis_bit(a_basis), _basis_bit(b_basis)) if clicked else None
                )

        if keep_records:
            records.append(
                RoundRecord(
                    round_id=i,
                    alice_basis=a_basis,
                    alice_bit=a_bit,
                    bob_basis=b_basis,
                    detection=event,
                    announced=announced,
                    kept=kept,
                    alice_key_bit=a_key,
                    bob_key_bit=b_key,
                    double_click_flag=event.double_click,
                )
            )
            if eve_active:
                eve_records.append(
                    EveRecord(
                        round_id=i,
                        stored_copies=eve_stored,
                        conclusive=eve_conclusive,
                        key_guess=eve_guess,
                        suppressed=eve_suppressed,
                        eve_basis=eve_basis,
                        eve_outcome=eve_outcome,
                    )
                )

    keys = SiftedKeyPair(bytes(alice_key_bits), bytes(bob_key_bits))
    return SessionResult(
        config=config,
        stats=stats,
        keys=keys,
        records=records,
        eve_records=eve_records,
    )
