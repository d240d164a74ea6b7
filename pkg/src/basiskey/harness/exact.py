"""Exact scenario evaluation by branch enumeration.

Rounds are i.i.d., so per-round probabilities are enumerated once over the
full discrete branch tree (preparation x attack x channel x basis x
detection x delayed measurement) with Fraction arithmetic.  This is an
independent implementation of the same round semantics as
protocol.run_session — no sampling, closed-form detection probabilities —
which is what makes it usable as an oracle for the Monte Carlo runner.

Scenarios whose distributions are not finitely/rationally enumerable
(Poisson sources, opaque or round-indexed efficiency policies, optimal-USD
with an odd copy count) raise NotEnumerableError naming the offending
parameter.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple

from ..adversary import (
    AttackKind,
    AttackStrategy,
    EveMeasurement,
    PolicyKind,
    _basis_bit,
    mutual_information_bits,
)
from ..devices import DetectorPair, DoubleClickPolicy, SourceKind
from ..protocol import (
    ProtocolKind,
    alice_key_bit_basiskey,
    bob_key_bit_basiskey,
    sift_basiskey,
    sift_bb84,
)
from ..qcore import MIXED, Basis, QubitSymbol, StateKind, pure_state
from .metrics import (
    DOUBLE_CLICK_RATE,
    EVE_CONCLUSIVE_FRACTION,
    EVE_CONCLUSIVE_GIVEN_ALICE_BASIS,
    EVE_CONCLUSIVE_GIVEN_BOB_BASIS,
    EVE_CONCLUSIVE_PER_ROUND,
    EVE_GUESS_ACCURACY,
    EVE_MUTUAL_INFORMATION,
    KEY_ONES_FRACTION,
    LOSS_COVERED,
    MODE_ENUMERATE,
    NO_CLICK_RATE,
    QBER,
    SIFT_FRACTION,
    SUPPRESSION_RATE,
    MetricSet,
)
from .scenario import Scenario

_BASES = (Basis.Z, Basis.X)
_ZERO = Fraction(0)
_ONE = Fraction(1)
_HALF = Fraction(1, 2)


class NotEnumerableError(ValueError):
    """The scenario has no finite rational branch tree."""

    def __init__(self, parameter: str, reason: str) -> None:
        self.parameter = parameter
        self.reason = reason
        super().__init__(f"not enumerable: {parameter}: {reason}")


def usd_conclusive_fraction(stored_copies: int, parameter: str = "stored_copies") -> Fraction:
    """Exact optimal-USD success probability 1 - 2**(-k/2), defined as a
    rational only for even k."""
    if stored_copies < 1:
        raise ValueError("stored_copies must be >= 1")
    if stored_copies % 2:
        raise NotEnumerableError(
            parameter,
            f"success probability 1 - 2**(-{stored_copies}/2) is irrational "
            f"for {stored_copies} stored copies",
        )
    denom = 2 ** (stored_copies // 2)
    return Fraction(denom - 1, denom)


def assert_enumerable(scenario: Scenario) -> None:
    """Raise NotEnumerableError unless every branch of the scenario has a
    finite set of rational-probability outcomes."""
    if scenario.source.kind is SourceKind.WEAK_COHERENT:
        raise NotEnumerableError(
            "source.mu", "Poisson photon-number support is unbounded"
        )
    if scenario.postprocess:
        raise NotEnumerableError(
            "postprocess", "classical postprocessing is randomized; use montecarlo mode"
        )
    attack = scenario.attack
    policy = attack.policy
    if policy is not None:
        if policy.kind is PolicyKind.CUSTOM:
            raise NotEnumerableError(
                "attack.policy", "custom efficiency policies are opaque callables"
            )
        if policy.kind is PolicyKind.ALTERNATING:
            raise NotEnumerableError(
                "attack.policy",
                "round-indexed policies break the identical-rounds assumption",
            )
    n_src = 1 if scenario.source.kind is SourceKind.SINGLE_PHOTON else scenario.source.n
    if attack.kind is AttackKind.PNS and n_src >= 2:
        if attack.eve_measurement is EveMeasurement.OPTIMAL_USD:
            usd_conclusive_fraction(n_src - 1, "attack.eve_measurement")
    if attack.kind is AttackKind.USD_FILTER and n_src >= 3:
        usd_conclusive_fraction(n_src - 1, "attack")


def is_enumerable(scenario: Scenario) -> bool:
    try:
        assert_enumerable(scenario)
    except NotEnumerableError:
        return False
    return True


def _signal_pattern_dist(
    n: int, state: QubitSymbol, bob_basis: Basis, detectors: DetectorPair
) -> Dict[Tuple[bool, bool], Fraction]:
    """Joint distribution of (detector0 fired, detector1 fired) from signal
    photons alone: n identical copies of `state`, each measured in
    `bob_basis`, routed by outcome, registering with that detector's
    efficiency."""
    if n == 0 or state.kind is StateKind.VACUUM:
        return {(False, False): _ONE}
    e0, e1 = detectors.eta0, detectors.eta1
    if state.kind is StateKind.PURE and state.basis is bob_basis:
        eta = e0 if state.bit == 0 else e1
        p_silent = (_ONE - eta) ** n
        fired = (True, False) if state.bit == 0 else (False, True)
        return {(False, False): p_silent, fired: _ONE - p_silent}
    # Conjugate-basis or fully mixed: each photon routes 50/50 independently.
    p_no_both = (_ONE - (e0 + e1) / 2) ** n
    p_no0 = (_ONE - e0 / 2) ** n
    p_no1 = (_ONE - e1 / 2) ** n
    return {
        (False, False): p_no_both,
        (True, False): p_no1 - p_no_both,
        (False, True): p_no0 - p_no_both,
        (True, True): _ONE - p_no0 - p_no1 + p_no_both,
    }


def detection_distribution(
    n: int, state: QubitSymbol, bob_basis: Basis, detectors: DetectorPair
) -> Dict[Tuple[bool, bool], Fraction]:
    """Signal distribution with each detector's independent dark-count
    probability OR'd in."""
    d = detectors.dark_prob
    signal = _signal_pattern_dist(n, state, bob_basis, detectors)
    if d == 0:
        return {k: v for k, v in signal.items() if v != 0}
    out: Dict[Tuple[bool, bool], Fraction] = {}
    for (s0, s1), q in signal.items():
        if q == 0:
            continue
        opts0 = ((True, _ONE),) if s0 else ((False, _ONE - d), (True, d))
        opts1 = ((True, _ONE),) if s1 else ((False, _ONE - d), (True, d))
        for f0, p0 in opts0:
            for f1, p1 in opts1:
                p = q * p0 * p1
                if p != 0:
                    key = (f0, f1)
                    out[key] = out.get(key, _ZERO) + p
    return out


# (probability, clicked, announced bit or None, double-click flag)
_EventBranch = Tuple[Fraction, bool, Optional[int], bool]


def detection_event_branches(
    n: int, state: QubitSymbol, bob_basis: Basis, detectors: DetectorPair
) -> List[_EventBranch]:
    """Detection outcomes after double-click resolution."""
    branches: List[_EventBranch] = []
    for (f0, f1), p in detection_distribution(n, state, bob_basis, detectors).items():
        if f0 and f1:
            if detectors.double_click_policy is DoubleClickPolicy.RANDOM_ASSIGN:
                branches.append((p * _HALF, True, 0, True))
                branches.append((p * _HALF, True, 1, True))
            else:
                branches.append((p, False, None, True))
        elif f0:
            branches.append((p, True, 0, False))
        elif f1:
            branches.append((p, True, 1, False))
        else:
            branches.append((p, False, None, False))
    return branches


@dataclass(frozen=True)
class _AttackBranch:
    p: Fraction
    n: int
    state: QubitSymbol
    stored: int  # copies pending a delayed measurement
    active: bool = False
    conclusive: bool = False
    guess: Optional[int] = None
    suppressed: bool = False
    eve_basis: Optional[Basis] = None


def _attack_branches(
    attack: AttackStrategy,
    a_basis: Basis,
    a_bit: int,
    alice_state: QubitSymbol,
    n_src: int,
    is_bk: bool,
) -> List[_AttackBranch]:
    kind = attack.kind
    if kind is AttackKind.NONE:
        return [_AttackBranch(_ONE, n_src, alice_state, 0)]
    if kind is AttackKind.EFFICIENCY_CONTROL:
        # Detector substitution happens at detection time; Eve is a passive
        # listener otherwise.
        return [_AttackBranch(_ONE, n_src, alice_state, 0, active=True)]
    if kind is AttackKind.INTERCEPT_RESEND:
        if n_src == 0:
            return [_AttackBranch(_ONE, 0, alice_state, 0)]
        out = []
        for m in _BASES:
            outcomes: Iterable[Tuple[Fraction, int]]
            if m is a_basis:
                outcomes = ((_ONE, a_bit),)
            else:
                outcomes = ((_HALF, 0), (_HALF, 1))
            for po, o in outcomes:
                out.append(
                    _AttackBranch(
                        _HALF * po,
                        n_src,
                        pure_state(m, o),
                        0,
                        active=True,
                        guess=_basis_bit(m) if is_bk else o,
                        eve_basis=m,
                    )
                )
        return out
    if kind is AttackKind.PNS:
        if n_src >= 2:
            return [_AttackBranch(_ONE, 1, alice_state, n_src - 1, active=True)]
        return [_AttackBranch(_ONE, n_src, alice_state, 0)]
    # USD filter
    if n_src >= 3:
        q = usd_conclusive_fraction(n_src - 1, "attack")
        guess = _basis_bit(a_basis) if is_bk else a_bit
        out = [
            _AttackBranch(
                q, 1, alice_state, 0, active=True, conclusive=True, guess=guess
            )
        ]
        if attack.block_inconclusive:
            out.append(
                _AttackBranch(_ONE - q, 0, alice_state, 0, active=True, suppressed=True)
            )
        else:
            out.append(_AttackBranch(_ONE - q, 1, alice_state, 0, active=True))
        return out
    if n_src == 2 and attack.pns_fallback:
        return [_AttackBranch(_ONE, 1, alice_state, 1, active=True)]
    return [_AttackBranch(_ONE, n_src, alice_state, 0)]


def _channel_branches(
    n: int, state: QubitSymbol, dep: Fraction, loss: Fraction, bypass: bool
) -> List[Tuple[Fraction, int, QubitSymbol]]:
    if n == 0 or bypass:
        return [(_ONE, n, state)]
    dep_opts = [(_ONE - dep, state)]
    if dep:
        dep_opts.append((dep, MIXED))
    loss_opts = [(_ONE - loss, n)]
    if loss:
        loss_opts.append((loss, 0))
    return [
        (pd * pl, nn, st) for pd, st in dep_opts for pl, nn in loss_opts if pd * pl != 0
    ]


# (probability, conclusive, guess, measurement basis or None)
_DelayedBranch = Tuple[Fraction, bool, Optional[int], Optional[Basis]]


def _delayed_branches(
    stored: int,
    a_basis: Basis,
    announced: int,
    measurement: EveMeasurement,
    conditioned: bool,
) -> List[_DelayedBranch]:
    """Delayed measurement on stored copies after the public announcement
    (basis-keyed protocol, kept rounds only)."""
    if measurement is EveMeasurement.OPTIMAL_USD:
        q = usd_conclusive_fraction(stored, "attack.eve_measurement")
        out: List[_DelayedBranch] = [(q, True, _basis_bit(a_basis), None)]
        if q != _ONE:
            out.append((_ONE - q, False, None, None))
        return out
    if conditioned:
        bases = ((_ONE, Basis.X if announced == 0 else Basis.Z),)
    else:
        bases = ((_HALF, Basis.Z), (_HALF, Basis.X))
    out = []
    for pm, m in bases:
        if m is a_basis:
            # Copies collapse to Alice's bit, which sifting forces to
            # flip(announced): always consistent, never conclusive.
            out.append((pm, False, None, m))
            continue
        p_consistent = Fraction(1, 2 ** stored)
        out.append((pm * (_ONE - p_consistent), True, _basis_bit(m) ^ 1, m))
        out.append((pm * p_consistent, False, None, m))
    return [b for b in out if b[0] != 0]


class _Accumulator:
    def __init__(self) -> None:
        self.p_total = _ZERO
        self.p_click = _ZERO
        self.p_no_click = _ZERO
        self.p_double = _ZERO
        self.p_kept = _ZERO
        self.p_kept_ones = _ZERO
        self.p_err = _ZERO
        self.p_suppressed = _ZERO
        self.p_conclusive = _ZERO
        self.p_conclusive_kept = _ZERO
        self.p_eve_kept = _ZERO
        self.p_kept_m_alice = _ZERO
        self.p_concl_m_alice = _ZERO
        self.p_kept_m_bob = _ZERO
        self.p_concl_m_bob = _ZERO
        self.joint: Dict[Tuple[int, Optional[int]], Fraction] = {}

    def add_joint(self, a_key: int, guess: Optional[int], p: Fraction) -> None:
        key = (a_key, guess)
        self.joint[key] = self.joint.get(key, _ZERO) + p


def enumerate_exact(scenario: Scenario) -> MetricSet:
    """Evaluate a scenario exactly.  Metric names and emission rules match
    run_monte_carlo so the two back ends can be compared term by term."""
    assert_enumerable(scenario)

    protocol = scenario.protocol
    is_bk = protocol is ProtocolKind.BASISKEY
    attack = scenario.attack
    akind = attack.kind
    usd_bypass = akind is AttackKind.USD_FILTER
    n_src = 1 if scenario.source.kind is SourceKind.SINGLE_PHOTON else scenario.source.n

    detectors = scenario.detectors
    if akind is AttackKind.EFFICIENCY_CONTROL:
        pair = attack.policy.pairs[0]
        detectors = DetectorPair(
            pair[0], pair[1], detectors.dark_prob, detectors.double_click_policy
        )
    # EC key inference from a forced detector pair (BB84 branch below).
    ec_guess_bb84: Optional[int] = None
    if detectors.eta1 == 0 and detectors.eta0 > 0:
        ec_guess_bb84 = 0
    elif detectors.eta0 == 0 and detectors.eta1 > 0:
        ec_guess_bb84 = 1

    acc = _Accumulator()
    p_prep = Fraction(1, 4)

    for a_basis in _BASES:
        for a_bit in (0, 1):
            alice_state = pure_state(a_basis, a_bit)
            for ab in _attack_branches(attack, a_basis, a_bit, alice_state, n_src, is_bk):
                for p_chan, n_eff, state_eff in _channel_branches(
                    ab.n, ab.state, scenario.depolarize, scenario.loss, usd_bypass
                ):
                    for b_basis in _BASES:
                        for p_det, clicked, bit, double in detection_event_branches(
                            n_eff, state_eff, b_basis, detectors
                        ):
                            p = p_prep * ab.p * p_chan * _HALF * p_det
                            if p == 0:
                                continue
                            acc.p_total += p
                            if double:
                                acc.p_double += p
                            if ab.suppressed:
                                acc.p_suppressed += p
                            if ab.conclusive:
                                acc.p_conclusive += p
                            if not clicked:
                                acc.p_no_click += p
                                continue
                            acc.p_click += p

                            if is_bk:
                                kept = sift_basiskey(a_bit, bit)
                                a_key = alice_key_bit_basiskey(a_basis)
                                b_key = bob_key_bit_basiskey(b_basis)
                            else:
                                kept = sift_bb84(a_basis, b_basis)
                                a_key = a_bit
                                b_key = bit
                            if not kept:
                                continue
                            acc.p_kept += p
                            if a_key == 1:
                                acc.p_kept_ones += p
                            if a_key != b_key:
                                acc.p_err += p

                            if ab.stored:
                                if is_bk:
                                    delayed = _delayed_branches(
                                        ab.stored,
                                        a_basis,
                                        bit,
                                        attack.eve_measurement,
                                        attack.condition_on_announced,
                                    )
                                else:
                                    # Bases are public in BB84: Eve reads the
                                    # bit exactly from any stored copy.
                                    delayed = [(_ONE, True, a_bit, a_basis)]
                                for pd, concl, guess, m in delayed:
                                    sub = p * pd
                                    acc.p_eve_kept += sub
                                    acc.add_joint(a_key, guess, sub)
                                    if concl:
                                        acc.p_conclusive += sub
                                        acc.p_conclusive_kept += sub
                                    if m is not None:
                                        if m is a_basis:
                                            acc.p_kept_m_alice += sub
                                            if concl:
                                                acc.p_concl_m_alice += sub
                                        if m is b_basis:
                                            acc.p_kept_m_bob += sub
                                            if concl:
                                                acc.p_concl_m_bob += sub
                                continue

                            guess = ab.guess
                            if akind is AttackKind.EFFICIENCY_CONTROL:
                                # Everything public: for the basis-keyed
                                # protocol only the announced bit, which is
                                # independent of the key by construction.
                                guess = bit if is_bk else ec_guess_bb84
                            if ab.active:
                                acc.p_eve_kept += p
                                acc.add_joint(a_key, guess, p)
                                if ab.conclusive:
                                    acc.p_conclusive_kept += p

    if acc.p_total != _ONE:
        raise RuntimeError(f"branch probabilities sum to {acc.p_total}, not 1")

    ms = MetricSet(mode=MODE_ENUMERATE)
    ms.put_exact(SIFT_FRACTION, acc.p_kept)
    if acc.p_kept:
        ms.put_exact(QBER, acc.p_err / acc.p_kept)
        ms.put_exact(KEY_ONES_FRACTION, acc.p_kept_ones / acc.p_kept)
    ms.put_exact(NO_CLICK_RATE, acc.p_no_click)
    ms.put_exact(DOUBLE_CLICK_RATE, acc.p_double)

    if akind is AttackKind.USD_FILTER:
        ms.put_exact(SUPPRESSION_RATE, acc.p_suppressed)
        # Covertness verdict: does the honest loss budget absorb the
        # suppression rate?  Exact-only; a sampled rate sitting exactly on
        # the budget would flip a coin against it.
        ms.put_exact(
            LOSS_COVERED, _ONE if acc.p_suppressed <= scenario.loss else _ZERO
        )
    if akind in (AttackKind.PNS, AttackKind.USD_FILTER):
        ms.put_exact(EVE_CONCLUSIVE_PER_ROUND, acc.p_conclusive)
    if akind is not AttackKind.NONE:
        if acc.p_eve_kept:
            ms.put_exact(EVE_CONCLUSIVE_FRACTION, acc.p_conclusive_kept / acc.p_eve_kept)
        if acc.joint:
            ms.put_float(EVE_MUTUAL_INFORMATION, mutual_information_bits(acc.joint))
            p_guessed = sum(
                v for (_key, g), v in acc.joint.items() if g is not None
            )
            if p_guessed:
                p_right = sum(
                    v for (key, g), v in acc.joint.items() if g == key
                )
                ms.put_exact(EVE_GUESS_ACCURACY, p_right / p_guessed)
        if acc.p_kept_m_alice:
            ms.put_exact(
                EVE_CONCLUSIVE_GIVEN_ALICE_BASIS, acc.p_concl_m_alice / acc.p_kept_m_alice
            )
        if acc.p_kept_m_bob:
            ms.put_exact(
                EVE_CONCLUSIVE_GIVEN_BOB_BASIS, acc.p_concl_m_bob / acc.p_kept_m_bob
            )
    return ms
