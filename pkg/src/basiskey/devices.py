"""Photon sources and Bob's two-detector measurement unit.

Sources emit phase-randomized pulses: every photon in a pulse carries the
same symbol.  Detection routes each photon through a projective measurement
in Bob's basis and onto the detector matching the outcome bit; detector
efficiencies and dark counts are applied per gate, identically for both
basis settings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Union

from .qcore import Basis, QubitSymbol, RandomStream, StateKind, VACUUM, measure, pure_state

ProbabilityLike = Union[int, float, str, Fraction]


def as_probability(value: ProbabilityLike, name: str) -> Fraction:
    """Normalize a probability parameter to an exact Fraction in [0, 1].

    Floats are read through their shortest decimal representation, so 0.2
    means exactly 1/5.  This keeps enumeration exact while letting Monte
    Carlo configs use plain literals.
    """
    try:
        frac = value if isinstance(value, Fraction) else Fraction(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"{name} is not a valid probability: {value!r}") from exc
    if not 0 <= frac <= 1:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return frac


class SourceKind(Enum):
    SINGLE_PHOTON = "single"
    WEAK_COHERENT = "weak"
    FIXED_NUMBER = "fixed"


@dataclass(frozen=True)
class SourceModel:
    """Photon source. SINGLE_PHOTON emits exactly one photon, WEAK_COHERENT
    draws Poisson(mu) photons, FIXED_NUMBER always emits n photons (the
    deterministic Fock source used for per-pulse multi-photon analyses)."""

    kind: SourceKind
    mu: float = 0.0
    n: int = 1

    def __post_init__(self) -> None:
        if self.kind is SourceKind.WEAK_COHERENT and self.mu < 0:
            raise ValueError("mean photon number must be non-negative")
        if self.kind is SourceKind.FIXED_NUMBER and self.n < 1:
            raise ValueError("fixed photon number must be at least 1")

    @classmethod
    def single_photon(cls) -> "SourceModel":
        return cls(SourceKind.SINGLE_PHOTON)

    @classmethod
    def weak_coherent(cls, mu: float) -> "SourceModel":
        return cls(SourceKind.WEAK_COHERENT, mu=float(mu))

    @classmethod
    def fixed_number(cls, n: int) -> "SourceModel":
        return cls(SourceKind.FIXED_NUMBER, n=int(n))


@dataclass(frozen=True)
class PhotonPulse:
    """A pulse of n photons all carrying the same symbol; n=0 is vacuum."""

    n: int
    state: QubitSymbol

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError("photon count cannot be negative")
        if self.n == 0 and self.state.kind is not StateKind.VACUUM:
            raise ValueError("an empty pulse must carry the vacuum symbol")
        if self.n > 0 and self.state.kind is StateKind.VACUUM:
            raise ValueError("a non-empty pulse cannot carry the vacuum symbol")


EMPTY_PULSE = PhotonPulse(0, VACUUM)


def poisson_sample(mu: float, rng: RandomStream) -> int:
    """Exact Poisson(mu) draw (multiplicative rejection; fine for small mu)."""
    if mu <= 0.0:
        return 0
    limit = math.exp(-mu)
    n = 0
    acc = rng.random()
    while acc > limit:
        n += 1
        acc *= rng.random()
    return n


def emit(source: SourceModel, basis: Basis, bit: int, rng: RandomStream) -> PhotonPulse:
    """Emit one pulse encoding the requested BB84 state."""
    if source.kind is SourceKind.SINGLE_PHOTON:
        return PhotonPulse(1, pure_state(basis, bit))
    if source.kind is SourceKind.FIXED_NUMBER:
        return PhotonPulse(source.n, pure_state(basis, bit))
    n = poisson_sample(source.mu, rng)
    if n == 0:
        return EMPTY_PULSE
    return PhotonPulse(n, pure_state(basis, bit))


class DoubleClickPolicy(Enum):
    RANDOM_ASSIGN = "random"
    DISCARD = "discard"


@dataclass(frozen=True)
class DetectorPair:
    """Bob's two gated detectors, one per outcome bit.

    Efficiencies and the dark-count probability apply identically for both
    basis settings; basis independence is the protocol's core device
    assumption.  Probabilities are stored as exact fractions (see
    :func:`as_probability`).
    """

    eta0: Fraction
    eta1: Fraction
    dark_prob: Fraction = Fraction(0)
    double_click_policy: DoubleClickPolicy = DoubleClickPolicy.RANDOM_ASSIGN

    def __post_init__(self) -> None:
        object.__setattr__(self, "eta0", as_probability(self.eta0, "eta0"))
        object.__setattr__(self, "eta1", as_probability(self.eta1, "eta1"))
        object.__setattr__(self, "dark_prob", as_probability(self.dark_prob, "dark_prob"))
        # Float mirrors so per-round sampling never converts Fractions.
        object.__setattr__(self, "_eta0_f", float(self.eta0))
        object.__setattr__(self, "_eta1_f", float(self.eta1))
        object.__setattr__(self, "_dark_f", float(self.dark_prob))

    @classmethod
    def ideal(cls) -> "DetectorPair":
        return cls(Fraction(1), Fraction(1))


class DetectionOutcome(Enum):
    NO_CLICK = "no_click"
    CLICK = "click"
    DOUBLE_CLICK = "double_click"


@dataclass(frozen=True)
class DetectionEvent:
    """Resolved per-gate detection result.

    `outcome` is NO_CLICK or CLICK(bit) after the double-click policy has
    been applied; `double_click` records whether both detectors fired in
    the gate before resolution.
    """

    outcome: DetectionOutcome
    bit: Optional[int] = None
    double_click: bool = False


NO_CLICK_EVENT = DetectionEvent(DetectionOutcome.NO_CLICK)
CLICK0_EVENT = DetectionEvent(DetectionOutcome.CLICK, 0)
CLICK1_EVENT = DetectionEvent(DetectionOutcome.CLICK, 1)
DOUBLE_AS_CLICK0 = DetectionEvent(DetectionOutcome.CLICK, 0, True)
DOUBLE_AS_CLICK1 = DetectionEvent(DetectionOutcome.CLICK, 1, True)
DOUBLE_DISCARDED = DetectionEvent(DetectionOutcome.NO_CLICK, None, True)


def _detect_core(
    n: int,
    state: QubitSymbol,
    bob_basis: Basis,
    detectors: DetectorPair,
    rng: RandomStream,
) -> DetectionEvent:
    """detect() without the PhotonPulse wrapper; hot path for the session
    runner.  Returns interned events, so results must be treated as values."""
    eta0: float = detectors._eta0_f  # type: ignore[attr-defined]
    eta1: float = detectors._eta1_f  # type: ignore[attr-defined]
    fire0 = False
    fire1 = False
    if n > 0:
        if state.kind is StateKind.PURE and state.basis is bob_basis:
            # All photons land on the same detector.
            eta = eta0 if state.bit == 0 else eta1
            if eta >= 1.0:
                hit = True
            elif eta <= 0.0:
                hit = False
            else:
                hit = any(rng.random() < eta for _ in range(n))
            if state.bit == 0:
                fire0 = hit
            else:
                fire1 = hit
        else:
            for _ in range(n):
                out = measure(state, bob_basis, rng)
                if out == 0:
                    if not fire0 and (eta0 >= 1.0 or rng.random() < eta0):
                        fire0 = True
                else:
                    if not fire1 and (eta1 >= 1.0 or rng.random() < eta1):
                        fire1 = True
    dark: float = detectors._dark_f  # type: ignore[attr-defined]
    if dark > 0.0:
        fire0 = fire0 or rng.random() < dark
        fire1 = fire1 or rng.random() < dark
    if fire0 and fire1:
        if detectors.double_click_policy is DoubleClickPolicy.RANDOM_ASSIGN:
            return DOUBLE_AS_CLICK1 if rng.getrandbits(1) else DOUBLE_AS_CLICK0
        return DOUBLE_DISCARDED
    if fire0:
        return CLICK0_EVENT
    if fire1:
        return CLICK1_EVENT
    return NO_CLICK_EVENT


def detect(
    pulse: PhotonPulse,
    bob_basis: Basis,
    detectors: DetectorPair,
    rng: RandomStream,
) -> DetectionEvent:
    """Measure a pulse with Bob's detector pair.

    Each photon is measured independently in `bob_basis`, routed to the
    detector matching its outcome bit, and registers with that detector's
    efficiency.  Each detector additionally dark-fires with dark_prob.
    Both firing is a double click, resolved per the configured policy:
    RANDOM_ASSIGN announces a uniform bit and flags the event, DISCARD
    converts it to NO_CLICK (still flagged).
    """
    return _detect_core(pulse.n, pulse.state, bob_basis, detectors, rng)
