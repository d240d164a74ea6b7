"""Exact symbolic model of the four BB84 states.

Every state handled by the simulator is one of six symbols: the four BB84
pure states, the maximally mixed state, and vacuum.  Measurement statistics
in the X/Z bases are closed-form (deterministic, fair coin, or fair coin),
so no amplitude arithmetic is needed anywhere: the 16-entry overlap table
below is the whole Hilbert space this toolkit requires.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Optional

RandomStream = random.Random

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class Basis(Enum):
    """Preparation/measurement basis. Z is the computational basis."""

    Z = "Z"
    X = "X"

    @property
    def conjugate(self) -> "Basis":
        return Basis.X if self is Basis.Z else Basis.Z


def flip_bit(bit: int) -> int:
    """Involutive bit flip; bits are plain ints 0/1 throughout."""
    return bit ^ 1


class StateKind(Enum):
    PURE = "pure"
    MIXED = "mixed"
    VACUUM = "vacuum"


@dataclass(frozen=True)
class QubitSymbol:
    """One of the six symbols flowing through channel and attacks.

    PURE carries (basis, bit); MIXED and VACUUM carry neither.  Instances
    are interned: use :func:`pure_state`, :data:`MIXED`, :data:`VACUUM`.
    """

    kind: StateKind
    basis: Optional[Basis] = None
    bit: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind is StateKind.PURE:
            if self.basis is None or self.bit not in (0, 1):
                raise ValueError("pure symbol requires a basis and a bit in {0, 1}")
        elif self.basis is not None or self.bit is not None:
            raise ValueError(f"{self.kind.value} symbol carries no basis or bit")

    @property
    def is_pure(self) -> bool:
        return self.kind is StateKind.PURE


MIXED = QubitSymbol(StateKind.MIXED)
VACUUM = QubitSymbol(StateKind.VACUUM)

_PURE = {
    (basis, bit): QubitSymbol(StateKind.PURE, basis, bit)
    for basis in Basis
    for bit in (0, 1)
}


def pure_state(basis: Basis, bit: int) -> QubitSymbol:
    """Interned BB84 pure state |bit> in `basis`."""
    try:
        return _PURE[(basis, bit)]
    except KeyError:
        raise ValueError(f"no BB84 state for basis={basis!r} bit={bit!r}") from None


def measure(state: QubitSymbol, basis: Basis, rng: RandomStream) -> int:
    """Projective measurement of `state` in `basis`; returns the outcome bit.

    Matching-basis pure states give their stored bit with certainty;
    conjugate-basis pure states and the mixed state give a fair coin.
    Vacuum is rejected: whether vacuum produces a click is a detector
    question, not a measurement one.
    """
    if state.kind is StateKind.VACUUM:
        raise ValueError("cannot measure vacuum; route it through the detector model")
    if state.kind is StateKind.PURE and state.basis is basis:
        return state.bit  # type: ignore[return-value]
    return rng.getrandbits(1)


def depolarize(state: QubitSymbol, p: float, rng: RandomStream) -> QubitSymbol:
    """Depolarizing channel: with probability p the symbol becomes MIXED.

    Vacuum passes through unchanged (there is nothing to depolarize).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarization probability {p} outside [0, 1]")
    if state.kind is StateKind.VACUUM or p == 0.0:
        return state
    if p == 1.0 or rng.random() < p:
        return MIXED
    return state


def overlap_magnitude(a: QubitSymbol, b: QubitSymbol) -> float:
    """|<a|b>| for two pure symbols.

    1 for identical states, 0 for same-basis opposite bits, 1/sqrt(2)
    across conjugate bases.  Symmetric in its arguments.
    """
    if not (a.is_pure and b.is_pure):
        raise ValueError("overlap is defined for pure symbols only")
    if a.basis is b.basis:
        return 1.0 if a.bit == b.bit else 0.0
    return _INV_SQRT2


def usd_success_prob(n_copies: int) -> float:
    """Optimal conclusive probability for unambiguous discrimination.

    For n copies of one of two pure states with single-copy overlap
    1/sqrt(2), the optimal unambiguous measurement concludes with
    probability 1 - (1/sqrt(2))**n.  Strictly increasing in n and
    strictly below 1.
    """
    if n_copies < 1:
        raise ValueError("usd_success_prob requires at least one copy")
    # 2**(-n/2) is exact in binary floating point for even n, which keeps
    # the two-copy value at exactly 1/2.
    return 1.0 - 2.0 ** (-n_copies / 2.0)
