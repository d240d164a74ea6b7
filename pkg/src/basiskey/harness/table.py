"""Branch table for the intercept-resend attack on the reference round:
Alice sends |0>_z (key bit 0).

The rows enumerate Eve's basis choice, her resent state, Bob's basis and
outcome, the sift result, and whether a kept round carries an error.  When
Eve picks Alice's basis the resend is identical to the original, so every
downstream branch is undisturbed and collapses into a single row.  Rows are
generated from the same key-map/sift primitives the session runner uses;
probabilities are exact and sum to 1.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional

from ..protocol import alice_key_bit_basiskey, bob_key_bit_basiskey, sift_basiskey
from ..qcore import Basis

_HALF = Fraction(1, 2)

# Column order for renderers (probability last).
TABLE1_COLUMNS = ("eve_basis", "resend", "bob_basis", "outcome", "result", "disturbance", "probability")

_REFERENCE_BASIS = Basis.Z
_REFERENCE_BIT = 0


def _state_label(basis: Basis, bit: int) -> str:
    return f"|{bit}>_{basis.value.lower()}"


def table1_report() -> List[Dict[str, object]]:
    """All intercept-resend branches for Alice sending |0>_z.

    Each row has keys TABLE1_COLUMNS; `probability` is a Fraction, the rest
    are display strings ("-" where a collapsed row leaves the column empty,
    "inconclusive" in the result column for discarded rounds)."""
    a_basis = _REFERENCE_BASIS
    a_bit = _REFERENCE_BIT
    a_key = alice_key_bit_basiskey(a_basis)

    rows: List[Dict[str, object]] = []
    # Eve's basis ordered to put the collapsing (same-as-Alice) branch first.
    for m in (a_basis, a_basis.conjugate):
        p_eve = _HALF
        if m is a_basis:
            # Her measurement reproduces Alice's state exactly; nothing
            # downstream can differ from the no-attack round.
            rows.append(
                {
                    "eve_basis": m.value,
                    "resend": _state_label(a_basis, a_bit),
                    "bob_basis": "-",
                    "outcome": "-",
                    "result": "-",
                    "disturbance": "none",
                    "probability": p_eve,
                }
            )
            continue
        for eve_outcome in (0, 1):
            p_resend = p_eve * _HALF
            for b_basis in (Basis.X, Basis.Z):
                p_bob = p_resend * _HALF
                # Matched measurement is deterministic, conjugate splits.
                if b_basis is m:
                    outcomes = ((Fraction(1), eve_outcome),)
                else:
                    outcomes = ((_HALF, 0), (_HALF, 1))
                for p_out, bob_outcome in outcomes:
                    kept = sift_basiskey(a_bit, bob_outcome)
                    result: str
                    disturbance = "none"
                    if kept:
                        b_key = bob_key_bit_basiskey(b_basis)
                        result = str(b_key)
                        if b_key != a_key:
                            disturbance = "error!"
                    else:
                        result = "inconclusive"
                    rows.append(
                        {
                            "eve_basis": m.value,
                            "resend": _state_label(m, eve_outcome),
                            "bob_basis": b_basis.value,
                            "outcome": _state_label(b_basis, bob_outcome),
                            "result": result,
                            "disturbance": disturbance,
                            "probability": p_bob * p_out,
                        }
                    )

    total = sum(row["probability"] for row in rows)
    if total != 1:
        raise RuntimeError(f"branch probabilities sum to {total}, not 1")
    return rows


def render_table1_text(rows: Optional[List[Dict[str, object]]] = None) -> str:
    """Fixed-width text rendering (the CLI's default table1 output)."""
    if rows is None:
        rows = table1_report()
    headers = [c for c in TABLE1_COLUMNS]
    cells = [
        [str(row[c]) for c in TABLE1_COLUMNS]
        for row in rows
    ]
    widths = [
        max(len(h), *(len(r[i]) for r in cells)) for i, h in enumerate(headers)
    ]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for r in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    return "\n".join(lines)
