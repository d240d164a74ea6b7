"""Simulator and analysis toolkit for a basis-keyed QKD protocol.

The protocol under study extracts the secret from each party's *basis
choice* while measurement outcomes are announced publicly — the reverse of
BB84's roles — and this package provides both protocols behind one
interface: an exact symbolic round model (`qcore`, `devices`), session
simulation (`protocol`), eavesdropping strategies (`adversary`), classical
postprocessing (`postproc`), and an experiment harness with an exact
rational enumerator cross-checking the Monte Carlo runner (`harness`).
An HTTP facade lives in `service`; `cli` wraps the same entry points.
"""

from .adversary import (
    AttackKind,
    AttackStrategy,
    EfficiencyPolicy,
    EveMeasurement,
    EveRecord,
    eve_information,
    mutual_information_bits,
)
from .devices import (
    DetectorPair,
    DoubleClickPolicy,
    PhotonPulse,
    SourceKind,
    SourceModel,
    detect,
    emit,
)
from .postproc import (
    PostprocReport,
    PostprocResult,
    RandomnessReport,
    SiftedKeyPair,
    binary_entropy,
    cascade_correct,
    estimate_qber,
    key_length,
    parse_key,
    postprocess,
    randomness_tests,
    serialize_key,
    toeplitz_amplify,
)
from .protocol import (
    ProtocolKind,
    RoundRecord,
    SessionConfig,
    SessionResult,
    SessionStats,
    run_session,
)
from .qcore import Basis, QubitSymbol, RandomStream, StateKind, measure, pure_state, usd_success_prob

__version__ = "0.1.0"

__all__ = [
    "AttackKind",
    "AttackStrategy",
    "Basis",
    "DetectorPair",
    "DoubleClickPolicy",
    "EfficiencyPolicy",
    "EveMeasurement",
    "EveRecord",
    "PhotonPulse",
    "PostprocReport",
    "PostprocResult",
    "ProtocolKind",
    "QubitSymbol",
    "RandomStream",
    "RandomnessReport",
    "RoundRecord",
    "SessionConfig",
    "SessionResult",
    "SessionStats",
    "SiftedKeyPair",
    "SourceKind",
    "SourceModel",
    "StateKind",
    "__version__",
    "binary_entropy",
    "cascade_correct",
    "detect",
    "emit",
    "estimate_qber",
    "eve_information",
    "key_length",
    "measure",
    "mutual_information_bits",
    "parse_key",
    "postprocess",
    "pure_state",
    "randomness_tests",
    "run_session",
    "serialize_key",
    "toeplitz_amplify",
    "usd_success_prob",
]
