"""Classical postprocessing: QBER estimation, Cascade-style error
correction, Toeplitz privacy amplification, key-length accounting, and
raw-key randomness tests.

The phase error rate has no proven relation to the bit error rate for
this protocol, so every key-length figure is labeled with the assumption
used; the default is the conservative placeholder e_p = e_b.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .qcore import RandomStream


def _as_bits(data: Iterable[int], name: str) -> bytes:
    out = bytes(data)
    if any(b > 1 for b in out):
        raise ValueError(f"{name} must contain only 0/1 values")
    return out


@dataclass(frozen=True)
class SiftedKeyPair:
    """Alice's and Bob's aligned sifted keys (equal length, 0/1 per byte)."""

    alice_bits: bytes
    bob_bits: bytes

    def __post_init__(self) -> None:
        object.__setattr__(self, "alice_bits", _as_bits(self.alice_bits, "alice_bits"))
        object.__setattr__(self, "bob_bits", _as_bits(self.bob_bits, "bob_bits"))
        if len(self.alice_bits) != len(self.bob_bits):
            raise ValueError("sifted keys must have equal length")

    def __len__(self) -> int:
        return len(self.alice_bits)


@dataclass(frozen=True)
class RandomnessReport:
    monobit_z: float
    runs_z: float
    passed: bool

    def as_dict(self) -> dict:
        return {"monobit_z": self.monobit_z, "runs_z": self.runs_z, "pass": self.passed}


@dataclass(frozen=True)
class PostprocReport:
    n_sifted: int
    qber_estimate: float
    bits_disclosed_estimation: int
    ec_leakage_bits: int
    ec_success: bool
    phase_error_used: float
    final_key_length: int
    randomness: Optional[RandomnessReport]
    f_ec_effective: float
    n_after_estimation: int


@dataclass(frozen=True)
class PostprocResult:
    report: PostprocReport
    alice_final: bytes
    bob_final: bytes


def binary_entropy(p: float) -> float:
    """H2(p) in bits, with the 0*log(0) = 0 convention."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"entropy argument must lie in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def key_length(n: int, e_b: float, e_p: float, f_ec: float = 1.0) -> int:
    """Final key length floor(n * (1 - H2(e_p) - f_ec * H2(e_b))), >= 0.

    0 means abort.  f_ec >= 1 is the error-correction inefficiency relative
    to the Shannon limit.
    """
    if n < 1:
        raise ValueError("key length accounting requires n >= 1")
    for name, value in (("e_b", e_b), ("e_p", e_p)):
        if not 0.0 <= value <= 0.5:
            raise ValueError(f"{name} must lie in [0, 0.5], got {value!r}")
    if f_ec < 1.0:
        raise ValueError("f_ec must be >= 1")
    rate = 1.0 - binary_entropy(e_p) - f_ec * binary_entropy(e_b)
    return max(0, math.floor(n * rate))


def estimate_qber(
    keys: SiftedKeyPair, sample_fraction: float, rng: RandomStream
) -> Tuple[float, Tuple[int, ...]]:
    """Disclose a random sample of positions and return the disagreement rate.

    The sampled positions are returned so callers can strike them from the
    key; disclosed bits are never reused.  sample_fraction may be 1.0, which
    discloses everything (useful for exact fixtures, fatal for key rate).
    """
    n = len(keys)
    if n < 10:
        raise ValueError("QBER estimation needs at least 10 sifted bits")
    if not 0.0 < sample_fraction <= 1.0:
        raise ValueError("sample_fraction must lie in (0, 1]")
    count = min(n, math.ceil(sample_fraction * n))
    indices = tuple(sorted(rng.sample(range(n), count)))
    mismatches = sum(1 for i in indices if keys.alice_bits[i] != keys.bob_bits[i])
    return mismatches / count, indices


def remove_indices(keys: SiftedKeyPair, indices: Sequence[int]) -> SiftedKeyPair:
    """Strike disclosed positions from both keys."""
    drop = set(indices)
    alice = bytes(b for i, b in enumerate(keys.alice_bits) if i not in drop)
    bob = bytes(b for i, b in enumerate(keys.bob_bits) if i not in drop)
    return SiftedKeyPair(alice, bob)


def _parity(bits: Sequence[int], indices: Sequence[int]) -> int:
    acc = 0
    for i in indices:
        acc ^= bits[i]
    return acc


def _binary_search_error(
    alice: Sequence[int], bob: Sequence[int], block: Sequence[int]
) -> Tuple[int, int]:
    """Locate one error inside a parity-mismatched block.

    Returns (position, parities_disclosed).  Each split discloses the parity
    of the left half, i.e. ceil(log2(len)) disclosures down to a singleton.
    """
    lo, hi = 0, len(block)
    disclosed = 0
    while hi - lo > 1:
        mid = lo + (hi - lo + 1) // 2
        half = block[lo:mid]
        disclosed += 1
        if _parity(alice, half) != _parity(bob, half):
            hi = mid
        else:
            lo = mid
    return block[lo], disclosed


def cascade_correct(
    keys: SiftedKeyPair,
    passes: int,
    initial_block: int,
    rng: RandomStream,
) -> Tuple[bytes, int]:
    """Cascade reconciliation with constant block size across passes.

    Each pass partitions a fresh shuffle of the positions into blocks of
    `initial_block`, discloses one parity per block, and binary-searches any
    mismatched block.  A corrected bit re-opens every already-disclosed
    block that contains it (the cascading step), which is what drives the
    residual error rate down.  Returns Bob's corrected key and the count of
    every parity disclosed.  Residual errors are possible; callers verify.
    """
    if passes < 1:
        raise ValueError("at least one pass is required")
    if initial_block < 2:
        raise ValueError("block size must be at least 2")
    alice = keys.alice_bits
    bob = bytearray(keys.bob_bits)
    n = len(bob)
    if n == 0:
        return bytes(), 0
    block_size = min(initial_block, n)
    leakage = 0
    partitions: List[List[List[int]]] = []  # per pass: list of blocks
    block_of: List[List[int]] = []  # per pass: position -> block index
    checked: List[List[bool]] = []  # per pass: block parity disclosed yet?

    def run_search(pass_idx: int, blk_idx: int, pending: set) -> None:
        nonlocal leakage
        block = partitions[pass_idx][blk_idx]
        pos, disclosed = _binary_search_error(alice, bob, block)
        leakage += disclosed
        bob[pos] ^= 1
        for q in range(len(partitions)):
            other = block_of[q][pos]
            if checked[q][other]:
                pending.add((q, other))

    for pass_idx in range(passes):
        order = list(range(n))
        if pass_idx > 0:
            rng.shuffle(order)
        blocks = [order[i : i + block_size] for i in range(0, n, block_size)]
        partitions.append(blocks)
        mapping = [0] * n
        for b_idx, block in enumerate(blocks):
            for pos in block:
                mapping[pos] = b_idx
        block_of.append(mapping)
        checked.append([False] * len(blocks))

        pending: set = set()
        for b_idx, block in enumerate(blocks):
            leakage += 1  # the block parity itself
            checked[pass_idx][b_idx] = True
            if _parity(alice, block) != _parity(bob, block):
                run_search(pass_idx, b_idx, pending)
            # Drain cascaded re-checks before moving on; parities of already
            # disclosed blocks are recomputed by Bob at no extra leakage.
            while pending:
                q, other = pending.pop()
                other_block = partitions[q][other]
                if _parity(alice, other_block) != _parity(bob, other_block):
                    run_search(q, other, pending)
    return bytes(bob), leakage


def verification_hash(bits: Sequence[int]) -> str:
    """Short hash both sides can compare to detect residual errors."""
    return hashlib.sha256(bytes(bits)).hexdigest()[:16]


def toeplitz_amplify(key: Sequence[int], seed: Sequence[int], out_len: int) -> bytes:
    """Hash `key` down to `out_len` bits with the Toeplitz matrix built from
    `seed` (length len(key) + out_len - 1).  Output bit i is the GF(2) inner
    product of the key with the diagonal-constant row i."""
    key_bits = _as_bits(key, "key")
    seed_bits = _as_bits(seed, "seed")
    n = len(key_bits)
    if out_len < 0 or out_len > n:
        raise ValueError("output length must lie in [0, len(key)]")
    if out_len == 0:
        return b""
    if len(seed_bits) != n + out_len - 1:
        raise ValueError(
            f"seed must have length len(key) + out_len - 1 = {n + out_len - 1}, got {len(seed_bits)}"
        )
    # Row i of the matrix is seed[n-1+i], seed[n-2+i], ..., seed[i], so the
    # outputs are a slice of the full key*seed convolution, reduced mod 2.
    conv = np.convolve(
        np.frombuffer(key_bits, dtype=np.uint8).astype(np.int64),
        np.frombuffer(seed_bits, dtype=np.uint8).astype(np.int64),
    )
    return bytes(int(v) & 1 for v in conv[n - 1 : n - 1 + out_len])


def randomness_tests(bits: Sequence[int]) -> RandomnessReport:
    """Monobit and runs z-statistics; pass iff both |z| < 3.

    Runs statistic is conditioned on the observed ones-fraction pi:
    z = (V - 2*n*pi*(1-pi)) / (2*sqrt(2n)*pi*(1-pi)) with V the run count.
    A constant string has no defined runs statistic; it reports infinity
    and fails.
    """
    data = _as_bits(bits, "bits")
    n = len(data)
    if n < 100:
        raise ValueError("randomness tests need at least 100 bits")
    ones = sum(data)
    monobit_z = (2 * ones - n) / math.sqrt(n)
    pi = ones / n
    if pi == 0.0 or pi == 1.0:
        runs_z = math.inf
    else:
        runs = 1 + sum(1 for i in range(n - 1) if data[i] != data[i + 1])
        expected = 2.0 * n * pi * (1.0 - pi)
        runs_z = (runs - expected) / (2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi))
    passed = abs(monobit_z) < 3.0 and abs(runs_z) < 3.0
    return RandomnessReport(monobit_z, runs_z, passed)


def default_block_size(e_b: float, n: int) -> int:
    """Standard Cascade heuristic ceil(0.73 / e_b), clamped to [4, n/2]."""
    if e_b <= 0.0:
        return max(4, min(n // 2, n))
    raw = math.ceil(0.73 / e_b)
    return max(4, min(raw, max(4, n // 2)))


def postprocess(
    keys: SiftedKeyPair,
    rng: RandomStream,
    sample_fraction: float = 0.1,
    passes: int = 4,
    initial_block: Optional[int] = None,
    e_p: Optional[float] = None,
    phase_error_fn: Optional[Callable[[float], float]] = None,
    run_randomness: bool = True,
) -> PostprocResult:
    """Full pipeline: estimation -> Cascade -> accounting -> amplification.

    The effective f_ec is back-computed from the actual Cascade leakage so
    that the reported final length is exactly key_length(n', e_b, e_p, f_ec).
    e_p defaults to the estimated e_b (placeholder: no proven relation);
    phase_error_fn, when given, maps the estimate to an e_p instead.
    """
    n_sifted = len(keys)
    e_b_hat, disclosed = estimate_qber(keys, sample_fraction, rng)
    working = remove_indices(keys, disclosed)
    n_work = len(working)
    if n_work == 0:
        raise ValueError("estimation consumed the whole key; lower sample_fraction")

    if e_b_hat == 0.0:
        # Nothing to reconcile; a hash comparison still guards the claim.
        corrected = working.bob_bits
        leakage = 0
    else:
        block = initial_block if initial_block is not None else default_block_size(e_b_hat, n_work)
        corrected, leakage = cascade_correct(working, passes, block, rng)
    ec_success = verification_hash(corrected) == verification_hash(working.alice_bits)

    if phase_error_fn is not None:
        e_p_used = phase_error_fn(e_b_hat)
    elif e_p is not None:
        e_p_used = e_p
    else:
        e_p_used = e_b_hat

    h_eb = binary_entropy(min(e_b_hat, 0.5))
    if leakage > 0 and h_eb > 0.0:
        f_ec_eff = max(1.0, leakage / (n_work * h_eb))
    else:
        f_ec_eff = 1.0
    final_len = key_length(n_work, min(e_b_hat, 0.5), min(e_p_used, 0.5), f_ec_eff)

    if final_len > 0:
        seed_len = n_work + final_len - 1
        pa_seed = bytes((rng.getrandbits(1)) for _ in range(seed_len))
        alice_final = toeplitz_amplify(working.alice_bits, pa_seed, final_len)
        bob_final = toeplitz_amplify(corrected, pa_seed, final_len)
    else:
        alice_final = b""
        bob_final = b""

    randomness = None
    if run_randomness and n_sifted >= 100:
        randomness = randomness_tests(keys.alice_bits)

    report = PostprocReport(
        n_sifted=n_sifted,
        qber_estimate=e_b_hat,
        bits_disclosed_estimation=len(disclosed),
        ec_leakage_bits=leakage,
        ec_success=ec_success,
        phase_error_used=e_p_used,
        final_key_length=final_len,
        randomness=randomness,
        f_ec_effective=f_ec_eff,
        n_after_estimation=n_work,
    )
    return PostprocResult(report=report, alice_final=alice_final, bob_final=bob_final)


def serialize_key(bits: Sequence[int]) -> str:
    """Wire format `len:<n>;hex:<...>`, little-endian bit order per byte."""
    data = _as_bits(bits, "key")
    n = len(data)
    out = bytearray((n + 7) // 8)
    for i, b in enumerate(data):
        if b:
            out[i >> 3] |= 1 << (i & 7)
    return f"len:{n};hex:{out.hex()}"


def parse_key(text: str) -> bytes:
    """Inverse of serialize_key."""
    try:
        len_part, hex_part = text.split(";", 1)
        if not len_part.startswith("len:") or not hex_part.startswith("hex:"):
            raise ValueError
        n = int(len_part[4:])
        raw = bytes.fromhex(hex_part[4:])
    except ValueError as exc:
        raise ValueError(f"malformed key string: {text!r}") from exc
    if n < 0 or len(raw) != (n + 7) // 8:
        raise ValueError(f"key length {n} does not match payload of {len(raw)} bytes")
    if n % 8 and raw and raw[-1] >> (n % 8):
        raise ValueError("padding bits beyond the declared length must be zero")
    return bytes((raw[i >> 3] >> (i & 7)) & 1 for i in range(n))
