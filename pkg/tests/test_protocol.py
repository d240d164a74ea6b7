import random

import pytest

from basiskey.adversary import AttackStrategy
from basiskey.devices import DetectorPair, SourceKind, SourceModel
from basiskey.protocol import (
    ProtocolKind,
    SessionConfig,
    alice_key_bit_basiskey,
    alice_prepare,
    bob_key_bit_basiskey,
    run_session,
    sift_basiskey,
    sift_bb84,
)
from basiskey.qcore import Basis


def test_key_bit_maps():
    assert alice_key_bit_basiskey(Basis.Z) == 0
    assert alice_key_bit_basiskey(Basis.X) == 1
    assert bob_key_bit_basiskey(Basis.X) == 0
    assert bob_key_bit_basiskey(Basis.Z) == 1


def test_sift_rules():
    assert sift_basiskey(0, 1) and sift_basiskey(1, 0)
    assert not sift_basiskey(0, 0) and not sift_basiskey(1, 1)
    assert sift_bb84(Basis.Z, Basis.Z) and sift_bb84(Basis.X, Basis.X)
    assert not sift_bb84(Basis.Z, Basis.X)


def test_alice_prepare_uniform():
    rng = random.Random(11)
    n = 8000
    draws = [alice_prepare(ProtocolKind.BASISKEY, rng) for _ in range(n)]
    x_count = sum(b is Basis.X for b, _ in draws)
    ones = sum(bit for _, bit in draws)
    assert abs(x_count - n / 2) < 4 * (n / 4) ** 0.5
    assert abs(ones - n / 2) < 4 * (n / 4) ** 0.5


def test_config_validation():
    with pytest.raises(ValueError):
        SessionConfig(ProtocolKind.BASISKEY, n_rounds=0)
    with pytest.raises(ValueError):
        SessionConfig(ProtocolKind.BASISKEY, n_rounds=10, channel_loss_p=2)


class TestHonestSession:
    def _run(self, protocol, seed=0, n=4000):
        cfg = SessionConfig(protocol, n_rounds=n, rng_seed=seed)
        return run_session(cfg)

    def test_kept_rounds_agree_basiskey(self):
        # Ideal line, no attack: every kept round must produce equal key
        # bits from conjugate bases.
        result = self._run(ProtocolKind.BASISKEY)
        kept = [r for r in result.records if r.kept]
        assert kept
        for r in kept:
            assert r.alice_key_bit == r.bob_key_bit
            assert r.alice_basis is not r.bob_basis
            assert r.announced != r.alice_bit

    def test_kept_rounds_agree_bb84(self):
        result = self._run(ProtocolKind.BB84)
        kept = [r for r in result.records if r.kept]
        assert kept
        for r in kept:
            assert r.alice_key_bit == r.bob_key_bit == r.alice_bit
            assert r.alice_basis is r.bob_basis

    def test_sift_fraction_near_quarter(self):
        result = self._run(ProtocolKind.BASISKEY, n=40_000)
        frac = result.stats.n_kept / result.stats.n_rounds
        assert abs(frac - 0.25) < 4 * (0.25 * 0.75 / 40_000) ** 0.5

    def test_stats_consistency(self):
        for protocol in ProtocolKind:
            result = self._run(protocol, seed=3)
            s = result.stats
            assert s.n_click + s.n_no_click == s.n_rounds == 4000
            assert s.n_kept == len(result.keys)
            assert len(result.records) == s.n_rounds

    def test_no_errors_on_ideal_line(self):
        for protocol in ProtocolKind:
            assert self._run(protocol, seed=4).stats.n_key_errors == 0


def test_keys_match_records():
    cfg = SessionConfig(ProtocolKind.BASISKEY, n_rounds=2000, rng_seed=9)
    result = run_session(cfg)
    kept = [r for r in result.records if r.kept]
    assert bytes(r.alice_key_bit for r in kept) == result.keys.alice_bits
    assert bytes(r.bob_key_bit for r in kept) == result.keys.bob_bits


def test_replay_is_deterministic():
    cfg = SessionConfig(
        ProtocolKind.BASISKEY,
        n_rounds=3000,
        channel_depolarize_p="1/20",
        attack=AttackStrategy.intercept_resend(),
        rng_seed=42,
    )
    a = run_session(cfg)
    b = run_session(cfg)
    assert a.keys.alice_bits == b.keys.alice_bits
    assert a.keys.bob_bits == b.keys.bob_bits
    assert a.stats == b.stats


def test_seed_changes_transcript():
    base = dict(protocol=ProtocolKind.BASISKEY, n_rounds=3000)
    a = run_session(SessionConfig(rng_seed=1, **base))
    b = run_session(SessionConfig(rng_seed=2, **base))
    assert a.keys.alice_bits != b.keys.alice_bits


def test_keep_records_off():
    cfg = SessionConfig(ProtocolKind.BASISKEY, n_rounds=500, rng_seed=5)
    result = run_session(cfg, keep_records=False)
    assert result.records is None
    # counters survive either way
    assert result.stats.n_rounds == 500
    assert run_session(cfg).stats == result.stats


def test_loss_reduces_clicks():
    cfg = SessionConfig(
        ProtocolKind.BASISKEY, n_rounds=20_000, channel_loss_p="1/2", rng_seed=6
    )
    s = run_session(cfg, keep_records=False).stats
    assert abs(s.n_no_click - 10_000) < 4 * (20_000 * 0.25) ** 0.5


def test_depolarization_causes_key_errors():
    cfg = SessionConfig(
        ProtocolKind.BASISKEY,
        n_rounds=40_000,
        channel_depolarize_p="1/49",
        rng_seed=7,
    )
    s = run_session(cfg, keep_records=False).stats
    qber = s.n_key_errors / s.n_kept
    # depolarize 1/49 -> QBER 1/50 on kept rounds
    assert abs(qber - 0.02) < 4 * (0.02 * 0.98 / s.n_kept) ** 0.5


def test_multiphoton_source_runs():
    cfg = SessionConfig(
        ProtocolKind.BASISKEY,
        n_rounds=2000,
        source=SourceModel(SourceKind.WEAK_COHERENT, mu=0.5),
        rng_seed=8,
    )
    s = run_session(cfg, keep_records=False).stats
    assert s.n_no_click > 0  # vacuum pulses happen at mu=0.5
    assert s.n_kept > 0


def test_detector_override_respects_config():
    cfg = SessionConfig(
        ProtocolKind.BASISKEY,
        n_rounds=5000,
        detectors=DetectorPair(eta0="1/2", eta1="1/2"),
        rng_seed=10,
    )
    s = run_session(cfg, keep_records=False).stats
    assert abs(s.n_no_click - 2500) < 4 * (5000 * 0.25) ** 0.5
