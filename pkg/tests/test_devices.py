import math
import random
from fractions import Fraction

import pytest

from basiskey.devices import (
    CLICK0_EVENT,
    CLICK1_EVENT,
    EMPTY_PULSE,
    NO_CLICK_EVENT,
    DetectionOutcome,
    DetectorPair,
    DoubleClickPolicy,
    PhotonPulse,
    SourceKind,
    SourceModel,
    as_probability,
    detect,
    emit,
    poisson_sample,
)
from basiskey.qcore import MIXED, VACUUM, Basis, pure_state


class TestAsProbability:
    def test_decimal_float_is_exact(self):
        # str() round-trip keeps 0.2 as 1/5, not the binary float
        assert as_probability(0.2, "p") == Fraction(1, 5)

    def test_fraction_string(self):
        assert as_probability("1/3", "p") == Fraction(1, 3)

    def test_passthrough(self):
        assert as_probability(Fraction(3, 7), "p") == Fraction(3, 7)

    def test_range_error_names_parameter(self):
        with pytest.raises(ValueError, match="eta0"):
            as_probability(1.2, "eta0")
        with pytest.raises(ValueError, match="dark"):
            as_probability(-0.1, "dark")


def test_source_model_validation():
    SourceModel(SourceKind.WEAK_COHERENT, mu=0.5)
    SourceModel(SourceKind.FIXED_NUMBER, n=3)
    with pytest.raises(ValueError):
        SourceModel(SourceKind.WEAK_COHERENT, mu=-1.0)
    with pytest.raises(ValueError):
        SourceModel(SourceKind.FIXED_NUMBER, n=0)


def test_pulse_vacuum_iff_empty():
    assert EMPTY_PULSE.n == 0
    assert EMPTY_PULSE.state is VACUUM
    with pytest.raises(ValueError):
        PhotonPulse(n=-1, state=VACUUM)
    with pytest.raises(ValueError):
        PhotonPulse(n=0, state=pure_state(Basis.Z, 0))
    with pytest.raises(ValueError):
        PhotonPulse(n=2, state=VACUUM)


def test_emit_single_photon():
    rng = random.Random(0)
    src = SourceModel(SourceKind.SINGLE_PHOTON)
    pulse = emit(src, Basis.X, 0, rng)
    assert pulse.n == 1
    assert pulse.state is pure_state(Basis.X, 0)


def test_emit_fixed_number():
    rng = random.Random(0)
    src = SourceModel(SourceKind.FIXED_NUMBER, n=3)
    pulse = emit(src, Basis.Z, 1, rng)
    assert pulse.n == 3
    assert pulse.state is pure_state(Basis.Z, 1)


def test_emit_weak_vacuum_collapses_to_empty():
    rng = random.Random(0)
    src = SourceModel(SourceKind.WEAK_COHERENT, mu=1e-9)
    pulse = emit(src, Basis.Z, 1, rng)
    assert pulse is EMPTY_PULSE or pulse.n >= 1


def test_poisson_sample_matches_pmf():
    rng = random.Random(7)
    mu = 0.5
    n = 200_000
    counts = {}
    for _ in range(n):
        k = poisson_sample(mu, rng)
        counts[k] = counts.get(k, 0) + 1
    for k in (0, 1, 2):
        p = math.exp(-mu) * mu**k / math.factorial(k)
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(counts.get(k, 0) - n * p) < 4 * sigma


class TestDetectorPair:
    def test_float_mirrors(self):
        d = DetectorPair(eta0=0.2, eta1="1/3")
        assert d.eta0 == Fraction(1, 5)
        assert d.eta1 == Fraction(1, 3)
        assert d._eta0_f == pytest.approx(0.2)
        assert d._eta1_f == pytest.approx(1 / 3)

    def test_ideal(self):
        d = DetectorPair.ideal()
        assert d.eta0 == 1 and d.eta1 == 1 and d.dark_prob == 0

    def test_validation(self):
        with pytest.raises(ValueError):
            DetectorPair(eta0=2, eta1=1)


def test_detect_empty_pulse_never_clicks_without_dark():
    rng = random.Random(1)
    ev = detect(EMPTY_PULSE, Basis.Z, DetectorPair.ideal(), rng)
    assert ev is NO_CLICK_EVENT
    assert ev.outcome is DetectionOutcome.NO_CLICK
    assert ev.bit is None


def test_detect_matched_basis_routes_to_stored_bit():
    rng = random.Random(2)
    d = DetectorPair.ideal()
    for bit, event in ((0, CLICK0_EVENT), (1, CLICK1_EVENT)):
        pulse = PhotonPulse(n=1, state=pure_state(Basis.Z, bit))
        assert detect(pulse, Basis.Z, d, rng) is event


def test_detect_mismatched_efficiencies_conjugate_split():
    # (eta0, eta1) = (1, 0.2), conjugate-basis photon:
    # P(bit 0) = 1/2, P(bit 1) = 1/10, P(no click) = 2/5
    rng = random.Random(3)
    d = DetectorPair(eta0=1, eta1=0.2)
    pulse = PhotonPulse(n=1, state=pure_state(Basis.Z, 0))
    n = 100_000
    tallies = {0: 0, 1: 0, None: 0}
    for _ in range(n):
        tallies[detect(pulse, Basis.X, d, rng).bit] += 1
    for key, p in ((0, 0.5), (1, 0.1), (None, 0.4)):
        assert abs(tallies[key] - n * p) < 4 * math.sqrt(n * p * (1 - p))


def test_dark_counts_fire_on_vacuum():
    rng = random.Random(4)
    d = DetectorPair(eta0=1, eta1=1, dark_prob=0.1)
    n = 50_000
    clicks = sum(
        detect(EMPTY_PULSE, Basis.Z, d, rng).outcome is not DetectionOutcome.NO_CLICK
        for _ in range(n)
    )
    # P(any click) = 1 - (1 - 0.1)^2 = 0.19
    p = 0.19
    assert abs(clicks - n * p) < 4 * math.sqrt(n * p * (1 - p))


def test_double_click_policies():
    # Two photons in conjugate basis with ideal detectors double-click often.
    rng = random.Random(5)
    d_assign = DetectorPair(eta0=1, eta1=1)
    d_discard = DetectorPair(eta0=1, eta1=1, double_click_policy=DoubleClickPolicy.DISCARD)
    pulse = PhotonPulse(n=2, state=pure_state(Basis.Z, 0))

    saw_double_assign = False
    for _ in range(200):
        ev = detect(pulse, Basis.X, d_assign, rng)
        if ev.double_click:
            saw_double_assign = True
            assert ev.outcome is DetectionOutcome.CLICK
            assert ev.bit in (0, 1)
    assert saw_double_assign

    saw_double_discard = False
    for _ in range(200):
        ev = detect(pulse, Basis.X, d_discard, rng)
        if ev.double_click:
            saw_double_discard = True
            assert ev.outcome is DetectionOutcome.NO_CLICK
            assert ev.bit is None
    assert saw_double_discard


def test_detect_mixed_state_is_unbiased():
    rng = random.Random(6)
    d = DetectorPair.ideal()
    pulse = PhotonPulse(n=1, state=MIXED)
    n = 20_000
    ones = sum(detect(pulse, Basis.Z, d, rng).bit for _ in range(n))
    assert abs(ones - n / 2) < 4 * math.sqrt(n / 4)
