import math
import random

import pytest

from qfactor.numtheory import Semiprime, multiplicative_order
from qfactor.postproc import (
    basic_denominator,
    classify,
    extended_postprocess,
    extract_factor,
    is_peak,
    synthesize_outcome,
)
from qfactor.shor import CircuitParams, MeasurementRecord

S15 = Semiprime(15, 3, 5)
RECORD = Semiprime(549755813701, 712321, 771781)


def record_for(j, t):
    bits = tuple((j >> k) & 1 for k in range(t))
    return MeasurementRecord(bits, j, 0)


def test_basic_denominator_examples():
    assert basic_denominator(192, 8, 15) == 4
    assert basic_denominator(0, 8, 15) == 1
    assert basic_denominator(85, 8, 15) == 3


def test_extract_factor_examples():
    assert extract_factor(7, 4, 15) == 3  # gcd(48,15)=3, gcd(50,15)=5 -> smaller
    assert extract_factor(7, 1, 15) is None
    # even order with a^(r/2) = -1: both gcds trivial
    s = Semiprime(21, 3, 7)
    for a in range(2, 21):
        if math.gcd(a, 21) != 1:
            continue
        r = multiplicative_order(a, s)
        if r % 2 == 0 and pow(a, r // 2, 21) == 20:
            assert extract_factor(a, r, 21) is None
            break
    else:
        pytest.fail("no witness base found")


def test_extract_factor_returns_divisor():
    for a in (2, 7, 8, 13):
        for r in range(1, 20):
            f = extract_factor(a, r, 15)
            if f is not None:
                assert 15 % f == 0 and 1 < f < 15


def test_classify_shor_success_example():
    params = CircuitParams(S15, 7, 8, 0.0, seed=0)
    out = classify(record_for(192, 8), params, true_order=4)
    assert out.shor_success and out.peak
    assert out.recovered_factor in (3, 5)
    assert out.r_basic == 4
    assert out.shor_or_lucky and out.extended_success


def test_classify_zero_outcome():
    params = CircuitParams(S15, 7, 8, 0.0, seed=0)
    out = classify(record_for(0, 8), params, true_order=4)
    assert not out.shor_success
    assert out.peak  # k = 0 is always a peak
    assert out.r_basic == 1


def test_classify_a14_negative_case():
    # a = 14 = -1 mod 15: r* = 2, a^(r*/2) = -1: shor conditions fail
    params = CircuitParams(S15, 14, 8, 0.0, seed=0)
    out = classify(record_for(128, 8), params, true_order=2)
    assert not out.shor_success
    assert out.r_basic == 2


def test_classify_rejects_bad_truth():
    params = CircuitParams(S15, 7, 8, 0.0, seed=0)
    with pytest.raises(ValueError):
        classify(record_for(0, 8), params, true_order=3)


def test_category_nesting_exhaustive_n15():
    # nesting shor => shor+lucky => extended over every outcome and base
    for a in (2, 4, 7, 8, 11, 13, 14):
        s = S15
        params = CircuitParams(s, a, 8, 0.0, seed=0)
        r = multiplicative_order(a, s)
        for j in range(256):
            out = classify(record_for(j, 8), params, r)
            if out.shor_success:
                assert out.shor_or_lucky
            if out.shor_or_lucky:
                assert out.extended_success
            if out.recovered_factor is not None:
                assert s.n % out.recovered_factor == 0


def test_extended_superset_and_multiplier_case():
    # construct j whose basic denominator is r*/2: recovery needs c = 2
    s = Semiprime(21, 3, 7)
    a = 2  # order 6 mod 21
    r_star = multiplicative_order(a, s)
    assert r_star == 6
    t = 10
    # k/r* = 2/6 = 1/3: convergents of round(2^t/3)/2^t give denominator 3
    j = synthesize_outcome(2, 6, t)
    assert basic_denominator(j, t, 21) == 3
    f = extended_postprocess(j, t, a, 21)
    assert f in (3, 7)


def test_extended_j_zero_returns_nothing():
    assert extended_postprocess(0, 8, 7, 15) is None


def test_synthesize_outcome_examples():
    assert synthesize_outcome(3, 4, 8) == 192
    assert synthesize_outcome(1, 6, 10) == 171
    assert synthesize_outcome(0, 5, 8) == 0
    with pytest.raises(ValueError):
        synthesize_outcome(5, 5, 8)


def test_peak_definition():
    # peaks of r = 6, t = 10: within 1/2 of k*1024/6
    for j in range(1024):
        expected = any(abs(j - k * 1024 / 6) <= 0.5 for k in range(7))
        assert is_peak(j, 10, 6) == expected


def test_synthesized_peaks_recover_order():
    # classical guarantee: gcd(k, r*) = 1 and t = 2*bits(N) recovers r* exactly
    rng = random.Random(7)
    for s in (Semiprime(15, 3, 5), Semiprime(35, 5, 7), Semiprime(143, 11, 13)):
        t = 2 * s.bit_length_n
        for a in range(2, s.n):
            if math.gcd(a, s.n) != 1:
                continue
            r = multiplicative_order(a, s)
            ks = [k for k in range(1, r) if math.gcd(k, r) == 1]
            for k in rng.sample(ks, min(3, len(ks))):
                j = synthesize_outcome(k, r, t)
                assert basic_denominator(j, t, s.n) == r


def test_record_scale_end_to_end():
    # for the 39-bit record semiprime: synthesized peak outcomes recover a
    # factor whenever the theoretical conditions hold
    rng = random.Random(123)
    t = 2 * RECORD.bit_length_n
    n = RECORD.n
    qualifying = 0
    for _ in range(40):
        a = rng.randrange(2, n)
        if math.gcd(a, n) != 1:
            continue
        r = multiplicative_order(a, RECORD)
        if r % 2 != 0 or pow(a, r // 2, n) == n - 1:
            continue
        k = rng.randrange(1, r)
        while math.gcd(k, r) != 1:
            k = rng.randrange(1, r)
        qualifying += 1
        j = synthesize_outcome(k, r, t)
        assert basic_denominator(j, t, n) == r
        assert extract_factor(a, r, n) in (712321, 771781)
    assert qualifying >= 10
