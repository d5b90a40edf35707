"""Classical post-processing of measured outcomes and success scoring.

Four nested categories are scored for each measured integer j:

* shor: the textbook procedure succeeds and its theoretical conditions hold
  (the largest convergent denominator below N equals the true order, the
  order is even, and a^(r/2) is not -1 mod N).
* lucky: some single convergent denominator of this outcome yields a factor
  even though a textbook condition fails; no multiplier search is allowed.
* extended: a convergent-times-multiplier sweep (plus a direct gcd probe per
  denominator) yields a factor; a strict superset of the two above.
* peak: j lies within 1/2 of an integer multiple of 2^t / r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .numtheory import Semiprime, convergents
from .shor import CircuitParams, MeasurementRecord

__all__ = [
    "OutcomeClassification",
    "basic_denominator",
    "extract_factor",
    "extended_postprocess",
    "classify",
    "synthesize_outcome",
]

DEFAULT_MULTIPLIER_BOUND = 64


@dataclass(frozen=True)
class OutcomeClassification:
    shor_success: bool
    lucky_success: bool
    extended_success: bool
    peak: bool
    recovered_factor: Optional[int]
    r_basic: int

    def __post_init__(self):
        if self.recovered_factor is not None:
            assert 1 < self.recovered_factor

    @property
    def shor_or_lucky(self) -> bool:
        return self.shor_success or self.lucky_success


def basic_denominator(j: int, t: int, n: int) -> int:
    """Largest continued-fraction denominator of j/2^t strictly below n."""
    best = 1
    for c in convergents(j, t):
        if c.r < n:
            best = c.r
    return best


def extract_factor(a: int, r: int, n: int) -> Optional[int]:
    """gcd(a^floor(r/2) +- 1, N) if either is a nontrivial divisor.

    Returns the smaller factor when both sides hit.
    """
    half = r // 2
    if half == 0:
        return None
    x = pow(a, half, n)
    hits = [g for g in (math.gcd(x - 1, n), math.gcd(x + 1, n)) if 1 < g < n]
    return min(hits) if hits else None


def extended_postprocess(j: int, t: int, a: int, n: int,
                         c_max: int = DEFAULT_MULTIPLIER_BOUND) -> Optional[int]:
    """Convergent-times-multiplier sweep over candidate orders.

    For each convergent denominator r' < n in increasing order: first probe
    gcd(a^r' - 1, n), then try extract_factor on c * r' for c = 1..c_max
    (bounded by c * r' <= c_max * n). Returns the first nontrivial factor.

    The denominator r' = 1 is excluded: it appears in every expansion and
    carries no information from the measurement, and sweeping its multiples
    would amount to blind order guessing (it would make j = 0 "succeed" on
    small moduli).
    """
    if c_max < 1:
        raise ValueError("c_max must be >= 1")
    seen = set()
    for conv in convergents(j, t):
        r = conv.r
        if r >= n or r in seen or r == 1:
            continue
        seen.add(r)
        g = math.gcd(pow(a, r, n) - 1, n)
        if 1 < g < n:
            return g
        for c in range(1, c_max + 1):
            if c * r > c_max * n:
                break
            f = extract_factor(a, c * r, n)
            if f is not None:
                return f
    return None


def _sweep_convergents(j: int, t: int, a: int, n: int) -> Optional[int]:
    """Factor from any single convergent denominator, no multiplier search."""
    seen = set()
    for conv in convergents(j, t):
        r = conv.r
        if r >= n or r in seen:
            continue
        seen.add(r)
        f = extract_factor(a, r, n)
        if f is not None:
            return f
    return None


def is_peak(j: int, t: int, true_order: int) -> bool:
    """Whether j is within 1/2 (inclusive) of a multiple of 2^t / r."""
    size = 1 << t
    d = (j * true_order) % size
    return 2 * min(d, size - d) <= true_order


def classify(record: MeasurementRecord, params: CircuitParams,
             true_order: int) -> OutcomeClassification:
    """Score one measured outcome against the known true order."""
    n = params.semiprime.n
    a = params.a
    if pow(a, true_order, n) != 1:
        raise ValueError("true_order inconsistent with a^r = 1 mod N")
    j, t = record.j, params.t

    r_basic = basic_denominator(j, t, n)
    basic_factor = extract_factor(a, r_basic, n)
    conditions = (
        r_basic == true_order
        and true_order % 2 == 0
        and pow(a, true_order // 2, n) != n - 1
    )
    shor = basic_factor is not None and conditions

    sweep_factor = basic_factor if shor else _sweep_convergents(j, t, a, n)
    lucky = sweep_factor is not None and not shor

    extended_factor = sweep_factor if sweep_factor is not None else \
        extended_postprocess(j, t, a, n)

    factor = basic_factor if shor else sweep_factor
    if factor is None:
        factor = extended_factor

    return OutcomeClassification(
        shor_success=shor,
        lucky_success=lucky,
        extended_success=extended_factor is not None,
        peak=is_peak(j, t, true_order),
        recovered_factor=factor,
        r_basic=r_basic,
    )


def synthesize_outcome(k: int, true_order: int, t: int) -> int:
    """Idealised peak outcome j = round(k * 2^t / r) mod 2^t."""
    if not 0 <= k < true_order:
        raise ValueError("k must satisfy 0 <= k < r")
    x = k << t
    return ((2 * x + true_order) // (2 * true_order)) % (1 << t)
