"""Exact integer arithmetic and number-theoretic primitives.

Everything here is pure and deterministic; random generation takes an
explicit seed. Python integers are arbitrary precision, so the documented
operating range (N below 2^62, factors below 2^32 for the order oracle) is a
contract with callers rather than a hardware limit.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "Semiprime",
    "Convergent",
    "gcd",
    "mod_pow",
    "convergents",
    "is_prime",
    "random_prime",
    "random_semiprime",
    "multiplicative_order",
    "factorize",
]


@dataclass(frozen=True)
class Semiprime:
    """An odd semiprime with known factors, the ground truth for scoring.

    p and q may be equal; both must be odd primes > 2 and p*q = n.
    """

    n: int
    p: int
    q: int

    def __post_init__(self):
        if self.p * self.q != self.n:
            raise ValueError(f"{self.p} * {self.q} != {self.n}")
        if self.n % 2 == 0:
            raise ValueError("semiprime must be odd")
        if self.p <= 2 or self.q <= 2:
            raise ValueError("factors must be odd primes > 2")
        if not (is_prime(self.p) and is_prime(self.q)):
            raise ValueError("factors must be prime")

    @property
    def bit_length_n(self) -> int:
        return self.n.bit_length()

    @property
    def l_p(self) -> int:
        return self.p.bit_length()

    @property
    def l_q(self) -> int:
        return self.q.bit_length()


@dataclass(frozen=True)
class Convergent:
    """One continued-fraction convergent k/r in lowest terms."""

    k: int
    r: int

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("denominator must be positive")

    def as_fraction(self) -> Fraction:
        return Fraction(self.k, self.r)


def gcd(a: int, b: int) -> int:
    """Greatest common divisor (Euclidean semantics); gcd(0, b) = b."""
    return math.gcd(a, b)


def mod_pow(a: int, e: int, n: int) -> int:
    """a^e mod n by square-and-multiply, O(log e) multiplications."""
    if n < 1:
        raise ValueError("modulus must be positive")
    return pow(a, e, n)


def convergents(j: int, t: int) -> list[Convergent]:
    """All continued-fraction convergents of j / 2^t.

    Denominators strictly increase and the last convergent equals j/2^t
    exactly. For j = 0 the single convergent is 0/1.
    """
    if t < 1:
        raise ValueError("t must be positive")
    if not 0 <= j < (1 << t):
        raise ValueError("j out of range")
    hs: list[Convergent] = []
    # recurrence p_k = a_k p_{k-1} + p_{k-2} with p_{-1}=1, p_{-2}=0,
    # q_{-1}=0, q_{-2}=1; each p_k/q_k is automatically in lowest terms
    pm1, pm2 = 1, 0
    qm1, qm2 = 0, 1
    a, b = j, 1 << t
    while True:
        quot, rem = divmod(a, b)
        pk = quot * pm1 + pm2
        qk = quot * qm1 + qm2
        hs.append(Convergent(pk, qk))
        if rem == 0:
            break
        pm2, pm1 = pm1, pk
        qm2, qm1 = qm1, qk
        a, b = b, rem
    return hs


# Deterministic Miller-Rabin witness set, correct for all n < 3.3 * 10^24,
# which covers the full supported range.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic primality test (Miller-Rabin with fixed witnesses)."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = pow(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


def random_prime(bits: int, rng: random.Random) -> int:
    """Uniform odd prime with exactly `bits` bits (top and bottom bit set)."""
    if bits < 3:
        raise ValueError("need bits >= 3 for an odd prime > 2 with fixed top bit")
    top = 1 << (bits - 1)
    while True:
        cand = top | (rng.getrandbits(bits - 2) << 1) | 1 if bits > 2 else top | 1
        if is_prime(cand):
            return cand


def random_semiprime(l_p: int, l_q: int, seed: int) -> Semiprime:
    """Random semiprime with factor bit lengths exactly (l_p, l_q).

    Factors are drawn uniformly from the odd primes of the requested bit
    length; p = q is allowed. Deterministic given the seed.
    """
    rng = random.Random(seed)
    p = random_prime(l_p, rng)
    q = random_prime(l_q, rng)
    return Semiprime(p * q, p, q)


def factorize(n: int) -> dict[int, int]:
    """Prime factorisation by trial division, {prime: exponent}.

    Intended for n up to ~2^32 (trial division to sqrt n); larger inputs work
    but may be slow.
    """
    if n < 1:
        raise ValueError("n must be positive")
    out: dict[int, int] = {}
    for d in (2, 3):
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
    d = 5
    while d * d <= n:
        for dd in (d, d + 2):
            while n % dd == 0:
                out[dd] = out.get(dd, 0) + 1
                n //= dd
        d += 6
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def multiplicative_order(a: int, s: Semiprime) -> int:
    """Smallest r >= 1 with a^r = 1 mod n, using factor knowledge.

    Factors lambda(n) = lcm(p-1, q-1) through the factorisations of p-1 and
    q-1 (trial division; fine for factors below 2^32), then peels prime
    powers off the exponent.
    """
    n = s.n
    a %= n
    if math.gcd(a, n) != 1:
        raise ValueError(f"gcd({a}, {n}) != 1: order undefined")
    fac_p = factorize(s.p - 1)
    fac_q = factorize(s.q - 1) if s.q != s.p else {}
    lam_fac = dict(fac_p)
    for f, e in fac_q.items():
        lam_fac[f] = max(lam_fac.get(f, 0), e)
    # lambda(p*q) = lcm(p-1, q-1); for p = q, lambda(p^2) = p(p-1)
    if s.p == s.q:
        lam_fac[s.p] = lam_fac.get(s.p, 0) + 1
    lam = 1
    for f, e in lam_fac.items():
        lam *= f**e
    if pow(a, lam, n) != 1:
        raise ValueError("carmichael exponent inconsistent with inputs")
    r = lam
    for f in lam_fac:
        while r % f == 0 and pow(a, r // f, n) == 1:
            r //= f
    return r
