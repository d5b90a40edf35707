"""Statevector simulation of the iterative order-finding circuit.

The circuit uses one control qubit plus an L-qubit work register. Each of
the t iterations applies: Hadamard on the control, the controlled modular
multiplication |y> -> |a^(2^(t-1-k)) y mod N>, one feedback rotation per
previously measured 1-bit (noisy when delta > 0), Hadamard, then projective
measurement and reset of the control. Measured bits come out least
significant first: j = sum_k bits[k] * 2^k.

Two equivalent backends exist. ``DenseCircuit`` is the literal machine with
a dense array of 2^(L+1) complex amplitudes (16 bytes each). ``run_shot``
uses an exact restriction of the work register to the multiplicative orbit
of the base (the only basis states ever populated), which is what makes
20-qubit sweeps practical; its output law is pinned to the closed-form
``exact_distribution`` oracle by the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .numtheory import Semiprime, multiplicative_order

__all__ = [
    "CircuitParams",
    "MeasurementRecord",
    "DEFAULT_QUBIT_CAP",
    "required_memory_bytes",
    "noisy_rotation_phase",
    "run_shot",
    "run_shots",
    "exact_distribution",
    "DenseCircuit",
    "run_shot_dense",
]

DEFAULT_QUBIT_CAP = 26

_SQRT_HALF = math.sqrt(0.5)


@dataclass(frozen=True)
class CircuitParams:
    """One factoring problem instance for the simulator."""

    semiprime: Semiprime
    a: int
    t: int
    delta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        n = self.semiprime.n
        if not 2 <= self.a < n:
            raise ValueError(f"base a={self.a} outside [2, {n})")
        if math.gcd(self.a, n) != 1:
            raise ValueError(f"gcd({self.a}, {n}) != 1")
        if self.t < 1:
            raise ValueError("t must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")

    @classmethod
    def default_t(cls, semiprime: Semiprime, a: int, delta: float = 0.0,
                  seed: int = 0) -> "CircuitParams":
        """t = 2L, the usual choice of counting bits."""
        return cls(semiprime, a, 2 * semiprime.bit_length_n, delta, seed)


@dataclass(frozen=True)
class MeasurementRecord:
    """The t measured bits in measurement order and the integer they encode."""

    bits: tuple[int, ...]
    j: int
    shot_seed: int

    def __post_init__(self):
        assert self.j == sum(b << k for k, b in enumerate(self.bits))


def required_memory_bytes(l_bits: int) -> int:
    """Dense-statevector memory for an l_bits-bit modulus: 16 * 2^(L+1)."""
    if l_bits < 0:
        raise ValueError("bit length must be nonnegative")
    return 16 << (l_bits + 1)


def noisy_rotation_phase(k: int, delta: float, rng: np.random.Generator) -> float:
    """Phase 2*pi*(1 + delta*r)/2^k with r a fresh standard normal draw."""
    if k < 1:
        raise ValueError("rotation index must be >= 1")
    return 2.0 * math.pi * (1.0 + delta * rng.standard_normal()) / (1 << k)


def _check_cap(semiprime: Semiprime, qubit_cap: int):
    l_bits = semiprime.bit_length_n
    if l_bits + 1 > qubit_cap:
        raise ValueError(
            f"{l_bits + 1} qubits exceed the cap of {qubit_cap} "
            f"({required_memory_bytes(l_bits)} bytes of state)")


def _shot_rng(seed: int, shot_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(shot_index,))
    return np.random.Generator(np.random.Philox(ss))


@numba.njit(cache=True, fastmath=True)
def _orbit_step(prev_re, prev_im, offsets, scales, nxt_re, nxt_im,
                w_re, w_im, shift, r, norms):
    """One circuit iteration on batched orbit states.

    State arrays hold real/imaginary parts separately and are C-contiguous
    (n_shots, 2r): columns [0, r) are the control-0 branch, [r, 2r) the
    control-1 branch. The incoming state of shot b starts at column
    offsets[b] of prev (its previous measurement pick); scales[b] folds in
    that measurement's renormalisation. norms[b, c] receives the squared norm
    of branch c, the Born weights. (w_re, w_im)[b] is the accumulated
    feedback phase factor for shot b.

    Two passes per shot keep each loop simple enough to vectorise: the first
    writes w * psi(shifted) into the branch-0 half as scratch, the second
    forms both measurement branches and their norms.
    """
    n_shots = prev_re.shape[0]
    for b in range(n_shots):
        src_re = prev_re[b, offsets[b]:offsets[b] + r]
        src_im = prev_im[b, offsets[b]:offsets[b] + r]
        dst_re = nxt_re[b]
        dst_im = nxt_im[b]
        half = 0.5 * scales[b]
        cwr = w_re[b] * half
        cwi = w_im[b] * half
        # pass 1: dst[0:r] <- (w/2) * src[e - shift mod r]
        for seg in range(2):
            lo = 0 if seg == 0 else shift
            hi = shift if seg == 0 else r
            delta = r - shift if seg == 0 else -shift
            for e in range(lo, hi):
                mr0 = src_re[e + delta]
                mi0 = src_im[e + delta]
                dst_re[e] = cwr * mr0 - cwi * mi0
                dst_im[e] = cwr * mi0 + cwi * mr0
        # pass 2: branches (src/2 +- dst) and their squared norms
        n0 = 0.0
        n1 = 0.0
        for e in range(r):
            br = half * src_re[e]
            bi = half * src_im[e]
            mr = dst_re[e]
            mi = dst_im[e]
            v0r = br + mr
            v0i = bi + mi
            v1r = br - mr
            v1i = bi - mi
            dst_re[e] = v0r
            dst_im[e] = v0i
            dst_re[r + e] = v1r
            dst_im[r + e] = v1i
            n0 += v0r * v0r + v0i * v0i
            n1 += v1r * v1r + v1i * v1i
        norms[b, 0] = n0
        norms[b, 1] = n1


class _OrbitEngine:
    """Work register restricted to exponents of a modulo its order r."""

    def __init__(self, params: CircuitParams):
        self.params = params
        self.r = multiplicative_order(params.a, params.semiprime)
        t = params.t
        # multiplier of iteration k is a^(2^(t-1-k)): a shift in exponent space
        self.shifts = [pow(2, t - 1 - k, self.r) for k in range(t)]
        self._buffers: tuple | None = None

    def _get_buffers(self, n_shots: int):
        if self._buffers is None or self._buffers[0].shape[0] != n_shots:
            shape = (n_shots, 2 * self.r)
            self._buffers = tuple(np.empty(shape, dtype=np.float32) for _ in range(4))
        return self._buffers

    def run(self, shot_indices: list[int]) -> list[MeasurementRecord]:
        p = self.params
        t, r = p.t, self.r
        n_shots = len(shot_indices)
        rngs = [_shot_rng(p.seed, s) for s in shot_indices]
        # double buffers; each holds both measurement branches side by side
        cur_re, cur_im, nxt_re, nxt_im = self._get_buffers(n_shots)
        cur_re.fill(0.0)
        cur_im.fill(0.0)
        cur_re[:, 0] = 1.0
        norms = np.empty((n_shots, 2), dtype=np.float64)
        w_re = np.empty(n_shots, dtype=np.float32)
        w_im = np.empty(n_shots, dtype=np.float32)
        offsets = np.zeros(n_shots, dtype=np.int64)
        scales = np.ones(n_shots, dtype=np.float32)
        bits = [[0] * t for _ in range(n_shots)]
        two_pi = 2.0 * math.pi

        for k in range(t):
            for b, rng in enumerate(rngs):
                angle = 0.0
                shot_bits = bits[b]
                for m in range(k):
                    if shot_bits[m]:
                        # inverse rotation of index k - m + 1, one fresh draw
                        angle -= two_pi * (1.0 + p.delta * rng.standard_normal()) \
                            / (1 << (k - m + 1))
                w_re[b] = math.cos(angle)
                w_im[b] = math.sin(angle)
            _orbit_step(cur_re, cur_im, offsets, scales, nxt_re, nxt_im,
                        w_re, w_im, self.shifts[k], r, norms)
            for b, rng in enumerate(rngs):
                total = norms[b, 0] + norms[b, 1]
                p1 = norms[b, 1] / total
                bit = 1 if rng.random() < p1 else 0
                bits[b][k] = bit
                offsets[b] = r * bit
                scales[b] = 1.0 / math.sqrt(norms[b, bit])
            cur_re, nxt_re = nxt_re, cur_re
            cur_im, nxt_im = nxt_im, cur_im

        records = []
        for b, s in enumerate(shot_indices):
            j = sum(bit << k for k, bit in enumerate(bits[b]))
            records.append(MeasurementRecord(tuple(bits[b]), j, s))
        return records


def run_shot(params: CircuitParams, *, qubit_cap: int = DEFAULT_QUBIT_CAP,
             shot_index: int = 0) -> MeasurementRecord:
    """Simulate one shot of the iterative circuit."""
    _check_cap(params.semiprime, qubit_cap)
    return _OrbitEngine(params).run([shot_index])[0]


def run_shots(params: CircuitParams, n_shots: int, *,
              qubit_cap: int = DEFAULT_QUBIT_CAP,
              batch_size: int | None = None) -> list[MeasurementRecord]:
    """Simulate shots 0..n_shots-1; per-shot seeds derive from params.seed.

    Results are independent of batch_size (each shot consumes only its own
    random stream).
    """
    _check_cap(params.semiprime, qubit_cap)
    engine = _OrbitEngine(params)
    if batch_size is None:
        batch_size = max(1, min(n_shots, (1 << 22) // max(1, engine.r)))
    records = []
    for start in range(0, n_shots, batch_size):
        records.extend(engine.run(list(range(start, min(start + batch_size, n_shots)))))
    return records


def exact_distribution(semiprime: Semiprime, a: int, t: int) -> np.ndarray:
    """Noiseless outcome law P(j) for j in [0, 2^t).

    P(j) = sum over work-register residues x0 of
    |2^-t sum_{m: x0+mr < 2^t} exp(2 pi i j (x0 + m r)/2^t)|^2, evaluated in
    closed form per geometric series.
    """
    if t < 1 or t > 24:
        raise ValueError("t out of supported range [1, 24]")
    r = multiplicative_order(a, semiprime)
    if r > 1 << 16:
        raise ValueError(f"order {r} exceeds the 2^16 oracle cap")
    size = 1 << t
    m_lo, rem = divmod(size, r)
    # rem residues get m_lo + 1 terms, the rest m_lo
    out = np.empty(size, dtype=np.float64)
    block = 1 << 20
    for start in range(0, size, block):
        j = np.arange(start, min(start + block, size), dtype=np.int64)
        frac = ((j * r) % size).astype(np.float64) / size
        half = np.pi * frac
        sin_half = np.sin(half)
        with np.errstate(divide="ignore", invalid="ignore"):
            f_lo = np.where(sin_half == 0.0, float(m_lo**2),
                            (np.sin(m_lo * half) / sin_half) ** 2)
            f_hi = np.where(sin_half == 0.0, float((m_lo + 1) ** 2),
                            (np.sin((m_lo + 1) * half) / sin_half) ** 2)
        out[start:start + len(j)] = (rem * f_hi + (r - rem) * f_lo)
    out /= float(size) ** 2
    return out


# ---------------------------------------------------------------------------
# dense reference machine


class DenseCircuit:
    """The literal L+1 qubit machine: 2^(L+1) double-precision amplitudes.

    State layout: amplitudes[c, y] for control qubit c and work value y.
    Work values >= N keep amplitude exactly 0 throughout.
    """

    def __init__(self, semiprime: Semiprime, a: int, *,
                 qubit_cap: int = DEFAULT_QUBIT_CAP):
        if math.gcd(a, semiprime.n) != 1:
            raise ValueError(f"gcd({a}, {semiprime.n}) != 1")
        _check_cap(semiprime, qubit_cap)
        self.n = semiprime.n
        self.a = a
        self.n_work = 1 << semiprime.bit_length_n
        self.amplitudes = np.zeros((2, self.n_work), dtype=np.complex128)
        self.amplitudes[0, 1] = 1.0  # work |1>, control |0>

    @property
    def memory_bytes(self) -> int:
        return self.amplitudes.nbytes

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def hadamard_control(self):
        s0 = self.amplitudes[0].copy()
        s1 = self.amplitudes[1]
        self.amplitudes[0] = (s0 + s1) * _SQRT_HALF
        self.amplitudes[1] = (s0 - s1) * _SQRT_HALF

    def _perm(self, mult: int) -> np.ndarray:
        y = np.arange(self.n, dtype=np.int64)
        perm = np.arange(self.n_work, dtype=np.int64)
        perm[:self.n] = (y * (mult % self.n)) % self.n
        return perm

    def controlled_multiply(self, mult: int):
        if math.gcd(mult, self.n) != 1:
            raise ValueError("multiplier must be invertible mod N")
        new1 = np.zeros_like(self.amplitudes[1])
        new1[self._perm(mult)] = self.amplitudes[1]
        self.amplitudes[1] = new1

    def controlled_phase(self, angle: float):
        self.amplitudes[1] *= complex(math.cos(angle), math.sin(angle))

    def measure_control(self, u: float) -> int:
        p1 = float(np.sum(np.abs(self.amplitudes[1]) ** 2))
        bit = 1 if u < p1 else 0
        chosen = self.amplitudes[bit] / math.sqrt(p1 if bit else 1.0 - p1)
        self.amplitudes[0] = chosen  # reset control to |0>
        self.amplitudes[1] = 0.0
        return bit


def run_shot_dense(params: CircuitParams, *, qubit_cap: int = DEFAULT_QUBIT_CAP,
                   shot_index: int = 0) -> MeasurementRecord:
    """Reference implementation of run_shot on the dense machine."""
    circuit = DenseCircuit(params.semiprime, params.a, qubit_cap=qubit_cap)
    rng = _shot_rng(params.seed, shot_index)
    t = params.t
    n = params.semiprime.n
    bits = []
    for k in range(t):
        circuit.hadamard_control()
        circuit.controlled_multiply(pow(params.a, 1 << (t - 1 - k), n))
        angle = 0.0
        for m in range(k):
            if bits[m]:
                angle -= noisy_rotation_phase(k - m + 1, params.delta, rng)
        if angle != 0.0:
            circuit.controlled_phase(angle)
        circuit.hadamard_control()
        bits.append(circuit.measure_control(rng.random()))
    j = sum(b << k for k, b in enumerate(bits))
    return MeasurementRecord(tuple(bits), j, shot_index)
