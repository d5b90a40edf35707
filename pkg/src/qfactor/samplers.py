"""QUBO solvers: exact enumeration, simulated annealing, remote sampling.

Sample sets always carry exactly re-computed integer energies (samples from
any source are re-scored locally on ingestion), occurrence counts summing to
the read count, and the sampler's identifying metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np
import requests

from .qubo import FactorEncoding, QuboModel, decode_sample, evaluate_energy

__all__ = [
    "SampleRecord",
    "SampleSet",
    "AnnealSchedule",
    "solve_exhaustive",
    "sample_sa",
    "remote_sample",
    "success_frequency",
    "global_minimum_frequency",
    "SamplerError",
    "SamplerConnectionError",
    "SamplerProtocolError",
    "ServerRejection",
]

EXHAUSTIVE_CAP = 30


@dataclass(frozen=True)
class SampleRecord:
    assignment: tuple[int, ...]
    energy: int
    occurrences: int


@dataclass
class SampleSet:
    records: list[SampleRecord]
    metadata: dict = field(default_factory=dict)

    @property
    def num_reads(self) -> int:
        return sum(r.occurrences for r in self.records)

    def lowest(self) -> SampleRecord:
        return min(self.records, key=lambda r: (r.energy, r.assignment))


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric inverse-temperature ramp for the annealing surrogate."""

    sweeps: int = 1000
    beta_start: float = 0.1
    beta_end: float = 10.0
    interpolation: str = "geometric"

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be >= 1")
        if not 0 < self.beta_start <= self.beta_end:
            raise ValueError("need 0 < beta_start <= beta_end")
        if self.interpolation != "geometric":
            raise ValueError("only geometric interpolation is supported")

    def betas(self) -> np.ndarray:
        if self.sweeps == 1:
            return np.array([self.beta_end])
        return np.geomspace(self.beta_start, self.beta_end, self.sweeps)


def _dense_int(model: QuboModel):
    a = np.zeros(model.num_vars, dtype=np.int64)
    for i, c in model.linear.items():
        a[i] = c
    b = np.zeros((model.num_vars, model.num_vars), dtype=np.int64)
    for (i, j), c in model.quadratic.items():
        b[i, j] = c
        b[j, i] = c
    return a, b


@numba.njit(cache=True)
def _gray_scan(a, b, collect, emin_in, out_idx):
    """Gray-code sweep over all 2^n assignments with incremental fields.

    Pass 1 (collect=False): returns the minimum energy and its multiplicity.
    Pass 2 (collect=True): stores the gray indices of minimisers in out_idx.
    """
    n = a.shape[0]
    total = 1 << n
    fields = a.copy()
    x = np.zeros(n, dtype=np.int64)
    energy = 0
    emin = emin_in if collect else energy
    count = 0
    if collect:
        if energy == emin:
            out_idx[count] = 0
            count += 1
    else:
        emin = energy
        count = 1
    for s in range(1, total):
        step = s
        i = 0
        while step & 1 == 0:
            step >>= 1
            i += 1
        if x[i] == 0:
            energy += fields[i]
            x[i] = 1
            for j in range(n):
                fields[j] += b[i, j]
        else:
            x[i] = 0
            for j in range(n):
                fields[j] -= b[i, j]
            energy -= fields[i]
        if collect:
            if energy == emin and count < out_idx.shape[0]:
                out_idx[count] = s
                count += 1
        elif energy < emin:
            emin = energy
            count = 1
        elif energy == emin:
            count += 1
    return emin, count


def solve_exhaustive(model: QuboModel) -> tuple[int, list[tuple[int, ...]]]:
    """Exact minimum and every minimising assignment, for n <= 30."""
    n = model.num_vars
    if n > EXHAUSTIVE_CAP:
        raise ValueError(f"{n} variables exceed the exhaustive cap of {EXHAUSTIVE_CAP}")
    if n == 0:
        return model.offset, [()]
    a, b = _dense_int(model)
    emin, count = _gray_scan(a, b, False, 0, np.empty(0, dtype=np.int64))
    idx = np.empty(count, dtype=np.int64)
    _gray_scan(a, b, True, emin, idx)
    outs = []
    for s in idx:
        g = int(s) ^ (int(s) >> 1)
        outs.append(tuple((g >> i) & 1 for i in range(n)))
    outs.sort()
    return int(emin) + model.offset, outs


@numba.njit(cache=True)
def _sa_reads(a, b, betas, init_bits, thresholds, out_states):
    """Metropolis single-flip annealing, one independent restart per read."""
    n_reads, n = init_bits.shape
    sweeps = betas.shape[0]
    for read in range(n_reads):
        x = out_states[read]
        for i in range(n):
            x[i] = init_bits[read, i]
        fields = a.copy()
        for i in range(n):
            if x[i]:
                for j in range(n):
                    fields[j] += b[i, j]
        for s in range(sweeps):
            beta = betas[s]
            for i in range(n):
                delta = fields[i] if x[i] == 0 else -fields[i]
                if delta <= 0.0 or thresholds[read, s, i] < math.exp(-beta * delta):
                    if x[i] == 0:
                        x[i] = 1
                        for j in range(n):
                            fields[j] += b[i, j]
                    else:
                        x[i] = 0
                        for j in range(n):
                            fields[j] -= b[i, j]


def sample_sa(model: QuboModel, schedule: Optional[AnnealSchedule] = None,
              num_reads: int = 1000, seed: int = 0, *,
              scale: Optional[float] = None, batch_size: int = 256) -> SampleSet:
    """Simulated-annealing surrogate sampler.

    Each read is an independent restart from a random assignment followed by
    `sweeps` full Metropolis passes under the geometric beta ramp, using
    incremental energy deltas. Deltas are divided by `scale` (default: the
    largest absolute coefficient) so the default schedule is meaningful for
    models of any coefficient magnitude. Reads derive their own random
    streams from (seed, read index): results are independent of batching.
    """
    if num_reads < 1:
        raise ValueError("num_reads must be >= 1")
    if schedule is None:
        schedule = AnnealSchedule()
    a_int, b_int = _dense_int(model)
    if scale is None:
        coeffs = [abs(c) for c in model.linear.values()]
        coeffs += [abs(c) for c in model.quadratic.values()]
        scale = float(max(coeffs)) if coeffs else 1.0
    if scale <= 0:
        raise ValueError("scale must be positive")
    a = a_int.astype(np.float64) / scale
    b = b_int.astype(np.float64) / scale
    betas = schedule.betas()
    n = model.num_vars

    counts: dict[tuple[int, ...], int] = {}
    for start in range(0, num_reads, batch_size):
        reads = range(start, min(start + batch_size, num_reads))
        init = np.empty((len(reads), n), dtype=np.int8)
        thresholds = np.empty((len(reads), schedule.sweeps, n), dtype=np.float64)
        for row, read in enumerate(reads):
            rng = np.random.Generator(np.random.Philox(
                np.random.SeedSequence(seed, spawn_key=(read,))))
            init[row] = rng.integers(0, 2, size=n, dtype=np.int8)
            thresholds[row] = rng.random((schedule.sweeps, n))
        states = np.empty_like(init)
        _sa_reads(a, b, betas, init, thresholds, states)
        for row in range(len(reads)):
            bits = tuple(int(v) for v in states[row])
            counts[bits] = counts.get(bits, 0) + 1

    records = [SampleRecord(bits, evaluate_energy(model, bits), c)
               for bits, c in counts.items()]
    records.sort(key=lambda r: (r.energy, r.assignment))
    meta = {"sampler": "sa", "seed": seed, "num_reads": num_reads,
            "schedule": {"sweeps": schedule.sweeps,
                         "beta_start": schedule.beta_start,
                         "beta_end": schedule.beta_end,
                         "interpolation": schedule.interpolation},
            "scale": scale}
    return SampleSet(records, meta)


# ---------------------------------------------------------------------------
# remote sampling client


class SamplerError(RuntimeError):
    pass


class SamplerConnectionError(SamplerError):
    def __init__(self, message: str, retry_after: Optional[float] = None):
        super().__init__(message)
        self.retry_after = retry_after


class SamplerProtocolError(SamplerError):
    pass


class ServerRejection(SamplerError):
    def __init__(self, message: str, retry_after: Optional[float] = None):
        super().__init__(message)
        self.retry_after = retry_after


def model_to_wire(model: QuboModel, num_reads: int, params: dict) -> dict:
    terms = [[i, i, c] for i, c in sorted(model.linear.items())]
    terms += [[i, j, c] for (i, j), c in sorted(model.quadratic.items())]
    return {"n": model.num_vars, "offset": model.offset, "terms": terms,
            "num_reads": num_reads, "params": params}


def remote_sample(endpoint: str, model: QuboModel, num_reads: int = 1000,
                  params: Optional[dict] = None, *, retries: int = 2,
                  timeout: float = 30.0) -> SampleSet:
    """Submit a model to a sampling service and re-score the reply locally.

    Connection failures are retried up to `retries` times and then surface
    as SamplerConnectionError; malformed replies raise SamplerProtocolError
    with no partial sample set; server-side rejections (an "error" field or
    an HTTP error status) raise ServerRejection carrying any Retry-After
    hint. Energies claimed by the server are checked against exact local
    re-evaluation; mismatching samples are flagged in the metadata and the
    local value is kept.
    """
    payload = model_to_wire(model, num_reads, params or {})
    url = endpoint.rstrip("/") + "/v1/sample"
    last_exc: Optional[Exception] = None
    for _ in range(retries + 1):
        try:
            resp = requests.post(url, json=payload, timeout=timeout)
            break
        except requests.exceptions.ConnectionError as exc:
            last_exc = exc
    else:
        raise SamplerConnectionError(f"cannot reach {url}: {last_exc}")

    retry_after = None
    if "Retry-After" in resp.headers:
        try:
            retry_after = float(resp.headers["Retry-After"])
        except ValueError:
            retry_after = None
    try:
        doc = resp.json()
    except ValueError as exc:
        raise SamplerProtocolError(f"response is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SamplerProtocolError("response is not an object")
    if doc.get("error"):
        raise ServerRejection(str(doc["error"]), retry_after)
    if resp.status_code != 200:
        raise ServerRejection(f"HTTP {resp.status_code}", retry_after)

    for key in ("samples", "energies", "occurrences"):
        if key not in doc or not isinstance(doc[key], list):
            raise SamplerProtocolError(f"missing or invalid field {key!r}")
    samples, energies, occurrences = doc["samples"], doc["energies"], doc["occurrences"]
    if not (len(samples) == len(energies) == len(occurrences)):
        raise SamplerProtocolError("samples/energies/occurrences lengths differ")
    records = []
    flagged = []
    for idx, (bits, claimed, occ) in enumerate(zip(samples, energies, occurrences)):
        if (not isinstance(bits, list) or len(bits) != model.num_vars
                or any(b not in (0, 1) for b in bits)):
            raise SamplerProtocolError(f"sample {idx} is not a 0/1 vector of length n")
        if not isinstance(occ, int) or occ < 1:
            raise SamplerProtocolError(f"occurrence {idx} is not a positive integer")
        local = evaluate_energy(model, bits)
        if claimed != local:
            flagged.append(idx)
        records.append(SampleRecord(tuple(bits), local, occ))
    records.sort(key=lambda r: (r.energy, r.assignment))
    meta = {"sampler": "remote", "endpoint": endpoint, "num_reads": num_reads,
            "flagged_energy_mismatches": flagged}
    return SampleSet(records, meta)


# ---------------------------------------------------------------------------
# success metrics


def success_frequency(samples: SampleSet, encoding: FactorEncoding, n: int) -> float:
    """Occurrence-weighted fraction of samples whose factor bits solve N.

    Operates on logical sample sets: physical samples must be unembedded
    (majority vote) before scoring. Only the factor bits matter; ancilla
    errors do not disqualify a sample.
    """
    if not samples.records:
        raise ValueError("empty sample set")
    hits = 0
    for rec in samples.records:
        p, q = decode_sample(rec.assignment, encoding)
        if p * q == n:
            hits += rec.occurrences
    return hits / samples.num_reads


def global_minimum_frequency(samples: SampleSet, model: QuboModel) -> float:
    """Occurrence-weighted fraction of samples at energy exactly 0."""
    if not samples.records:
        raise ValueError("empty sample set")
    hits = sum(rec.occurrences for rec in samples.records if rec.energy == 0)
    return hits / samples.num_reads
