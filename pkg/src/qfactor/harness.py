"""Experiment orchestration: noise sweeps, annealing benchmarks, fits.

Every run is a pure function of its spec (seeds included), and the emitted
files are byte-stable: rerunning a command with the same configuration
reproduces them exactly.
"""

from __future__ import annotations

import json
import math
import os
import random
import statistics
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .numtheory import Semiprime, multiplicative_order, random_semiprime
from .postproc import classify
from .qubo import (
    FactorEncoding,
    QuboModel,
    build_cfa,
    build_direct,
    build_mc,
    decode_sample,
)
from .samplers import (
    AnnealSchedule,
    SampleRecord,
    SampleSet,
    global_minimum_frequency,
    remote_sample,
    sample_sa,
    solve_exhaustive,
    success_frequency,
)
from .shor import CircuitParams, run_shots

__all__ = [
    "CATEGORIES",
    "ShorSweepSpec",
    "AnnealBenchSpec",
    "ScalingFit",
    "SweepRow",
    "SweepResult",
    "BenchRow",
    "BenchResult",
    "semiprime_with_bits",
    "run_shor_problem",
    "run_shor_sweep",
    "build_model",
    "run_anneal_benchmark",
    "fit_scaling",
    "emit_results",
    "read_rows_csv",
]

CATEGORIES = ("shor", "shor_lucky", "extended", "peak")


@dataclass(frozen=True)
class ShorSweepSpec:
    bits: int
    delta_grid: tuple[float, ...]
    problems_per_delta: int = 200
    shots_per_problem: int = 50
    t: Optional[int] = None  # None: 2 * bits
    seed: int = 0

    def __post_init__(self):
        if self.problems_per_delta < 1 or self.shots_per_problem < 1:
            raise ValueError("counts must be >= 1")
        if any(d < 0 for d in self.delta_grid):
            raise ValueError("deltas must be >= 0")

    @classmethod
    def from_dict(cls, doc: dict) -> "ShorSweepSpec":
        return cls(
            bits=int(doc["bits"]),
            delta_grid=tuple(float(d) for d in doc["delta_grid"]),
            problems_per_delta=int(doc.get("problems_per_delta", 200)),
            shots_per_problem=int(doc.get("shots_per_problem", 50)),
            t=int(doc["t"]) if doc.get("t") is not None else None,
            seed=int(doc.get("seed", 0)),
        )


@dataclass(frozen=True)
class AnnealBenchSpec:
    method: str  # direct | mc | cfa
    l_values: tuple[int, ...]
    semiprimes_per_l: int = 10
    reads_per_problem: int = 10000
    sampler: dict = field(default_factory=lambda: {"type": "sa"})
    embed: bool = False
    sweep_split: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("direct", "mc", "cfa"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.semiprimes_per_l < 1 or self.reads_per_problem < 1:
            raise ValueError("counts must be >= 1")
        if any(l < 2 for l in self.l_values):
            raise ValueError("need l >= 2 (factors of >= 3 bits)")

    @classmethod
    def from_dict(cls, doc: dict) -> "AnnealBenchSpec":
        return cls(
            method=doc["method"],
            l_values=tuple(int(l) for l in doc["l_values"]),
            semiprimes_per_l=int(doc.get("semiprimes_per_l", 10)),
            reads_per_problem=int(doc.get("reads_per_problem", 10000)),
            sampler=dict(doc.get("sampler", {"type": "sa"})),
            embed=bool(doc.get("embed", False)),
            sweep_split=bool(doc.get("sweep_split", False)),
            seed=int(doc.get("seed", 0)),
        )


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    intercept: float
    residual_norm: float
    medians: dict[int, float]
    excluded_zero_levels: tuple[int, ...] = ()


def _derive_seed(*parts: int) -> int:
    ss = np.random.SeedSequence(list(parts))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def semiprime_with_bits(bits: int, seed: int) -> Semiprime:
    """Random semiprime with exactly `bits` total bits (balanced split)."""
    l_p = (bits + 1) // 2
    l_q = bits + 1 - l_p
    attempt = 0
    while True:
        s = random_semiprime(l_p, l_q, _derive_seed(seed, attempt))
        if s.bit_length_n == bits:
            return s
        attempt += 1


# ---------------------------------------------------------------------------
# noise sweep


@dataclass(frozen=True)
class SweepRow:
    delta: float
    index: int
    n: int
    p: int
    q: int
    a: int
    true_order: int
    shots: int
    accidental_bases: int
    shor: float
    shor_lucky: float
    extended: float
    peak: float


@dataclass
class SweepResult:
    spec: ShorSweepSpec
    rows: list[SweepRow]
    # means[delta][category] = (mean over problems, unbiased standard error)
    means: dict[float, dict[str, tuple[float, float]]]


def run_shor_problem(semiprime: Semiprime, a: int, t: int, delta: float,
                     shots: int, seed: int) -> dict[str, float]:
    """Fractions of successful shots per category for one problem."""
    params = CircuitParams(semiprime, a, t, delta, seed)
    true_order = multiplicative_order(a, semiprime)
    counts = {c: 0 for c in CATEGORIES}
    for rec in run_shots(params, shots):
        out = classify(rec, params, true_order)
        counts["shor"] += out.shor_success
        counts["shor_lucky"] += out.shor_or_lucky
        counts["extended"] += out.extended_success
        counts["peak"] += out.peak
    return {c: counts[c] / shots for c in CATEGORIES}


def run_shor_sweep(spec: ShorSweepSpec) -> SweepResult:
    """Mean success probability per category for each error magnitude.

    Per problem a fresh semiprime of the requested bit length is drawn and a
    base is resampled until coprime (non-coprime draws factor N by accident;
    they are counted and excluded). Per-problem success fractions are
    averaged across problems; the error is the unbiased standard error.
    """
    t = spec.t if spec.t is not None else 2 * spec.bits
    rows: list[SweepRow] = []
    for d_idx, delta in enumerate(spec.delta_grid):
        for p_idx in range(spec.problems_per_delta):
            s = semiprime_with_bits(spec.bits, _derive_seed(spec.seed, 1, d_idx, p_idx))
            rng = random.Random(_derive_seed(spec.seed, 2, d_idx, p_idx))
            accidental = 0
            while True:
                a = rng.randrange(2, s.n)
                if math.gcd(a, s.n) == 1:
                    break
                accidental += 1
            shot_seed = _derive_seed(spec.seed, 3, d_idx, p_idx)
            fracs = run_shor_problem(s, a, t, delta, spec.shots_per_problem,
                                     shot_seed)
            rows.append(SweepRow(delta, p_idx, s.n, s.p, s.q, a,
                                 multiplicative_order(a, s),
                                 spec.shots_per_problem, accidental,
                                 fracs["shor"], fracs["shor_lucky"],
                                 fracs["extended"], fracs["peak"]))
    means: dict[float, dict[str, tuple[float, float]]] = {}
    for delta in spec.delta_grid:
        sub = [r for r in rows if r.delta == delta]
        means[delta] = {}
        for cat in CATEGORIES:
            vals = [getattr(r, cat) for r in sub]
            mean = statistics.fmean(vals)
            sem = (statistics.stdev(vals) / math.sqrt(len(vals))
                   if len(vals) > 1 else 0.0)
            means[delta][cat] = (mean, sem)
    return SweepResult(spec, rows, means)


# ---------------------------------------------------------------------------
# annealing benchmark


@dataclass(frozen=True)
class BenchRow:
    l: int
    index: int
    n: int
    p: int
    q: int
    split: str
    num_vars: int
    attempts: int
    success_frequency: float
    global_minimum_frequency: float
    error: str = ""


@dataclass
class BenchResult:
    spec: AnnealBenchSpec
    rows: list[BenchRow]
    per_l: dict[int, dict[str, float]]
    fit: Optional[ScalingFit]


def build_model(method: str, n: int, l_p: int, l_q: int):
    """(model, encoding) for a method; extra builder outputs are dropped."""
    if method == "direct":
        return build_direct(n, l_p, l_q)
    if method == "mc":
        model, enc, _ = build_mc(n, l_p, l_q)
        return model, enc
    if method == "cfa":
        model, enc, _ = build_cfa(n, l_p, l_q)
        return model, enc
    raise ValueError(f"unknown method {method!r}")


def _make_sampler(spec: AnnealBenchSpec):
    cfg = dict(spec.sampler)
    kind = cfg.pop("type", "sa")
    if kind == "sa":
        schedule = AnnealSchedule(
            sweeps=int(cfg.pop("sweeps", 1000)),
            beta_start=float(cfg.pop("beta_start", 0.1)),
            beta_end=float(cfg.pop("beta_end", 10.0)),
        )

        def run(model, reads, seed):
            return sample_sa(model, schedule, reads, seed, **cfg)
    elif kind == "exhaustive":
        def run(model, reads, seed):
            emin, assignments = solve_exhaustive(model)
            base, rem = divmod(reads, len(assignments))
            records = [SampleRecord(bits, emin, base + (1 if i < rem else 0))
                       for i, bits in enumerate(assignments)
                       if base + (1 if i < rem else 0) > 0]
            return SampleSet(records, {"sampler": "exhaustive"})
    elif kind == "remote":
        endpoint = cfg.pop("endpoint")

        def run(model, reads, seed):
            return remote_sample(endpoint, model, reads, params=cfg)
    else:
        raise ValueError(f"unknown sampler type {kind!r}")
    return run


def _splits_for(l: int, sweep: bool) -> list[tuple[int, int]]:
    lp_star = l // 2
    if not sweep:
        return [(lp_star, l - lp_star)]
    # start balanced, then decrease l_p and increase l_q
    return [(lp, l - lp) for lp in range(lp_star, 0, -1)]


def _sample_logical(spec: AnnealBenchSpec, sampler, model: QuboModel,
                    enc: FactorEncoding, seed: int) -> SampleSet:
    if not spec.embed:
        return sampler(model, spec.reads_per_problem, seed)
    from .pegasus import build_pegasus, embed_heuristic, embed_model, unembed_sample

    # smallest Pegasus that the heuristic manages, deterministic per model
    for m in (4, 6, 8, 12, 16):
        graph = build_pegasus(m)
        try:
            embedding = embed_heuristic(model, graph, seed=seed)
            break
        except Exception:
            continue
    else:
        raise RuntimeError("no Pegasus size accommodated the model")
    em = embed_model(model, embedding, graph)
    phys = sampler(em.model, spec.reads_per_problem, seed)
    counts: dict[tuple[int, ...], int] = {}
    for rec in phys.records:
        qubit_bits = em.qubit_assignment(rec.assignment)
        logical, _broken = unembed_sample(qubit_bits, embedding, model.num_vars)
        key = tuple(logical)
        counts[key] = counts.get(key, 0) + rec.occurrences
    records = [SampleRecord(bits, model.energy(bits), occ)
               for bits, occ in sorted(counts.items())]
    records.sort(key=lambda r: (r.energy, r.assignment))
    return SampleSet(records, {"sampler": "embedded+" + phys.metadata.get("sampler", "?")})


def run_anneal_benchmark(spec: AnnealBenchSpec) -> BenchResult:
    """Success and global-minimum frequencies per problem size l."""
    sampler = _make_sampler(spec)
    rows: list[BenchRow] = []
    for l_idx, l in enumerate(spec.l_values):
        for p_idx in range(spec.semiprimes_per_l):
            lp_star, lq_star = _splits_for(l, False)[0]
            l_p, l_q = lp_star + 2, lq_star + 2
            s = random_semiprime(l_p, l_q, _derive_seed(spec.seed, 10, l_idx, p_idx))
            attempts = 0
            row = None
            try:
                for lp_try, lq_try in _splits_for(l, spec.sweep_split):
                    attempts += 1
                    model, enc = build_model(spec.method, s.n, lp_try + 2, lq_try + 2)
                    samples = _sample_logical(
                        spec, sampler, model, enc,
                        _derive_seed(spec.seed, 11, l_idx, p_idx, attempts))
                    freq = success_frequency(samples, enc, s.n)
                    gm = global_minimum_frequency(samples, model)
                    row = BenchRow(l, p_idx, s.n, s.p, s.q,
                                   f"{lp_try + 2}:{lq_try + 2}", model.num_vars,
                                   attempts, freq, gm)
                    if freq > 0 or not spec.sweep_split:
                        break
            except Exception as exc:
                row = BenchRow(l, p_idx, s.n, s.p, s.q, "", 0, attempts,
                               0.0, 0.0, error=f"{type(exc).__name__}: {exc}")
            rows.append(row)

    per_l: dict[int, dict[str, float]] = {}
    for l in spec.l_values:
        vals = [r.success_frequency for r in rows if r.l == l and not r.error]
        gms = [r.global_minimum_frequency for r in rows if r.l == l and not r.error]
        if not vals:
            continue
        q25, q75 = (float(v) for v in np.percentile(vals, [25, 75]))
        per_l[l] = {
            "median_success": statistics.median(vals),
            "q25_success": q25,
            "q75_success": q75,
            "median_global_minimum": statistics.median(gms),
        }
    fit = None
    medians = {l: stats["median_success"] for l, stats in per_l.items()}
    if sum(1 for v in medians.values() if v > 0) >= 2:
        fit = fit_scaling(medians)
    return BenchResult(spec, rows, per_l, fit)


# ---------------------------------------------------------------------------
# scaling fit


def fit_scaling(medians: dict[int, float]) -> ScalingFit:
    """Least squares of log2(median) against l: median ~ 2^(b*l + c).

    Zero medians are excluded from the log-domain fit (and reported).
    """
    usable = {l: v for l, v in medians.items() if v > 0}
    excluded = tuple(sorted(l for l, v in medians.items() if v <= 0))
    if len(usable) < 2:
        raise ValueError("need at least 2 nonzero medians to fit")
    ls = np.array(sorted(usable), dtype=np.float64)
    ys = np.log2(np.array([usable[l] for l in sorted(usable)], dtype=np.float64))
    design = np.vstack([ls, np.ones_like(ls)]).T
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    residuals = ys - design @ coef
    return ScalingFit(float(coef[0]), float(coef[1]),
                      float(np.sqrt(np.sum(residuals**2))),
                      dict(medians), excluded)


# ---------------------------------------------------------------------------
# emission


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: str, header: list[str], rows: list[list]):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_curve(path: str, points: list[tuple[float, float]]):
    with open(path, "w") as fh:
        for x, y in sorted(points):
            fh.write(f"{_fmt(x)} {_fmt(y)}\n")


SWEEP_COLUMNS = ["delta", "index", "n", "p", "q", "a", "true_order", "shots",
                 "accidental_bases", "shor", "shor_lucky", "extended", "peak"]
BENCH_COLUMNS = ["l", "index", "n", "p", "q", "split", "num_vars", "attempts",
                 "success_frequency", "global_minimum_frequency", "error"]


def emit_results(result, out_dir: str, fmt: str = "csv") -> list[str]:
    """Write rows.csv, summary.json, and per-curve two-column data files.

    Returns the written paths. Identical inputs produce byte-identical
    files. fmt chooses which artefacts to write: "csv" writes everything,
    "summary" only the summary document.
    """
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []

    def path(name):
        p = os.path.join(out_dir, name)
        written.append(p)
        return p

    if isinstance(result, SweepResult):
        summary = {
            "kind": "shor_sweep",
            "spec": asdict(result.spec),
            "means": {repr(d): {c: {"mean": m, "sem": s}
                                for c, (m, s) in cats.items()}
                      for d, cats in result.means.items()},
        }
        if fmt == "csv":
            _write_csv(path("rows.csv"), SWEEP_COLUMNS,
                       [[getattr(r, c) for c in SWEEP_COLUMNS] for r in result.rows])
            for cat in CATEGORIES:
                _write_curve(path(f"curve_{cat}.dat"),
                             [(d, result.means[d][cat][0]) for d in result.means])
    elif isinstance(result, BenchResult):
        summary = {
            "kind": "anneal_bench",
            "spec": asdict(result.spec),
            "per_l": {str(l): stats for l, stats in result.per_l.items()},
            "fit": None if result.fit is None else {
                "exponent": result.fit.exponent,
                "intercept": result.fit.intercept,
                "residual_norm": result.fit.residual_norm,
                "excluded_zero_levels": list(result.fit.excluded_zero_levels),
            },
        }
        if fmt == "csv":
            _write_csv(path("rows.csv"), BENCH_COLUMNS,
                       [[getattr(r, c) for c in BENCH_COLUMNS] for r in result.rows])
            _write_curve(path("curve_success_median.dat"),
                         [(l, stats["median_success"])
                          for l, stats in result.per_l.items()])
            _write_curve(path("curve_global_minimum_median.dat"),
                         [(l, stats["median_global_minimum"])
                          for l, stats in result.per_l.items()])
            _write_curve(path("curve_guessing_baseline.dat"),
                         [(l, 2.0**-l) for l in result.spec.l_values])
    else:
        raise TypeError(f"cannot emit {type(result).__name__}")

    with open(path("summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return written


def read_rows_csv(path: str) -> list[dict]:
    """Re-ingest an emitted rows.csv; numbers come back with exact values."""
    import csv

    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for key, val in row.items():
                if val == "":
                    parsed[key] = ""
                else:
                    try:
                        parsed[key] = int(val)
                    except ValueError:
                        try:
                            parsed[key] = float(val)
                        except ValueError:
                            parsed[key] = val
            out.append(parsed)
    return out
