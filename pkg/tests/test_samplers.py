import itertools

import pytest

from qfactor.qubo import QuboModel, build_direct, build_mc, planted_direct
from qfactor.samplers import (
    AnnealSchedule,
    SampleRecord,
    SampleSet,
    global_minimum_frequency,
    sample_sa,
    solve_exhaustive,
    success_frequency,
)


def brute_min(model):
    best, args = None, []
    for bits in itertools.product((0, 1), repeat=model.num_vars):
        e = model.energy(bits)
        if best is None or e < best:
            best, args = e, [bits]
        elif e == best:
            args.append(bits)
    return best, sorted(args)


# ---------------------------------------------------------------------------
# exhaustive solver


def test_exhaustive_direct_n25():
    model, enc = build_direct(25, 3, 3)
    emin, assignments = solve_exhaustive(model)
    assert emin == 0
    from qfactor.qubo import decode_sample

    decodes = {decode_sample(a, enc) for a in assignments}
    assert decodes == {(5, 5)}


def test_exhaustive_trivial_models():
    empty = QuboModel(0, {}, {}, 7, {})
    assert solve_exhaustive(empty) == (7, [()])
    one = QuboModel(1, {0: -1}, {}, 5, {0: "x"})
    assert solve_exhaustive(one) == (4, [(1,)])


def test_exhaustive_matches_bruteforce():
    import random

    rng = random.Random(0)
    for _ in range(8):
        n = rng.randint(1, 8)
        linear = {i: rng.randint(-5, 5) for i in range(n)}
        quadratic = {(i, j): rng.randint(-4, 4)
                     for i in range(n) for j in range(i + 1, n) if rng.random() < 0.6}
        model = QuboModel(n, {k: v for k, v in linear.items() if v},
                          {k: v for k, v in quadratic.items() if v},
                          rng.randint(-3, 3), {i: "x" for i in range(n)})
        emin, args = solve_exhaustive(model)
        b_emin, b_args = brute_min(model)
        assert emin == b_emin
        assert args == b_args


def test_exhaustive_cap():
    model = QuboModel(31, {}, {}, 0, {i: "x" for i in range(31)})
    with pytest.raises(ValueError):
        solve_exhaustive(model)


# ---------------------------------------------------------------------------
# simulated annealing


def test_sa_finds_unique_minimum_small():
    # unique-minimum 6-variable model with unit coefficients
    model = QuboModel(
        6,
        {0: -1, 1: -1, 2: 1, 3: 1, 4: -1, 5: -1},
        {(0, 2): -1, (0, 3): 1, (0, 4): 1, (0, 5): -1, (1, 2): -1, (1, 4): -1,
         (1, 5): -1, (2, 3): -1, (2, 4): -1, (3, 4): 1},
        0,
        {i: "x" for i in range(6)},
    )
    emin, args = solve_exhaustive(model)
    assert len(args) == 1
    out = sample_sa(model, AnnealSchedule(sweeps=1000), num_reads=1000, seed=4)
    ground = sum(r.occurrences for r in out.records if r.energy == emin)
    assert ground >= 990
    assert out.num_reads == 1000


def test_sa_factoring_model_mostly_ground():
    model, enc = build_direct(35, 3, 3)  # two degenerate minima, huge range
    out = sample_sa(model, AnnealSchedule(sweeps=1000), num_reads=1000, seed=4)
    ground = sum(r.occurrences for r in out.records if r.energy == 0)
    assert ground >= 900


def test_sa_zero_temperature_fixed_point():
    # beta huge from the start: pure descent; a planted start stays planted.
    # approximate the frozen schedule by beta_start = beta_end = 1e9
    model, enc = build_direct(25, 3, 3)
    planted = planted_direct(enc, model, 5, 5)
    sched = AnnealSchedule(sweeps=50, beta_start=1e9, beta_end=1e9)
    out = sample_sa(model, sched, num_reads=200, seed=9)
    # descent cannot leave energy 0 once reached; ground state dominates
    assert out.lowest().energy == 0
    assert out.lowest().assignment == tuple(planted)


def test_sa_deterministic_and_batch_invariant():
    model, _ = build_direct(143, 4, 4)
    s1 = sample_sa(model, num_reads=64, seed=7)
    s2 = sample_sa(model, num_reads=64, seed=7)
    s3 = sample_sa(model, num_reads=64, seed=7, batch_size=5)
    assert s1.records == s2.records == s3.records
    s4 = sample_sa(model, num_reads=64, seed=8)
    assert s4.records != s1.records


def test_sa_energies_exactly_recomputed():
    model, _, _ = build_mc(35, 3, 3)
    out = sample_sa(model, num_reads=50, seed=1)
    for rec in out.records:
        assert rec.energy == model.energy(rec.assignment)


# ---------------------------------------------------------------------------
# frequencies


def test_frequencies_planted_and_empty_cases():
    model, enc = build_direct(25, 3, 3)
    planted = tuple(planted_direct(enc, model, 5, 5))
    ss = SampleSet([SampleRecord(planted, 0, 10)])
    assert success_frequency(ss, enc, 25) == 1.0
    assert global_minimum_frequency(ss, model) == 1.0
    wrong = tuple(1 - b for b in planted)
    ss2 = SampleSet([SampleRecord(wrong, model.energy(wrong), 4)])
    assert success_frequency(ss2, enc, 25) == 0.0
    assert global_minimum_frequency(ss2, model) == 0.0


def test_success_counts_correct_factors_with_wrong_ancilla():
    # correct p,q bits but a wrong carry bit: success yes, global minimum no
    model, enc, gates = build_mc(35, 3, 3)
    from qfactor.qubo import planted_mc

    good = planted_mc(gates, enc, model, 5, 7)
    bad = list(good)
    carry_idx = next(i for i, r in model.roles.items() if r == "carry")
    bad[carry_idx] = 1 - bad[carry_idx]
    ss = SampleSet([
        SampleRecord(tuple(good), model.energy(good), 63),
        SampleRecord(tuple(bad), model.energy(bad), 37),
    ])
    assert success_frequency(ss, enc, 35) == 1.0
    assert global_minimum_frequency(ss, model) == 0.63
    assert global_minimum_frequency(ss, model) <= success_frequency(ss, enc, 35)


def test_frequency_convention_fraction():
    model, enc = build_direct(25, 3, 3)
    planted = tuple(planted_direct(enc, model, 5, 5))
    other = tuple(1 - b for b in planted)
    ss = SampleSet([
        SampleRecord(planted, 0, 37),
        SampleRecord(other, model.energy(other), 9963),
    ])
    assert success_frequency(ss, enc, 25) == pytest.approx(0.0037)


def test_anneal_schedule_validation():
    with pytest.raises(ValueError):
        AnnealSchedule(sweeps=0)
    with pytest.raises(ValueError):
        AnnealSchedule(beta_start=0)
    with pytest.raises(ValueError):
        AnnealSchedule(beta_start=5, beta_end=1)
