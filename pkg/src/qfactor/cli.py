"""Command-line surface: the `qfactor` tool.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.
"""

from __future__ import annotations

import json
import math
import sys

import click

from . import harness
from .numtheory import Semiprime, multiplicative_order, random_semiprime
from .pegasus import (
    build_pegasus,
    read_defects,
    read_embedding,
    read_graph,
    verify_embedding,
    write_graph,
)
from .qubo import FactorEncoding, build_cfa, build_direct, build_mc, decode_sample, read_qubo, write_qubo
from .samplers import AnnealSchedule, sample_sa, solve_exhaustive


@click.group()
def cli():
    """Factorisation experiments on simulated quantum hardware."""


# ---------------------------------------------------------------------------
# shor


@cli.group()
def shor():
    """Order-finding circuit simulation."""


def _resolve_semiprime(p, q, bits, seed) -> Semiprime:
    if (p is None) != (q is None):
        raise click.UsageError("--p and --q must be given together")
    if p is not None:
        return Semiprime(p * q, p, q)
    if bits is None:
        raise click.UsageError("give either --p/--q or --bits")
    return harness.semiprime_with_bits(bits, seed)


@shor.command("run")
@click.option("--p", type=int, default=None, help="first prime factor")
@click.option("--q", type=int, default=None, help="second prime factor")
@click.option("--bits", type=int, default=None, help="semiprime bit length to generate")
@click.option("--base", type=int, default=None, help="base a (default: random valid)")
@click.option("--t", type=int, default=None, help="counting bits (default 2L)")
@click.option("--delta", type=float, default=0.0, help="rotation noise magnitude")
@click.option("--shots", type=int, default=50)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), default=None, help="write per-shot CSV here")
def shor_run(p, q, bits, base, t, delta, shots, seed, out):
    """Run one factoring problem and classify its outcomes."""
    s = _resolve_semiprime(p, q, bits, seed)
    if base is None:
        import random as _random

        rng = _random.Random(seed)
        while True:
            base = rng.randrange(2, s.n)
            if math.gcd(base, s.n) == 1:
                break
    t = t if t is not None else 2 * s.bit_length_n
    fracs = harness.run_shor_problem(s, base, t, delta, shots, seed)
    click.echo(f"N = {s.n} = {s.p} x {s.q}  a = {base}  t = {t}  delta = {delta}")
    click.echo(f"true order r = {multiplicative_order(base, s)}")
    for cat in harness.CATEGORIES:
        click.echo(f"{cat:>12}: {fracs[cat]:.4f}")
    if out:
        from .postproc import classify
        from .shor import CircuitParams, run_shots

        params = CircuitParams(s, base, t, delta, seed)
        r_star = multiplicative_order(base, s)
        with open(out, "w") as fh:
            fh.write("shot,j,shor,shor_lucky,extended,peak\n")
            for rec in run_shots(params, shots):
                o = classify(rec, params, r_star)
                fh.write(f"{rec.shot_seed},{rec.j},{int(o.shor_success)},"
                         f"{int(o.shor_or_lucky)},{int(o.extended_success)},"
                         f"{int(o.peak)}\n")
        click.echo(f"wrote {out}")


@shor.command("sweep")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None, help="override the config seed")
@click.option("--out", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "summary"]), default="csv")
def shor_sweep(config_path, seed, out, fmt):
    """Noise sweep: mean success probability per category and delta."""
    with open(config_path) as fh:
        doc = json.load(fh)
    if seed is not None:
        doc["seed"] = seed
    spec = harness.ShorSweepSpec.from_dict(doc)
    result = harness.run_shor_sweep(spec)
    for path in harness.emit_results(result, out, fmt):
        click.echo(f"wrote {path}")


# ---------------------------------------------------------------------------
# qubo


@cli.group()
def qubo():
    """QUBO model construction and solving."""


@qubo.command("build")
@click.option("--n", type=int, required=True, help="odd semiprime to factor")
@click.option("--method", type=click.Choice(["direct", "mc", "cfa"]), required=True)
@click.option("--lp", type=int, required=True, help="bit length of p")
@click.option("--lq", type=int, required=True, help="bit length of q")
@click.option("--out", type=click.Path(), required=True)
def qubo_build(n, method, lp, lq, out):
    """Write the QUBO text serialisation of a factoring model."""
    model, _ = harness.build_model(method, n, lp, lq)
    with open(out, "w") as fh:
        write_qubo(model, fh)
    click.echo(f"wrote {out}: n={model.num_vars} terms="
               f"{len(model.linear) + len(model.quadratic)}")


def _encoding_from_roles(model) -> FactorEncoding:
    p_vars, q_vars = {}, {}
    for idx, role in model.roles.items():
        if role.startswith("p:"):
            p_vars[int(role.split(":")[1])] = idx
        elif role.startswith("q:"):
            q_vars[int(role.split(":")[1])] = idx
    if not p_vars or not q_vars:
        raise click.ClickException("model carries no factor-bit roles")
    return FactorEncoding(max(p_vars) + 2, max(q_vars) + 2, p_vars, q_vars)


@qubo.command("solve")
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--sampler", type=click.Choice(["exhaustive", "sa"]), default="exhaustive")
@click.option("--reads", type=int, default=1000)
@click.option("--sweeps", type=int, default=1000)
@click.option("--seed", type=int, default=0)
def qubo_solve(model_path, sampler, reads, sweeps, seed):
    """Solve a serialised QUBO and decode the factor bits."""
    with open(model_path) as fh:
        model = read_qubo(fh)
    if sampler == "exhaustive":
        emin, assignments = solve_exhaustive(model)
        click.echo(f"minimum energy {emin} at {len(assignments)} assignment(s)")
        shown = assignments[:8]
    else:
        ss = sample_sa(model, AnnealSchedule(sweeps=sweeps), reads, seed)
        best = ss.lowest()
        emin = best.energy
        click.echo(f"best energy {best.energy} seen {best.occurrences}x in {reads} reads")
        shown = [r.assignment for r in ss.records if r.energy == best.energy][:8]
    try:
        enc = _encoding_from_roles(model)
    except click.ClickException:
        enc = None
    for bits in shown:
        line = "".join(str(b) for b in bits)
        if enc is not None:
            p, q = decode_sample(bits, enc)
            line += f"  ->  p = {p}, q = {q}, p*q = {p * q}"
        click.echo(line)


# ---------------------------------------------------------------------------
# anneal


@cli.group()
def anneal():
    """Annealing benchmarks."""


@anneal.command("bench")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None, help="override the config seed")
@click.option("--out", type=click.Path(), required=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "summary"]), default="csv")
@click.option("--sweep-split", is_flag=True, default=False,
              help="iterate factor-length splits until a factor is found")
def anneal_bench(config_path, seed, out, fmt, sweep_split):
    """Scaling benchmark: success frequencies per problem size."""
    with open(config_path) as fh:
        doc = json.load(fh)
    if seed is not None:
        doc["seed"] = seed
    if sweep_split:
        doc["sweep_split"] = True
    spec = harness.AnnealBenchSpec.from_dict(doc)
    result = harness.run_anneal_benchmark(spec)
    for path in harness.emit_results(result, out, fmt):
        click.echo(f"wrote {path}")
    if result.fit is not None:
        click.echo(f"fit: median ~ 2^({result.fit.exponent:.4f} * l)")


# ---------------------------------------------------------------------------
# fit


@cli.command("fit")
@click.option("--data", "data_path", type=click.Path(exists=True), required=True,
              help="two-column text file: l median")
@click.option("--out", type=click.Path(), default=None)
def fit_cmd(data_path, out):
    """Exponential scaling fit median ~ 2^(b*l) from two-column data."""
    medians: dict[int, float] = {}
    with open(data_path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            l_str, v_str = line.split()
            medians[int(float(l_str))] = float(v_str)
    fit = harness.fit_scaling(medians)
    click.echo(f"exponent b = {fit.exponent!r}")
    click.echo(f"intercept  = {fit.intercept!r}")
    click.echo(f"residual   = {fit.residual_norm!r}")
    if fit.excluded_zero_levels:
        click.echo(f"excluded zero-median levels: {list(fit.excluded_zero_levels)}")
    if out:
        with open(out, "w") as fh:
            json.dump({"exponent": fit.exponent, "intercept": fit.intercept,
                       "residual_norm": fit.residual_norm,
                       "medians": {str(k): v for k, v in fit.medians.items()},
                       "excluded_zero_levels": list(fit.excluded_zero_levels)},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        click.echo(f"wrote {out}")


# ---------------------------------------------------------------------------
# pegasus


@cli.group()
def pegasus():
    """Hardware graph generation and embedding verification."""


@pegasus.command("gen")
@click.option("--m", type=int, required=True, help="Pegasus size parameter")
@click.option("--defects", "defects_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), required=True)
def pegasus_gen(m, defects_path, out):
    """Generate a Pegasus graph, optionally with a defect list applied."""
    defects = []
    if defects_path:
        with open(defects_path) as fh:
            defects = read_defects(fh)
    graph = build_pegasus(m, defects)
    with open(out, "w") as fh:
        write_graph(graph, fh)
    click.echo(f"wrote {out}: {len(graph.nodes)} nodes, {len(graph.edges)} edges")


@pegasus.command("verify")
@click.option("--graph", "graph_path", type=click.Path(exists=True), required=True)
@click.option("--embedding", "embedding_path", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
def pegasus_verify(graph_path, embedding_path, model_path):
    """Check an embedding file against a graph and a model."""
    with open(graph_path) as fh:
        graph = read_graph(fh)
    with open(embedding_path) as fh:
        embedding = read_embedding(fh)
    with open(model_path) as fh:
        model = read_qubo(fh)
    report = verify_embedding(model, graph, embedding)
    if report.valid:
        click.echo("embedding valid")
    else:
        for v in report.violations:
            click.echo(f"violation: {v}")
        raise click.ClickException(f"{len(report.violations)} violation(s)")


def main(argv=None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(2)
    except Exception as exc:  # runtime failure
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    return 0


if __name__ == "__main__":
    main()
