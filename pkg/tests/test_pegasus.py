import io

import pytest

from qfactor.pegasus import (
    HORIZONTAL_OFFSETS,
    VERTICAL_OFFSETS,
    Embedding,
    EmbeddingFailure,
    build_pegasus,
    default_chain_strength,
    embed_heuristic,
    embed_model,
    read_defects,
    read_embedding,
    read_graph,
    unembed_sample,
    verify_embedding,
    write_defects,
    write_embedding,
    write_graph,
)
from qfactor.qubo import QuboModel, build_direct


def reference_pegasus_edges(m):
    """Independent constructor: geometric segment-crossing rule.

    A vertical qubit (0, w, k, z) is a segment at x = 12w + k spanning
    y in [12z + S0[k], 12z + S0[k] + 12); a horizontal qubit (1, w', k', z')
    sits at y = 12w' + k' spanning x in [12z' + S1[k'], 12z' + S1[k'] + 12).
    Internal couplers join crossing segments; external couplers join
    consecutive aligned segments; odd couplers join the k-pairs.
    """
    span = m - 1

    def lin(u, w, k, z):
        return ((u * m + w) * 12 + k) * span + z

    verticals = [(w, k, z) for w in range(m) for k in range(12) for z in range(span)]
    horizontals = list(verticals)
    edges = set()
    for (w, k, z) in verticals:
        x = 12 * w + k
        ylo = 12 * z + VERTICAL_OFFSETS[k]
        for (wp, kp, zp) in horizontals:
            y = 12 * wp + kp
            xlo = 12 * zp + HORIZONTAL_OFFSETS[kp]
            if xlo <= x < xlo + 12 and ylo <= y < ylo + 12:
                e = tuple(sorted((lin(0, w, k, z), lin(1, wp, kp, zp))))
                edges.add(e)
    for u in range(2):
        for w in range(m):
            for k in range(12):
                for z in range(span - 1):
                    edges.add(tuple(sorted((lin(u, w, k, z), lin(u, w, k, z + 1)))))
            for k in range(0, 12, 2):
                for z in range(span):
                    edges.add(tuple(sorted((lin(u, w, k, z), lin(u, w, k + 1, z)))))
    return edges


@pytest.mark.parametrize("m", [2, 3, 4, 6])
def test_pegasus_matches_reference_constructor(m):
    g = build_pegasus(m)
    assert len(g.nodes) == 24 * m * (m - 1)
    assert g.edges == reference_pegasus_edges(m)


def test_p16_contains_device_scale():
    g = build_pegasus(16)
    assert len(g.nodes) >= 5627
    assert len(g.edges) >= 40277


def test_defect_deletion():
    g0 = build_pegasus(3)
    victims = sorted(g0.nodes)[:5]
    g = build_pegasus(3, defects=victims)
    assert len(g.nodes) == len(g0.nodes) - 5
    for v in victims:
        assert v not in g.nodes
        assert all(v not in e for e in g.edges)
    some_edge = sorted(g.edges)[0]
    g2 = build_pegasus(3, defects=[some_edge])
    assert some_edge not in g2.edges
    assert len(g2.nodes) == len(g0.nodes)


def test_defect_not_present_raises():
    with pytest.raises(ValueError):
        build_pegasus(3, defects=[10**9])
    with pytest.raises(ValueError):
        build_pegasus(3, defects=[(0, 1)] if (0, 1) not in build_pegasus(3).edges
                      else [(10**9, 10**9 + 1)])


# ---------------------------------------------------------------------------
# verification


def triangle_model():
    return QuboModel(3, {0: 1}, {(0, 1): 1, (1, 2): 1, (0, 2): 1}, 0,
                     {i: "x" for i in range(3)})


def test_verify_identity_embedding():
    g = build_pegasus(2)
    # find a triangle in the graph (K44 + odd couplers has many)
    tri = None
    for a, b in sorted(g.edges):
        common = g.adjacency[a] & g.adjacency[b]
        if common:
            tri = (a, b, min(common))
            break
    assert tri
    emb = Embedding({i: frozenset((q,)) for i, q in enumerate(tri)})
    report = verify_embedding(triangle_model(), g, emb)
    assert report.valid, report.violations


def test_verify_catches_disconnected_chain():
    g = build_pegasus(2)
    nodes = sorted(g.nodes)
    a = nodes[0]
    far = next(n for n in nodes if n not in g.adjacency[a] and n != a)
    model = QuboModel(1, {0: 1}, {}, 0, {0: "x"})
    emb = Embedding({0: frozenset((a, far))})
    report = verify_embedding(model, g, emb)
    assert not report.valid
    assert any("not connected" in v for v in report.violations)


def test_verify_catches_overlap_and_missing_coupler():
    g = build_pegasus(2)
    nodes = sorted(g.nodes)
    a = nodes[0]
    far = next(n for n in nodes if n not in g.adjacency[a] and n != a)
    model = QuboModel(2, {}, {(0, 1): 1}, 0, {0: "x", 1: "x"})
    emb = Embedding({0: frozenset((a,)), 1: frozenset((a,))})
    report = verify_embedding(model, g, emb)
    assert any("shared" in v for v in report.violations)
    emb2 = Embedding({0: frozenset((a,)), 1: frozenset((far,))})
    report2 = verify_embedding(model, g, emb2)
    assert any("no physical edge" in v for v in report2.violations)


# ---------------------------------------------------------------------------
# heuristic embedding


def test_embed_heuristic_direct_n25_on_p4():
    model, _ = build_direct(25, 3, 3)
    g = build_pegasus(4)
    emb = embed_heuristic(model, g, seed=1)
    assert verify_embedding(model, g, emb).valid


def test_embed_heuristic_deterministic():
    model, _ = build_direct(35, 3, 3)
    g = build_pegasus(3)
    e1 = embed_heuristic(model, g, seed=7)
    e2 = embed_heuristic(model, g, seed=7)
    assert e1.chains == e2.chains


def find_path3(g):
    """Nodes (a, b, c) with edges a-b and b-c but no a-c chord."""
    for b in sorted(g.nodes):
        nbs = sorted(g.adjacency[b])
        for a in nbs:
            for c in nbs:
                if c != a and c not in g.adjacency[a]:
                    return a, b, c
    raise AssertionError("no induced path found")


def test_embed_heuristic_failure_on_path_graph():
    # a 3-node path cannot host a triangle minor
    g = build_pegasus(2)
    a, b, c = find_path3(g)
    defects = [n for n in g.nodes if n not in {a, b, c}]
    small = build_pegasus(2, defects=defects)
    assert len(small.nodes) == 3
    with pytest.raises(EmbeddingFailure):
        embed_heuristic(triangle_model(), small, seed=0)


def test_embed_heuristic_larger_model_on_p6():
    model, _ = build_direct(143, 4, 4)  # 11 x 13
    g = build_pegasus(6)
    emb = embed_heuristic(model, g, seed=3)
    assert verify_embedding(model, g, emb).valid


# ---------------------------------------------------------------------------
# embedding transform


def test_embed_model_single_qubit_chains_is_relabelling():
    model = triangle_model()
    g = build_pegasus(2)
    tri = None
    for a, b in sorted(g.edges):
        common = g.adjacency[a] & g.adjacency[b]
        if common:
            tri = (a, b, min(common))
            break
    emb = Embedding({i: frozenset((q,)) for i, q in enumerate(tri)})
    em = embed_model(model, emb, g, chain_strength=5)
    assert em.model.num_vars == 3
    assert em.model.offset == model.offset
    idx = {q: i for i, q in enumerate(em.qubits)}
    assert em.model.linear == {idx[tri[0]]: 1}
    assert len(em.model.quadratic) == 3


def test_embed_model_planted_energy_preserved():
    model, enc = build_direct(25, 3, 3)
    g = build_pegasus(4)
    emb = embed_heuristic(model, g, seed=2)
    em = embed_model(model, emb, g)
    from qfactor.qubo import planted_direct

    logical = planted_direct(enc, model, 5, 5)
    phys = [0] * em.model.num_vars
    idx = {q: i for i, q in enumerate(em.qubits)}
    for v, chain in emb.chains.items():
        for q in chain:
            phys[idx[q]] = logical[v]
    assert em.model.energy(phys) == model.energy(logical) == 0


def test_embed_model_chain_break_costs_chain_strength():
    # variable 0 on a 2-qubit chain with zero linear bias: flipping the
    # qubit away from the coupler edge adds exactly the chain strength
    g = build_pegasus(2)
    a, b, c = find_path3(g)  # coupler (0,1) can only land on edge (b, c)
    model = QuboModel(2, {1: 3}, {(0, 1): 2}, 0, {0: "x", 1: "x"})
    emb = Embedding({0: frozenset((a, b)), 1: frozenset((c,))})
    cs = 7
    em = embed_model(model, emb, g, chain_strength=cs)
    idx = {q: i for i, q in enumerate(em.qubits)}
    consistent = [0] * 3
    consistent[idx[c]] = 1
    broken = list(consistent)
    broken[idx[a]] = 1
    assert em.model.energy(broken) - em.model.energy(consistent) == cs


def test_default_chain_strength():
    model = QuboModel(2, {0: -4}, {(0, 1): 9}, 0, {0: "x", 1: "x"})
    assert default_chain_strength(model) == 10


def test_unembed_majority_and_ties():
    emb = Embedding({0: frozenset((10, 11, 12)), 1: frozenset((20, 21))})
    sample = {10: 1, 11: 1, 12: 0, 20: 1, 21: 0}
    bits, broken = unembed_sample(sample, emb, 2)
    assert bits == [1, 0]  # majority; tie breaks to 0
    assert broken == 2
    sample2 = {10: 1, 11: 1, 12: 1, 20: 0, 21: 0}
    bits2, broken2 = unembed_sample(sample2, emb, 2)
    assert bits2 == [1, 0]
    assert broken2 == 0


# ---------------------------------------------------------------------------
# file round-trips


def test_defect_file_roundtrip():
    defects = [5, 17, (3, 9), 2, (1, 4)]
    buf = io.StringIO()
    write_defects(defects, buf)
    buf.seek(0)
    assert read_defects(buf) == defects


def test_embedding_file_roundtrip():
    emb = Embedding({0: frozenset((4, 5)), 3: frozenset((9,))})
    buf = io.StringIO()
    write_embedding(emb, buf)
    buf.seek(0)
    back = read_embedding(buf)
    assert back.chains == emb.chains


def test_graph_file_roundtrip():
    g = build_pegasus(2, defects=[sorted(build_pegasus(2).nodes)[0]])
    buf = io.StringIO()
    write_graph(g, buf)
    buf.seek(0)
    back = read_graph(buf)
    assert back.m == g.m
    assert back.nodes == g.nodes
    assert back.edges == g.edges
    assert back.coords == g.coords
