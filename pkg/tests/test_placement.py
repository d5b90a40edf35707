import pytest

from qfactor.pegasus import EmbeddingFailure, build_pegasus, verify_embedding
from qfactor.placement import build_cfa_placement, tile_cell
from qfactor.qubo import build_cfa


def test_3x3_grid_on_p4():
    model, _, grid = build_cfa(25, 3, 3)
    g = build_pegasus(4)
    emb = build_cfa_placement(grid, g)
    assert verify_embedding(model, g, emb).valid


def test_15x8_multiplier_on_p16():
    model, _, grid = build_cfa(3548021, 15, 8)
    g = build_pegasus(16)
    emb = build_cfa_placement(grid, g)
    report = verify_embedding(model, g, emb)
    assert report.valid, report.violations[:5]


def test_placement_deterministic():
    model, _, grid = build_cfa(143, 4, 4)
    g = build_pegasus(6)
    e1 = build_cfa_placement(grid, g)
    e2 = build_cfa_placement(grid, g)
    assert e1.chains == e2.chains
    assert verify_embedding(model, g, e1).valid


def test_placement_various_shapes():
    for n, lp, lq, m in [(35, 3, 3, 4), (143, 4, 4, 6), (899, 5, 5, 7),
                         (1042441, 10, 10, 16)]:
        model, _, grid = build_cfa(n, lp, lq)
        g = build_pegasus(m)
        emb = build_cfa_placement(grid, g)
        assert verify_embedding(model, g, emb).valid, (n, lp, lq, m)


def test_grid_too_large_fails():
    model, _, grid = build_cfa(3548021, 15, 8)
    g = build_pegasus(6)
    with pytest.raises(EmbeddingFailure):
        build_cfa_placement(grid, g)


def test_placement_routes_around_single_defect():
    model, _, grid = build_cfa(25, 3, 3)
    clean = build_cfa_placement(grid, build_pegasus(4))
    # remove one qubit used by the clean placement and ask for a new one
    victim = min(min(c) for c in clean.chains.values())
    g = build_pegasus(4, defects=[victim])
    emb = build_cfa_placement(grid, g)
    assert verify_embedding(model, g, emb).valid
    assert all(victim not in chain for chain in emb.chains.values())


def test_p_chains_vertical_q_chains_diagonal():
    """Factor-p chains ride one vertical line; factor-q chains walk the
    diagonal (their qubits sweep both fabric directions together)."""
    from collections import Counter

    model, enc, grid = build_cfa(3548021, 15, 8)
    g = build_pegasus(16)
    emb = build_cfa_placement(grid, g)

    for var in enc.p_vars.values():
        vertical = [g.coords[q] for q in emb.chains[var] if g.coords[q][0] == 0]
        (line, count), = Counter((w, k) for (_, w, k, _) in vertical).most_common(1)
        assert count >= grid.l_q - 2
        zs = sorted(z for (_, w, k, z) in vertical if (w, k) == line)
        assert zs == list(range(zs[0], zs[0] + len(zs)))

    for var in enc.q_vars.values():
        vertical = [g.coords[q] for q in emb.chains[var] if g.coords[q][0] == 0]
        ws = {w for (_, w, _, _) in vertical}
        zs = {z for (_, _, _, z) in vertical}
        # the diagonal walk moves one cell across per three columns
        assert len(ws) >= (grid.l_p - 1) // 3
        assert len(zs) >= (grid.l_p - 1) // 3


def test_tile_cell_walk_shape():
    _, _, grid = build_cfa(3548021, 15, 8)
    fams = [tile_cell(grid, 1, j)[0] for j in range(15)]
    assert fams == ["t1", "t0", "t2"] * 5
    # three columns step one cell down-left
    _, x0, y0 = tile_cell(grid, 1, 0)
    _, x3, y3 = tile_cell(grid, 1, 3)
    assert (x3, y3) == (x0 - 1, y0 + 1)
