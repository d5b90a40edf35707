"""Structured placement of controlled-adder tile grids on Pegasus graphs.

Pegasus contains three interleaved families of 8-qubit cells (4 vertical +
4 horizontal qubits forming a complete bipartite block plus two odd couplers
per side). Consecutive cells along a diagonal strip cycle through the three
families and share dense coupler bundles, which is what the placement walks:

* tile (i, j) of the multiplier occupies one cell; column j advances along
  the strip (family cycling t1 -> t0 -> t2, one (x-1, y+1) step per three
  columns) and row i moves straight down within a family.
* factor-p chains run vertically through same-family cells (external
  couplers), factor-q and ripple-carry chains follow the strip diagonal,
  and sum chains hop one strip step back and one row down.

Inside a cell the default role assignment puts q and p on two-qubit chains
spanning both sides, which realises every coupler of the tile penalty; a
deterministic backtracking search adjusts boundary tiles (constant factor
bits, row ends, defects) and fails loudly when the grid cannot fit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .pegasus import Embedding, EmbeddingFailure, HardwareGraph
from .qubo import TileGrid, Var

__all__ = ["build_cfa_placement", "tile_cell"]

_ROLE_ORDER = ("q", "p", "si", "ci", "so", "co")
# pattern-D preferred slots, as (side, index) with V=vertical, H=horizontal
_PREFERRED = {
    "q": (("H", 0), ("V", 0)),
    "p": (("H", 1), ("V", 1)),
    "ci": (("V", 2),),
    "si": (("V", 3),),
    "co": (("H", 2),),
    "so": (("H", 3),),
}
_SEARCH_CAP = 500_000


def tile_cell(grid: TileGrid, i: int, j: int) -> tuple[str, int, int]:
    """Cell address (family, X, Y) of tile (i, j) under the strip walk."""
    x0 = (grid.l_p - 1) // 3 + 1
    k, r = divmod(j, 3)
    if r == 0:
        fam, x, y = "t1", x0 - k, k
    elif r == 1:
        fam, x, y = "t0", x0 - k - 1, k + 1
    else:
        fam, x, y = "t2", x0 - k - 1, k + 1
    return fam, x, y + (i - 1)


def _cell_slots(graph: HardwareGraph, fam: str, x: int, y: int):
    """Vertical and horizontal qubit ids of one cell, k ascending.

    Returns None when the cell lies outside the graph's coordinate range.
    """
    m = graph.m
    if not (0 <= x <= m - 2 and 0 <= y <= m - 2):
        return None
    if fam == "t1":
        vs = [graph.linear(0, x, k, y) for k in range(4, 8)]
        hs = [graph.linear(1, y + 1, k, x) for k in range(4, 8)]
    elif fam == "t0":
        vs = [graph.linear(0, x + 1, k, y) for k in range(0, 4)]
        hs = [graph.linear(1, y, k, x) for k in range(8, 12)]
    else:
        vs = [graph.linear(0, x, k, y) for k in range(8, 12)]
        hs = [graph.linear(1, y + 1, k, x) for k in range(0, 4)]
    return vs, hs


class _Placer:
    def __init__(self, grid: TileGrid, graph: HardwareGraph):
        self.grid = grid
        self.graph = graph
        self.chains: dict[int, set[int]] = {}
        self.used: set[int] = set()
        # tiles touching each variable, in placement order: a variable's
        # qubits in one tile must reach its next tile's cell (lookahead)
        self.var_tiles: dict[int, list[tuple[int, int]]] = {}
        for i in grid.rows:
            for j in grid.cols:
                for bit in grid.tiles[(i, j)].bits().values():
                    if isinstance(bit, Var):
                        self.var_tiles.setdefault(bit.index, []).append((i, j))

    def _next_cell_slots(self, var: int, i: int, j: int):
        tiles = self.var_tiles[var]
        pos = tiles.index((i, j))
        if pos == len(tiles) - 1:
            return None
        fam, x, y = tile_cell(self.grid, *tiles[pos + 1])
        slots = _cell_slots(self.graph, fam, x, y)
        if slots is None:
            return None
        return {q for side in slots for q in side if q in self.graph.nodes}

    def _attachable(self, var: int, slots: tuple[int, ...]) -> bool:
        """New slots must form a connected extension of the variable chain."""
        adj = self.graph.adjacency
        old = self.chains.get(var)
        if old is None:
            if len(slots) == 2 and slots[1] not in adj.get(slots[0], ()):
                return False
            return True
        attached = [q for q in slots if any(nb in old for nb in adj[q])]
        if not attached:
            return False
        if len(slots) == 2:
            a, b = slots
            if b in adj[a]:
                return True
            return a in set(attached) and b in set(attached)
        return True

    def _candidates(self, role: str, var: int, vs: list[int], hs: list[int],
                    taken: set[int]):
        """Slot sets to try for a role, preferred pattern first."""
        side = {"V": vs, "H": hs}
        free_v = [q for q in vs if q not in taken and q in self.graph.nodes]
        free_h = [q for q in hs if q not in taken and q in self.graph.nodes]
        out: list[tuple[int, ...]] = []
        pref = tuple(side[s][i] for s, i in _PREFERRED[role])
        if all(q in free_v or q in free_h for q in pref):
            out.append(pref)
            if len(pref) == 2:
                out.append(pref[:1])
        for q in free_h + free_v:
            if (q,) not in out:
                out.append((q,))
        for v in free_v:
            for h in free_h:
                if (h, v) not in out and (v, h) not in out:
                    out.append((v, h))
        for pool in (free_v, free_h):
            for a_i in range(len(pool)):
                for b_i in range(a_i + 1, len(pool)):
                    pair = (pool[a_i], pool[b_i])
                    if pair[1] in self.graph.adjacency[pair[0]]:
                        out.append(pair)
        return out

    def _couplers_ok(self, tile_vars: dict[str, int],
                     local: dict[str, tuple[int, ...]]) -> bool:
        """Every pair of tile variables needs a physical edge between chains."""
        adj = self.graph.adjacency
        roles = list(tile_vars)
        for a_i in range(len(roles)):
            for b_i in range(a_i + 1, len(roles)):
                ra, rb = roles[a_i], roles[b_i]
                ca = self.chains.get(tile_vars[ra], set()) | set(local.get(ra, ()))
                cb = self.chains.get(tile_vars[rb], set()) | set(local.get(rb, ()))
                if not any(nb in cb for q in ca for nb in adj[q]):
                    return False
        return True

    def place_tile(self, i: int, j: int) -> None:
        tile = self.grid.tiles[(i, j)]
        fam, x, y = tile_cell(self.grid, i, j)
        slots = _cell_slots(self.graph, fam, x, y)
        if slots is None:
            raise EmbeddingFailure(
                f"tile ({i}, {j}) needs cell {fam}({x}, {y}) outside Pegasus m={self.graph.m}")
        vs, hs = slots
        tile_vars = {role: bit.index for role, bit in tile.bits().items()
                     if isinstance(bit, Var)}
        # a variable can fill two roles of one tile only through aliasing
        # bugs upstream; treat that as a hard error
        if len(set(tile_vars.values())) != len(tile_vars):
            raise EmbeddingFailure(f"tile ({i}, {j}) repeats a variable")

        roles = [r for r in _ROLE_ORDER if r in tile_vars]
        local: dict[str, tuple[int, ...]] = {}
        taken: set[int] = set()
        lookahead = {r: self._next_cell_slots(tile_vars[r], i, j) for r in roles}
        steps = 0

        def rec(pos: int) -> bool:
            nonlocal steps
            if pos == len(roles):
                return self._couplers_ok(tile_vars, local)
            role = roles[pos]
            var = tile_vars[role]
            ahead = lookahead[role]
            for cand in self._candidates(role, var, vs, hs, taken):
                steps += 1
                if steps > _SEARCH_CAP:
                    raise EmbeddingFailure(
                        f"placement search exhausted at tile ({i}, {j})")
                if any(q in taken or q in self.used for q in cand):
                    continue
                if not self._attachable(var, cand):
                    continue
                if ahead is not None and not any(
                        nb in ahead for q in cand
                        for nb in self.graph.adjacency[q]):
                    continue
                local[role] = cand
                taken.update(cand)
                if rec(pos + 1):
                    return True
                taken.difference_update(cand)
                del local[role]
            return False

        if not rec(0):
            raise EmbeddingFailure(
                f"no feasible qubit assignment for tile ({i}, {j})")
        for role, cand in local.items():
            self.chains.setdefault(tile_vars[role], set()).update(cand)
            self.used.update(cand)


def build_cfa_placement(grid: TileGrid, graph: HardwareGraph) -> Embedding:
    """Deterministic tile-to-cell placement of a controlled-adder grid.

    Raises EmbeddingFailure when the grid does not fit the graph or a defect
    cannot be worked around locally.
    """
    placer = _Placer(grid, graph)
    for i in grid.rows:
        for j in grid.cols:
            placer.place_tile(i, j)
    chains = {v: frozenset(c) for v, c in placer.chains.items()}
    return Embedding(chains)
