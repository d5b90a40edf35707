"""Pegasus-family hardware graphs, embeddings, and embedding transforms.

Qubits are addressed by coordinates (u, w, k, z): u = 0 for vertical qubits
and 1 for horizontal, w the perpendicular tile offset, k in [0, 12) the
offset within a tile, z the parallel tile offset. Linear ids follow
((u*m + w)*12 + k)*(m-1) + z. Edges come in three kinds:

* external: (u, w, k, z) -- (u, w, k, z+1)
* odd:      (u, w, 2j, z) -- (u, w, 2j+1, z)
* internal: (0, w, k, z) -- (1, w', k', z') with w' = z + (k' < S0[k]) and
  z' = w - (k < S1[k']), for each k' in [0, 12), where S0/S1 are the
  published vertical/horizontal offset sequences.

Defects (missing qubits or couplers) are deleted after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, TextIO, Union

from .qubo import QuboModel

__all__ = [
    "VERTICAL_OFFSETS",
    "HORIZONTAL_OFFSETS",
    "HardwareGraph",
    "Embedding",
    "EmbeddingReport",
    "build_pegasus",
    "verify_embedding",
    "embed_heuristic",
    "EmbeddedModel",
    "embed_model",
    "default_chain_strength",
    "unembed_sample",
    "read_defects",
    "write_defects",
    "read_embedding",
    "write_embedding",
    "write_graph",
    "read_graph",
]

VERTICAL_OFFSETS = (2, 2, 2, 2, 10, 10, 10, 10, 6, 6, 6, 6)
HORIZONTAL_OFFSETS = (6, 6, 6, 6, 2, 2, 2, 2, 10, 10, 10, 10)

Defect = Union[int, tuple[int, int]]


@dataclass
class HardwareGraph:
    m: int
    nodes: set[int]
    edges: set[tuple[int, int]]
    coords: dict[int, tuple[int, int, int, int]]
    adjacency: dict[int, set[int]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.adjacency:
            adj: dict[int, set[int]] = {n: set() for n in self.nodes}
            for a, b in self.edges:
                adj[a].add(b)
                adj[b].add(a)
            self.adjacency = adj

    def has_edge(self, a: int, b: int) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def linear(self, u: int, w: int, k: int, z: int) -> int:
        return ((u * self.m + w) * 12 + k) * (self.m - 1) + z


def _edge(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def build_pegasus(m: int, defects: Iterable[Defect] = ()) -> HardwareGraph:
    """Ideal Pegasus graph of size m with the listed defects deleted.

    Defects are node ids or (i, j) edge pairs; unknown ids raise ValueError.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    span = m - 1

    def lin(u, w, k, z):
        return ((u * m + w) * 12 + k) * span + z

    nodes: set[int] = set()
    coords: dict[int, tuple[int, int, int, int]] = {}
    for u in range(2):
        for w in range(m):
            for k in range(12):
                for z in range(span):
                    i = lin(u, w, k, z)
                    nodes.add(i)
                    coords[i] = (u, w, k, z)

    edges: set[tuple[int, int]] = set()
    for u in range(2):
        for w in range(m):
            for k in range(12):
                for z in range(span - 1):
                    edges.add(_edge(lin(u, w, k, z), lin(u, w, k, z + 1)))
            for k in range(0, 12, 2):
                for z in range(span):
                    edges.add(_edge(lin(u, w, k, z), lin(u, w, k + 1, z)))
    for w in range(m):
        for k in range(12):
            for z in range(span):
                for kp in range(12):
                    wp = z + (1 if kp < VERTICAL_OFFSETS[k] else 0)
                    zp = w - (1 if k < HORIZONTAL_OFFSETS[kp] else 0)
                    if 0 <= zp < span:
                        edges.add(_edge(lin(0, w, k, z), lin(1, wp, kp, zp)))

    graph = HardwareGraph(m, nodes, edges, coords)
    for d in defects:
        if isinstance(d, int):
            if d not in graph.nodes:
                raise ValueError(f"defect node {d} not in graph")
            graph.nodes.remove(d)
            del graph.coords[d]
            for nb in graph.adjacency.pop(d):
                graph.adjacency[nb].discard(d)
                graph.edges.discard(_edge(d, nb))
        else:
            e = _edge(*d)
            if e not in graph.edges:
                raise ValueError(f"defect edge {d} not in graph")
            graph.edges.remove(e)
            graph.adjacency[e[0]].discard(e[1])
            graph.adjacency[e[1]].discard(e[0])
    return graph


# ---------------------------------------------------------------------------
# embeddings


@dataclass
class Embedding:
    """Map from logical variable to a connected chain of physical qubits."""

    chains: dict[int, frozenset[int]]
    chain_strength: float = 1.0


@dataclass
class EmbeddingReport:
    valid: bool
    violations: list[str]


def _chain_connected(chain: frozenset[int], graph: HardwareGraph) -> bool:
    if not chain:
        return False
    seen = {min(chain)}
    stack = [min(chain)]
    while stack:
        q = stack.pop()
        for nb in graph.adjacency.get(q, ()):
            if nb in chain and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return seen == set(chain)


def verify_embedding(model: QuboModel, graph: HardwareGraph,
                     embedding: Embedding) -> EmbeddingReport:
    """Check disjointness, chain connectivity, and coupler realisability."""
    violations: list[str] = []
    owner: dict[int, int] = {}
    for v in range(model.num_vars):
        chain = embedding.chains.get(v)
        if not chain:
            violations.append(f"variable {v} has no chain")
            continue
        for q in chain:
            if q not in graph.nodes:
                violations.append(f"chain {v} uses missing qubit {q}")
            if q in owner:
                violations.append(f"qubit {q} shared by chains {owner[q]} and {v}")
            owner[q] = v
        if not _chain_connected(chain, graph):
            violations.append(f"chain {v} is not connected")
    for (i, j) in model.quadratic:
        ci = embedding.chains.get(i, frozenset())
        cj = embedding.chains.get(j, frozenset())
        if not any(nb in cj for q in ci for nb in graph.adjacency.get(q, ())):
            violations.append(f"coupler ({i}, {j}) has no physical edge")
    return EmbeddingReport(not violations, violations)


class EmbeddingFailure(RuntimeError):
    pass


def embed_heuristic(model: QuboModel, graph: HardwareGraph,
                    seed: int = 0) -> Embedding:
    """Greedy chain-growth embedding.

    Variables are placed in descending coupling-degree order; each new
    variable takes the free qubit minimising the total shortest-path
    distance to its already-placed neighbours and claims the connecting
    paths as its chain. Deterministic given the seed (which only breaks
    ties in the placement order). Raises EmbeddingFailure when no free
    placement exists.
    """
    import random as _random

    rng = _random.Random(seed)
    degree: dict[int, int] = {v: 0 for v in range(model.num_vars)}
    neighbours: dict[int, set[int]] = {v: set() for v in range(model.num_vars)}
    for i, j in model.quadratic:
        degree[i] += 1
        degree[j] += 1
        neighbours[i].add(j)
        neighbours[j].add(i)
    order = sorted(range(model.num_vars), key=lambda v: (-degree[v], v))
    # seeded tie shuffle inside equal-degree groups
    grouped: list[int] = []
    i = 0
    while i < len(order):
        j = i
        while j < len(order) and degree[order[j]] == degree[order[i]]:
            j += 1
        block = order[i:j]
        rng.shuffle(block)
        grouped.extend(block)
        i = j
    order = grouped

    used: set[int] = set()
    chains: dict[int, frozenset[int]] = {}

    def bfs_from(sources) -> tuple[dict[int, int], dict[int, Optional[int]]]:
        """Distance and parent maps through free qubits from a placed chain."""
        dist: dict[int, int] = {}
        parent: dict[int, Optional[int]] = {}
        frontier = []
        for s in sorted(sources):
            for nb in sorted(graph.adjacency[s]):
                if nb not in used and nb not in dist:
                    dist[nb] = 0
                    parent[nb] = None
                    frontier.append(nb)
        while frontier:
            nxt = []
            for q in frontier:
                for nb in sorted(graph.adjacency[q]):
                    if nb not in used and nb not in dist:
                        dist[nb] = dist[q] + 1
                        parent[nb] = q
                        nxt.append(nb)
            frontier = nxt
        return dist, parent

    def place(v: int) -> set[int]:
        placed = [u for u in neighbours[v] if u in chains]
        if not placed:
            free = sorted(graph.nodes - used)
            if not free:
                raise EmbeddingFailure("no free qubits left")
            # prefer a high-degree (interior) qubit so later chains have room
            return {max(free, key=lambda q: (len(graph.adjacency[q]), -q))}
        # root: free qubit with the best (coverage, total distance) over the
        # placed neighbours, then connect the remaining targets one at a
        # time from the growing chain
        maps = {u: bfs_from(chains[u]) for u in placed}
        best = None
        for q in sorted(graph.nodes - used):
            reached = [u for u in placed if q in maps[u][0]]
            if not reached:
                continue
            total = sum(maps[u][0][q] for u in reached)
            key = (-len(reached), total, q)
            if best is None or key < best:
                best = key
        if best is None:
            raise EmbeddingFailure(f"no free qubit adjacent to neighbours of {v}")
        root = best[2]
        chain = {root}
        pending = []
        for u in placed:
            if root in maps[u][0]:
                parent = maps[u][1]
                q = root
                while parent.get(q) is not None:
                    q = parent[q]
                    chain.add(q)
            else:
                pending.append(u)
        for u in pending:
            # grow from the current chain towards chain(u) through free qubits
            dist: dict[int, int] = {q: 0 for q in chain}
            parent2: dict[int, Optional[int]] = {q: None for q in chain}
            frontier = sorted(chain)
            goal = None
            target = chains[u]
            target_adj = {q for tq in target for q in graph.adjacency[tq]}
            while frontier and goal is None:
                nxt = []
                for q in frontier:
                    if q in target_adj and q not in chains[u]:
                        goal = q
                        break
                    for nb in sorted(graph.adjacency[q]):
                        if nb in used or nb in dist or nb in chain:
                            continue
                        dist[nb] = dist[q] + 1
                        parent2[nb] = q
                        nxt.append(nb)
                frontier = nxt
            if goal is None:
                raise EmbeddingFailure(
                    f"cannot connect variable {v} to neighbour {u}")
            q = goal
            while q is not None and q not in chain:
                chain.add(q)
                q = parent2[q]
        return chain

    for v in order:
        chain = place(v)
        chains[v] = frozenset(chain)
        used.update(chain)
    return Embedding(chains, default_chain_strength(model))


# ---------------------------------------------------------------------------
# embedding transform and unembedding


@dataclass
class EmbeddedModel:
    """Physical model plus the qubit ordering of its variables."""

    model: QuboModel
    qubits: list[int]  # physical model variable i lives on qubits[i]
    embedding: Embedding

    def qubit_assignment(self, assignment: Iterable[int]) -> dict[int, int]:
        return dict(zip(self.qubits, assignment))


def default_chain_strength(model: QuboModel) -> int:
    """1 + the largest absolute coefficient in the logical model."""
    coeffs = [abs(c) for c in model.linear.values()]
    coeffs += [abs(c) for c in model.quadratic.values()]
    return 1 + (max(coeffs) if coeffs else 0)


def embed_model(model: QuboModel, embedding: Embedding, graph: HardwareGraph,
                chain_strength: Optional[float] = None) -> EmbeddedModel:
    """Map a logical model onto physical qubits through an embedding.

    Each linear coefficient spreads over its chain (integer split: the first
    |a_i| mod len qubits get one extra unit); each coupler lands on the
    lexicographically smallest physical edge between the two chains; chain
    agreement is enforced with chain_strength * (x_u + x_v - 2 x_u x_v) along
    a spanning tree of each chain, which keeps chain-consistent energies
    exactly equal to logical energies.
    """
    report = verify_embedding(model, graph, embedding)
    if not report.valid:
        raise ValueError("invalid embedding: " + "; ".join(report.violations))
    if chain_strength is None:
        chain_strength = embedding.chain_strength

    qubits = sorted(q for chain in embedding.chains.values() for q in chain)
    index = {q: i for i, q in enumerate(qubits)}
    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    roles: dict[int, str] = {}
    for v, chain in embedding.chains.items():
        for q in chain:
            roles[index[q]] = f"chain:{v}"

    for v, a in model.linear.items():
        chain = sorted(embedding.chains[v])
        n = len(chain)
        if isinstance(a, int):
            quot, rem = divmod(abs(a), n)
            sign = 1 if a >= 0 else -1
            for pos, q in enumerate(chain):
                part = sign * (quot + (1 if pos < rem else 0))
                if part:
                    linear[index[q]] = linear.get(index[q], 0) + part
        else:
            for q in chain:
                linear[index[q]] = linear.get(index[q], 0) + a / n

    for (i, j), b in model.quadratic.items():
        candidates = []
        for q in embedding.chains[i]:
            for nb in graph.adjacency[q]:
                if nb in embedding.chains[j]:
                    candidates.append(_edge(q, nb))
        u, v = min(candidates)
        key = (index[u], index[v]) if index[u] < index[v] else (index[v], index[u])
        quadratic[key] = quadratic.get(key, 0) + b

    for v, chain in embedding.chains.items():
        # spanning tree by BFS from the smallest qubit, sorted neighbours
        chain_set = set(chain)
        root = min(chain)
        seen = {root}
        frontier = [root]
        while frontier:
            q = frontier.pop(0)
            for nb in sorted(graph.adjacency[q]):
                if nb in chain_set and nb not in seen:
                    seen.add(nb)
                    frontier.append(nb)
                    a, b = index[q], index[nb]
                    key = (a, b) if a < b else (b, a)
                    linear[a] = linear.get(a, 0) + chain_strength
                    linear[b] = linear.get(b, 0) + chain_strength
                    quadratic[key] = quadratic.get(key, 0) - 2 * chain_strength

    linear = {i: c for i, c in linear.items() if c != 0}
    quadratic = {k: c for k, c in quadratic.items() if c != 0}
    phys = QuboModel(len(qubits), linear, quadratic, model.offset, roles)
    return EmbeddedModel(phys, qubits, embedding)


def unembed_sample(sample: dict[int, int], embedding: Embedding,
                   num_vars: int) -> tuple[list[int], int]:
    """Majority-vote chains back to logical bits; ties break to 0.

    sample maps physical qubit id -> bit. Returns (logical bits, number of
    broken chains).
    """
    out = [0] * num_vars
    broken = 0
    for v in range(num_vars):
        chain = embedding.chains[v]
        ones = sum(sample[q] for q in chain)
        zeros = len(chain) - ones
        out[v] = 1 if ones > zeros else 0
        if 0 < ones < len(chain):
            broken += 1
    return out, broken


# ---------------------------------------------------------------------------
# file formats


def write_defects(defects: Iterable[Defect], fh: TextIO):
    for d in defects:
        if isinstance(d, int):
            fh.write(f"{d}\n")
        else:
            fh.write(f"edge {d[0]} {d[1]}\n")


def read_defects(fh: TextIO) -> list[Defect]:
    out: list[Defect] = []
    for line in fh:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "edge":
            out.append((int(parts[1]), int(parts[2])))
        else:
            out.append(int(parts[0]))
    return out


def write_embedding(embedding: Embedding, fh: TextIO):
    for v in sorted(embedding.chains):
        ids = " ".join(str(q) for q in sorted(embedding.chains[v]))
        fh.write(f"chain {v} {ids}\n")


def read_embedding(fh: TextIO) -> Embedding:
    chains: dict[int, frozenset[int]] = {}
    for line in fh:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != "chain":
            raise ValueError(f"unexpected line in embedding file: {line!r}")
        chains[int(parts[1])] = frozenset(int(x) for x in parts[2:])
    return Embedding(chains)


def write_graph(graph: HardwareGraph, fh: TextIO):
    fh.write(f"# pegasus m={graph.m}\n")
    for n in sorted(graph.nodes):
        u, w, k, z = graph.coords[n]
        fh.write(f"node {n} {u} {w} {k} {z}\n")
    for a, b in sorted(graph.edges):
        fh.write(f"edge {a} {b}\n")


def read_graph(fh: TextIO) -> HardwareGraph:
    m = None
    nodes: set[int] = set()
    coords: dict[int, tuple[int, int, int, int]] = {}
    edges: set[tuple[int, int]] = set()
    for line in fh:
        line = line.strip()
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] == "pegasus":
                m = int(dict(p.split("=", 1) for p in parts[1:])["m"])
            continue
        if not line:
            continue
        parts = line.split()
        if parts[0] == "node":
            n = int(parts[1])
            nodes.add(n)
            coords[n] = tuple(int(x) for x in parts[2:6])
        elif parts[0] == "edge":
            edges.add(_edge(int(parts[1]), int(parts[2])))
    if m is None:
        raise ValueError("missing '# pegasus' header")
    return HardwareGraph(m, nodes, edges, coords)
