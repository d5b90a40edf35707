"""QUBO encodings of integer factorisation.

Three builders produce quadratic models whose minimum is 0 exactly at
assignments encoding the factors:

* direct: expand (N - p*q)^2 over the factor bits, quadratised with one
  reduction ancilla per unknown-bit product.
* mc: a long-multiplication array decomposed into Boolean AND and adder
  penalty gates, one ancilla per intermediate and/sum/carry bit.
* cfa: the same array fused into controlled-full-adder tiles, each a single
  quadratic penalty enforcing q*p + s_in + c_in = s_out + 2*c_out; the tile
  grid it returns drives the structured hardware placement.

All coefficients are integers and evaluation is exact integer arithmetic.
Factor bits use the encoding p = 1 p_{l_p-2} ... p_1 1 (top and bottom bits
fixed), so a factor of bit length l_p contributes l_p - 2 unknowns.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, TextIO, Union

__all__ = [
    "Var",
    "Bit",
    "QuboModel",
    "FactorEncoding",
    "Gate",
    "TileGrid",
    "build_direct",
    "build_mc",
    "build_cfa",
    "decode_sample",
    "evaluate_energy",
    "planted_direct",
    "planted_mc",
    "planted_cfa",
    "and_penalty",
    "adder_penalty",
    "cfa_penalty",
    "CFA_PENALTY_TERMS",
    "write_qubo",
    "read_qubo",
    "to_dense",
]


@dataclass(frozen=True)
class Var:
    """Reference to a model variable inside a gate or tile description."""

    index: int


Bit = Union[int, Var]  # constant 0/1 or a variable reference


@dataclass
class QuboModel:
    """offset + sum a_i x_i + sum_{i<j} b_ij x_i x_j, integer coefficients."""

    num_vars: int
    linear: dict[int, int]
    quadratic: dict[tuple[int, int], int]
    offset: int
    roles: dict[int, str]

    def energy(self, assignment: Iterable[int]) -> int:
        x = list(assignment)
        if len(x) != self.num_vars:
            raise ValueError(f"assignment length {len(x)} != {self.num_vars}")
        e = self.offset
        for i, a in self.linear.items():
            if x[i]:
                e += a
        for (i, j), b in self.quadratic.items():
            if x[i] and x[j]:
                e += b
        return e


def evaluate_energy(model: QuboModel, assignment: Iterable[int]) -> int:
    return model.energy(assignment)


@dataclass(frozen=True)
class FactorEncoding:
    """Index maps from unknown factor-bit positions to model variables.

    p_vars[i] is the variable holding bit i of p, for i = 1 .. l_p - 2;
    likewise q_vars. Bits 0 and l_p - 1 are fixed to 1.
    """

    l_p: int
    l_q: int
    p_vars: dict[int, int]
    q_vars: dict[int, int]

    @property
    def lp_star(self) -> int:
        return self.l_p - 2

    @property
    def lq_star(self) -> int:
        return self.l_q - 2

    @property
    def l(self) -> int:
        return self.lp_star + self.lq_star


def decode_sample(assignment: Iterable[int], encoding: FactorEncoding) -> tuple[int, int]:
    """Read (p, q) off the factor bits; ancillas are ignored."""
    x = list(assignment)
    p = 1 + (1 << (encoding.l_p - 1))
    for i, v in encoding.p_vars.items():
        if x[v]:
            p += 1 << i
    q = 1 + (1 << (encoding.l_q - 1))
    for k, v in encoding.q_vars.items():
        if x[v]:
            q += 1 << k
    return p, q


class _Acc:
    """Accumulates integer monomials into (offset, linear, quadratic)."""

    def __init__(self):
        self.offset = 0
        self.lin: dict[int, int] = defaultdict(int)
        self.quad: dict[tuple[int, int], int] = defaultdict(int)

    def add(self, coeff: int, bits: tuple[Bit, ...] = ()):
        if coeff == 0:
            return
        idxs = set()
        for b in bits:
            if isinstance(b, Var):
                idxs.add(b.index)
            elif b == 0:
                return
            elif b != 1:
                raise ValueError(f"constant bit must be 0/1, got {b}")
        idxs = sorted(idxs)
        if len(idxs) == 0:
            self.offset += coeff
        elif len(idxs) == 1:
            self.lin[idxs[0]] += coeff
        elif len(idxs) == 2:
            self.quad[(idxs[0], idxs[1])] += coeff
        else:
            raise ValueError("monomial degree > 2")

    def add_square(self, terms: list[tuple[int, Bit]], const: int = 0):
        """Add (const + sum c_t * bit_t)^2, reducing x^2 to x."""
        self.add(const * const)
        for c, b in terms:
            self.add(2 * const * c, (b,))
        n = len(terms)
        for i in range(n):
            ci, bi = terms[i]
            self.add(ci * ci, (bi, bi))
            for j in range(i + 1, n):
                cj, bj = terms[j]
                self.add(2 * ci * cj, (bi, bj))

    def finish(self, num_vars: int, roles: dict[int, str]) -> QuboModel:
        lin = {i: c for i, c in self.lin.items() if c != 0}
        quad = {k: c for k, c in self.quad.items() if c != 0}
        return QuboModel(num_vars, lin, quad, self.offset, roles)


class _VarFactory:
    def __init__(self):
        self.count = 0
        self.roles: dict[int, str] = {}

    def new(self, role: str) -> Var:
        v = Var(self.count)
        self.roles[self.count] = role
        self.count += 1
        return v


def _factor_bits(length: int, var_of: dict[int, int]) -> list[Bit]:
    """Bit list (LSB first) of a factor with fixed outer bits."""
    bits: list[Bit] = [1]
    for i in range(1, length - 1):
        bits.append(Var(var_of[i]))
    bits.append(1)
    return bits


def _check_pre(n: int, l_p: int, l_q: int):
    if n % 2 == 0:
        raise ValueError("N must be odd")
    if l_p < 3 or l_q < 3:
        raise ValueError("factor bit lengths must be >= 3")
    if abs((l_p + l_q) - (n.bit_length() + 1)) > 1:
        raise ValueError(
            f"l_p + l_q = {l_p + l_q} incompatible with {n.bit_length()}-bit N"
        )


def _make_encoding(l_p: int, l_q: int, fac: _VarFactory) -> FactorEncoding:
    p_vars = {i: fac.new(f"p:{i}").index for i in range(1, l_p - 1)}
    q_vars = {k: fac.new(f"q:{k}").index for k in range(1, l_q - 1)}
    return FactorEncoding(l_p, l_q, p_vars, q_vars)


# ---------------------------------------------------------------------------
# direct method: (N - p*q)^2 with product-pair reduction ancillas


def build_direct(n: int, l_p: int, l_q: int) -> tuple[QuboModel, FactorEncoding]:
    """Expand (N - p*q)^2; substitute w_ik = p_i * q_k with a penalty term.

    The penalty weight is 1 + 2 * (largest absolute coefficient on any term
    containing a reduction ancilla in the expanded square), so breaking a
    constraint can never pay off.
    """
    _check_pre(n, l_p, l_q)
    if n.bit_length() > 31:
        raise OverflowError("N^2 exceeds the supported 2^62 coefficient range")
    fac = _VarFactory()
    enc = _make_encoding(l_p, l_q, fac)
    w: dict[tuple[int, int], Var] = {}
    for i in range(1, l_p - 1):
        for k in range(1, l_q - 1):
            w[(i, k)] = fac.new(f"red:{i}:{k}")

    # p*q as a linear form over (p_i, q_k, w_ik)
    cp = 1 + (1 << (l_p - 1))
    cq = 1 + (1 << (l_q - 1))
    terms: list[tuple[int, Bit]] = []
    for i in range(1, l_p - 1):
        terms.append((cq << i, Var(enc.p_vars[i])))
    for k in range(1, l_q - 1):
        terms.append((cp << k, Var(enc.q_vars[k])))
    for (i, k), wv in w.items():
        terms.append((1 << (i + k), wv))

    acc = _Acc()
    acc.add_square([(-c, b) for c, b in terms], const=n - cp * cq)

    # penalty weight from the expanded square's coefficients on w terms
    w_idx = {v.index for v in w.values()}
    max_w_coeff = 0
    for i, c in acc.lin.items():
        if i in w_idx:
            max_w_coeff = max(max_w_coeff, abs(c))
    for (i, j), c in acc.quad.items():
        if i in w_idx or j in w_idx:
            max_w_coeff = max(max_w_coeff, abs(c))
    lam = 1 + 2 * max_w_coeff
    for (i, k), wv in w.items():
        pi, qk = Var(enc.p_vars[i]), Var(enc.q_vars[k])
        acc.add(lam, (pi, qk))
        acc.add(-2 * lam, (pi, wv))
        acc.add(-2 * lam, (qk, wv))
        acc.add(3 * lam, (wv,))

    return acc.finish(fac.count, fac.roles), enc


def planted_direct(encoding: FactorEncoding, model: QuboModel, p: int, q: int) -> list[int]:
    """Assignment with factor bits of (p, q) and consistent reduction bits."""
    x = [0] * model.num_vars
    for i, v in encoding.p_vars.items():
        x[v] = (p >> i) & 1
    for k, v in encoding.q_vars.items():
        x[v] = (q >> k) & 1
    for idx, role in model.roles.items():
        if role.startswith("red:"):
            _, i, k = role.split(":")
            x[idx] = ((p >> int(i)) & 1) * ((q >> int(k)) & 1)
    return x


# ---------------------------------------------------------------------------
# multiplication-circuit method: AND + adder penalty gates


@dataclass(frozen=True)
class Gate:
    """One penalty gate of the multiplication array.

    kind "and":   inputs (a, b), outputs (z,);      z = a AND b
    kind "adder": inputs = variable addends, const = constant addend,
                  outputs (s, c);  sum(inputs) + const = s + 2c
    """

    kind: str
    inputs: tuple[Bit, ...]
    outputs: tuple[Bit, ...]
    const: int = 0


def and_penalty(a: Bit, b: Bit, z: Bit) -> list[tuple[int, tuple[Bit, ...]]]:
    """Rosenberg penalty ab - 2(a+b)z + 3z: 0 iff z = a AND b, else >= 1."""
    return [(1, (a, b)), (-2, (a, z)), (-2, (b, z)), (3, (z,))]


def adder_penalty(addends: tuple[Bit, ...], const: int, s: Bit, c: Bit):
    """(sum addends + const - s - 2c)^2 as a term list for add_square."""
    terms = [(1, b) for b in addends]
    terms.append((-1, s))
    terms.append((-2, c))
    return terms, const


def _emit_adder(acc: _Acc, fac: _VarFactory, gates: list[Gate],
                addends: list[Bit], forced_s: Optional[Bit],
                forced_c: Optional[Bit] = None):
    """Create an adder for `addends`; returns (s_out, c_out) bits.

    forced_s / forced_c pin outputs to bits of N. When the addend total
    cannot reach 2 the carry is the constant 0, and trivial adders collapse
    to aliases without emitting a gate.
    """
    const = sum(b for b in addends if not isinstance(b, Var))
    vars_ = tuple(b for b in addends if isinstance(b, Var))
    max_total = const + len(vars_)

    if forced_s is None and forced_c is None:
        if not vars_:
            return const & 1, const >> 1
        if const == 0 and len(vars_) == 1:
            return vars_[0], 0

    s: Bit = forced_s if forced_s is not None else fac.new("sum")
    if forced_c is not None:
        c: Bit = forced_c
    elif not vars_:
        c = const >> 1
    elif max_total >= 2:
        c = fac.new("carry")
    else:
        c = 0
    terms, k = adder_penalty(vars_, const, s, c)
    acc.add_square(terms, k)
    gates.append(Gate("adder", vars_, (s, c), const))
    return s, c


def build_mc(n: int, l_p: int, l_q: int) -> tuple[QuboModel, FactorEncoding, list[Gate]]:
    """Long-multiplication array of AND / half-adder / full-adder penalties.

    Row i adds q_i * p (shifted by i) into a running sum; carries ripple
    along each row, and the row's final carry feeds the next row's top
    column. Output bits are substituted with the bits of N, never penalised
    as free variables.
    """
    _check_pre(n, l_p, l_q)
    fac = _VarFactory()
    enc = _make_encoding(l_p, l_q, fac)
    acc = _Acc()
    gates: list[Gate] = []

    p_bits = _factor_bits(l_p, enc.p_vars)
    q_bits = _factor_bits(l_q, enc.q_vars)
    nbit = lambda b: (n >> b) & 1

    def product(qb: Bit, pb: Bit) -> Bit:
        if isinstance(qb, Var) and isinstance(pb, Var):
            z = fac.new("and")
            for coeff, bits in and_penalty(qb, pb, z):
                acc.add(coeff, bits)
            gates.append(Gate("and", (qb, pb), (z,)))
            return z
        if qb == 0 or pb == 0:
            return 0
        return pb if qb == 1 else qb

    # s_row[j] = sum bit of weight (current row index + j) carried forward
    s_row: list[Bit] = list(p_bits)  # row 0: q_0 = 1, sum = p, no carries
    row_end_carry: Bit = 0
    for i in range(1, l_q):
        next_row: list[Bit] = [0] * l_p
        carry: Bit = 0
        for j in range(l_p):
            m = product(q_bits[i], p_bits[j])
            s_in: Bit = s_row[j + 1] if j + 1 < l_p else row_end_carry
            addends = [m, s_in, carry]
            forced: Optional[Bit] = None
            if (j == 0 and i < l_q - 1) or i == l_q - 1:
                forced = nbit(i + j)
            last = i == l_q - 1 and j == l_p - 1
            s_out, carry = _emit_adder(acc, fac, gates, addends, forced,
                                       forced_c=nbit(i + j + 1) if last else None)
            next_row[j] = s_out
        row_end_carry = carry
        s_row = next_row
    return acc.finish(fac.count, fac.roles), enc, gates


def planted_mc(gates: list[Gate], encoding: FactorEncoding, model: QuboModel,
               p: int, q: int) -> list[int]:
    """Forward-evaluate the gate list from the factor bits."""
    x = [0] * model.num_vars
    for i, v in encoding.p_vars.items():
        x[v] = (p >> i) & 1
    for k, v in encoding.q_vars.items():
        x[v] = (q >> k) & 1

    def val(b: Bit) -> int:
        return x[b.index] if isinstance(b, Var) else b

    for g in gates:
        if g.kind == "and":
            z = g.outputs[0]
            if isinstance(z, Var):
                x[z.index] = val(g.inputs[0]) & val(g.inputs[1])
        else:
            total = sum(val(b) for b in g.inputs) + g.const
            s, c = g.outputs
            if isinstance(s, Var):
                x[s.index] = total & 1
            if isinstance(c, Var):
                x[c.index] = total >> 1
    return x


# ---------------------------------------------------------------------------
# controlled-full-adder method


# Quadratic penalty for q*p + si + ci = so + 2co over the six variables,
# found by exhaustive search over coefficient space: value 0 exactly on the
# 16 satisfying rows, >= 1 on the other 48, with every pairwise coupler
# realisable inside one 8-qubit hardware cell.
CFA_PENALTY_TERMS: list[tuple[int, tuple[str, ...]]] = [
    (1, ("si",)), (1, ("ci",)), (3, ("so",)), (10, ("co",)),
    (1, ("q", "p")),
    (2, ("q", "si")), (2, ("q", "ci")), (-2, ("q", "so")), (-4, ("q", "co")),
    (2, ("p", "si")), (2, ("p", "ci")), (-2, ("p", "so")), (-4, ("p", "co")),
    (4, ("si", "ci")), (-4, ("si", "so")), (-8, ("si", "co")),
    (-4, ("ci", "so")), (-8, ("ci", "co")), (8, ("so", "co")),
]


def cfa_penalty(q: Bit, p: Bit, si: Bit, ci: Bit, so: Bit, co: Bit):
    """The tile penalty as (coeff, bits) monomials with constants folded."""
    env = {"q": q, "p": p, "si": si, "ci": ci, "so": so, "co": co}
    return [(c, tuple(env[nm] for nm in names)) for c, names in CFA_PENALTY_TERMS]


@dataclass(frozen=True)
class Tile:
    """One controlled-adder tile; fields are variable refs or 0/1 constants."""

    row: int
    col: int
    q: Bit
    p: Bit
    si: Bit
    ci: Bit
    so: Bit
    co: Bit

    def bits(self) -> dict[str, Bit]:
        return {"q": self.q, "p": self.p, "si": self.si, "ci": self.ci,
                "so": self.so, "co": self.co}


@dataclass
class TileGrid:
    """Tile array for rows 1..l_q-1 (row 0 is the pass-through q_0 = 1)."""

    l_p: int
    l_q: int
    tiles: dict[tuple[int, int], Tile] = field(default_factory=dict)

    @property
    def rows(self) -> range:
        return range(1, self.l_q)

    @property
    def cols(self) -> range:
        return range(self.l_p)


def build_cfa(n: int, l_p: int, l_q: int) -> tuple[QuboModel, FactorEncoding, TileGrid]:
    """Controlled-full-adder tile array.

    Tile (i, j) enforces q_i*p_j + s_in + c_in = s_out + 2*c_out through one
    quadratic penalty. Row 0 of the schoolbook array is the identity
    (q_0 = 1) so its sums are the p bits themselves; output bits are
    substituted with the bits of N.
    """
    _check_pre(n, l_p, l_q)
    fac = _VarFactory()
    enc = _make_encoding(l_p, l_q, fac)
    acc = _Acc()
    grid = TileGrid(l_p, l_q)

    p_bits = _factor_bits(l_p, enc.p_vars)
    q_bits = _factor_bits(l_q, enc.q_vars)
    nbit = lambda b: (n >> b) & 1

    # s_row[j]: weight-(i+j) sum bit entering row i at column j-1's s_in slot
    s_row: list[Bit] = list(p_bits)
    row_end_carry: Bit = 0  # row 0 produces no carries
    for i in range(1, l_q):
        next_row: list[Bit] = [0] * l_p
        carry: Bit = 0
        for j in range(l_p):
            si: Bit = s_row[j + 1] if j + 1 < l_p else row_end_carry
            ci = carry
            if j == 0 and i < l_q - 1:
                so: Bit = nbit(i)
            elif i == l_q - 1:
                so = nbit(i + j)
            else:
                so = fac.new("sum")
            if i == l_q - 1 and j == l_p - 1:
                co: Bit = nbit(i + j + 1)
            else:
                co = fac.new("carry")
            tile = Tile(i, j, q_bits[i], p_bits[j], si, ci, so, co)
            grid.tiles[(i, j)] = tile
            for coeff, bits in cfa_penalty(**tile.bits()):
                acc.add(coeff, bits)
            next_row[j] = so
            carry = co
        row_end_carry = carry
        s_row = next_row

    return acc.finish(fac.count, fac.roles), enc, grid


def planted_cfa(grid: TileGrid, encoding: FactorEncoding, model: QuboModel,
                p: int, q: int) -> list[int]:
    """Forward-evaluate the tile array from the factor bits."""
    x = [0] * model.num_vars
    for i, v in encoding.p_vars.items():
        x[v] = (p >> i) & 1
    for k, v in encoding.q_vars.items():
        x[v] = (q >> k) & 1

    def val(b: Bit) -> int:
        return x[b.index] if isinstance(b, Var) else b

    for i in grid.rows:
        for j in grid.cols:
            t = grid.tiles[(i, j)]
            total = val(t.q) * val(t.p) + val(t.si) + val(t.ci)
            if isinstance(t.so, Var):
                x[t.so.index] = total & 1
            if isinstance(t.co, Var):
                x[t.co.index] = total >> 1
    return x


# ---------------------------------------------------------------------------
# text format and dense form

def write_qubo(model: QuboModel, fh: TextIO):
    """Bit-exact text serialisation; i == j lines carry linear terms."""
    fh.write(f"# qubo n={model.num_vars} offset={model.offset}\n")
    for i in range(model.num_vars):
        fh.write(f"# var {i} {model.roles.get(i, 'x')}\n")
    entries = [(i, i, c) for i, c in model.linear.items()]
    entries += [(i, j, c) for (i, j), c in model.quadratic.items()]
    for i, j, c in sorted(entries):
        fh.write(f"{i} {j} {c}\n")


def read_qubo(fh: TextIO) -> QuboModel:
    num_vars = None
    offset = 0
    roles: dict[int, str] = {}
    linear: dict[int, int] = {}
    quadratic: dict[tuple[int, int], int] = {}
    for line in fh:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts[:1] == ["qubo"]:
                kv = dict(p.split("=", 1) for p in parts[1:])
                num_vars = int(kv["n"])
                offset = int(kv["offset"])
            elif parts[:1] == ["var"]:
                roles[int(parts[1])] = parts[2]
            continue
        i, j, c = line.split()
        i, j, c = int(i), int(j), int(c)
        if i == j:
            linear[i] = c
        elif i < j:
            quadratic[(i, j)] = c
        else:
            quadratic[(j, i)] = c
    if num_vars is None:
        raise ValueError("missing '# qubo' header")
    return QuboModel(num_vars, linear, quadratic, offset, roles)


def to_dense(model: QuboModel):
    """(linear vector, upper-triangular coupling matrix, offset) as numpy."""
    import numpy as np

    a = np.zeros(model.num_vars, dtype=np.float64)
    for i, c in model.linear.items():
        a[i] = c
    b = np.zeros((model.num_vars, model.num_vars), dtype=np.float64)
    for (i, j), c in model.quadratic.items():
        b[i, j] = c
    return a, b, model.offset
