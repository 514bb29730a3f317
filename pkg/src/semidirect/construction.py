"""The product alphabet, its local rules and the explicit configuration y*.

A cell carries, for every q in 1..p-1 and every s in S, a horizontal and a
vertical Toeplitz symbol, plus one bit per non-zero vector v of (Z/pZ)^2
telling whether the cell is black in the Sub_v layer.

For a point x* of an H-flow, y^h is the Z^2 configuration whose horizontal
layer (a, s) is Psi_a(f_{sh}(x*)) read along the first coordinate, whose
vertical layer (b, s) is the same word read along the second coordinate, and
whose Sub_(a,b) layer is z_(a,b). The configuration on G is
y*((i,j), h) = y^{h^-1}(A_{h^-1}(i,j)).
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .flows import BudgetExceeded, FlowOracle, RecodedFlow
from .groups import GElem, ModMatrix, Semidirect
from .substitutions import NotSubstitutive, Patch, SubRule, decompose_lattices, nonzero_vectors
from .toeplitz import GAP, psi_level


class Inconsistent(ValueError):
    """Two cells of one lattice carry different symbols."""


@dataclass(frozen=True)
class CellSymbol:
    hlayers: dict  # (q, s) -> '0' | '1' | '$'
    vlayers: dict
    subs: dict  # (a, b) -> bool, True = black

    def key(self) -> tuple:
        return (
            tuple(sorted(self.hlayers.items())),
            tuple(sorted(self.vlayers.items())),
            tuple(sorted(self.subs.items())),
        )

    def __hash__(self):
        return hash(self.key())

    def replace(self, field: str, index, value) -> CellSymbol:
        parts = {"hlayers": dict(self.hlayers), "vlayers": dict(self.vlayers), "subs": dict(self.subs)}
        if index not in parts[field]:
            raise KeyError(index)
        parts[field][index] = value
        return CellSymbol(**parts)


class CellLayout:
    """Index sets of the product alphabet for a given p and S."""

    def __init__(self, p: int, generators: Iterable[str]):
        self.p = p
        self.generators = tuple(generators)
        self.identity = self.generators[0]
        self.layer_keys = [(q, s) for q in range(1, p) for s in self.generators]
        self.vectors = nonzero_vectors(p)

    def blank(self) -> CellSymbol:
        return CellSymbol(
            {k: GAP for k in self.layer_keys},
            {k: GAP for k in self.layer_keys},
            {v: False for v in self.vectors},
        )

    def serialize(self, c: CellSymbol) -> str:
        hl = "".join(c.hlayers[k] for k in self.layer_keys)
        vl = "".join(c.vlayers[k] for k in self.layer_keys)
        sb = "".join("#" if c.subs[v] else "." for v in self.vectors)
        return f"{hl} {vl} {sb}"

    def deserialize(self, text: str) -> CellSymbol:
        hl, vl, sb = text.split()
        if len(hl) != len(self.layer_keys) or len(vl) != len(self.layer_keys) or len(sb) != len(self.vectors):
            raise ValueError(f"bad cell record {text!r}")
        if set(hl + vl) - {"0", "1", GAP} or set(sb) - {".", "#"}:
            raise ValueError(f"bad cell symbols {text!r}")
        return CellSymbol(
            dict(zip(self.layer_keys, hl)),
            dict(zip(self.layer_keys, vl)),
            {v: ch == "#" for v, ch in zip(self.vectors, sb)},
        )


# ---------------------------------------------------------------------------
# local rules


def pi_cell_check(c: CellSymbol, p: int = 3, identity: str = "e") -> bool:
    """Cell rules of the product alphabet.

    Rule 1 is checked in the direction black => layer symbol in {0,1}: the
    reverse direction already fails at the cell (1,0) of a genuine y^h,
    where the horizontal layer carries x_0 while Sub_(1,1) is white.
    Rule 2: a black Sub_(1,1) cell has equal horizontal and vertical
    q = 1 symbols for every s.
    """
    for (a, b), black in c.subs.items():
        if not black:
            continue
        if a % p and c.hlayers[(a % p, identity)] == GAP:
            return False
        if b % p and c.vlayers[(b % p, identity)] == GAP:
            return False
    if c.subs.get((1, 1)):
        for (q, s), sym in c.hlayers.items():
            if q == 1 and sym != c.vlayers[(1, s)]:
                return False
    return True


def glue_check(s: str, c1: CellSymbol, c2: CellSymbol, M: ModMatrix, identity: str = "e") -> bool:
    """Glue rule between the cells at g and g (0, s^-1); M is phi~_{s^-1}."""
    a, b = M.apply((1, 1))
    if not c1.subs[(a, b)]:
        return True
    if not c2.subs[(1, 1)]:
        return False
    if a and c1.hlayers[(a, s)] != c2.hlayers[(1, identity)]:
        return False
    if b and c1.vlayers[(b, s)] != c2.vlayers[(1, identity)]:
        return False
    return True


def build_zab(p: int, v: tuple[int, int], pos: tuple[int, int]) -> bool:
    """Black iff pos = p^m v mod p^(m+1) for some m >= 0; the origin is white."""
    a, b = v[0] % p, v[1] % p
    if (a, b) == (0, 0):
        raise ValueError("v must be non-zero mod p")
    i, j = pos
    if i == 0 and j == 0:
        return False
    # only m = min valuation can work
    while i % p == 0 and j % p == 0:
        i //= p
        j //= p
    return (i % p, j % p) == (a, b)


# ---------------------------------------------------------------------------
# y^h and y*


class Construction:
    """Evaluates y^h and y* for a flow with an exact layer."""

    def __init__(self, flow: FlowOracle, p: int = 3):
        if not flow.has_exact_layer:
            raise BudgetExceeded("the flow has no exact layer")
        self.flow = flow
        self.H = flow.group
        self.G = Semidirect(self.H, p)
        self.p = p
        self.layout = CellLayout(p, self.H.generators)
        self._gens = {s: self.H.evaluate(s) for s in self.H.generators}

    def yh(self, h, pos: tuple[int, int]) -> CellSymbol:
        """Cell of y^h at pos, h a canonical element of H."""
        p, H, flow = self.p, self.H, self.flow
        i, j = pos
        hl, vl = {}, {}
        for s, se in self._gens.items():
            sh = H.mul(se, h)
            for q in range(1, p):
                n = psi_level(p, q, i)
                hl[(q, s)] = GAP if n is None else str(flow.point_bit(sh, n))
                n = psi_level(p, q, j)
                vl[(q, s)] = GAP if n is None else str(flow.point_bit(sh, n))
        subs = {v: build_zab(p, v, pos) for v in self.layout.vectors}
        return CellSymbol(hl, vl, subs)

    def ystar(self, g: GElem) -> CellSymbol:
        hi = self.H.inv(g.h)
        return self.yh(hi, self.H.matrix(hi).apply(g.vec))


def build_yh(flow: FlowOracle, h_word: str, pos, p: int = 3) -> CellSymbol:
    con = Construction(flow, p)
    return con.yh(flow.group.evaluate(h_word), tuple(pos))


def build_ystar(flow: FlowOracle, g: GElem, p: int = 3) -> CellSymbol:
    return Construction(flow, p).ystar(g)


class PointOracle:
    """Memoized evaluation g -> y(g) of a configuration on G."""

    def __init__(self, G: Semidirect, layout: CellLayout, evaluate: Callable[[GElem], CellSymbol], provenance=None):
        self.G = G
        self.layout = layout
        self.p = G.p
        self._evaluate = evaluate
        self.provenance = provenance
        self._memo: dict = {}
        self._lock = threading.Lock()

    def __call__(self, g: GElem) -> CellSymbol:
        with self._lock:
            hit = self._memo.get(g)
        if hit is not None:
            return hit
        cell = self._evaluate(g)
        with self._lock:
            return self._memo.setdefault(g, cell)

    @classmethod
    def for_flow(cls, flow: FlowOracle, p: int = 3) -> PointOracle:
        con = Construction(flow, p)
        return cls(con.G, con.layout, con.ystar, provenance=flow)

    def shifted(self, g0: GElem) -> PointOracle:
        """The oracle of sigma_{g0} y, that is g -> y(g0^-1 g)."""
        gi = self.G.inv(g0)
        return PointOracle(self.G, self.layout, lambda g: self(self.G.mul(gi, g)), provenance=self.provenance)

    def coset_view(self, h) -> Callable[[tuple[int, int]], CellSymbol]:
        """(i,j) -> (sigma_{(0,h^-1)} y)((i,j), 1) = y((A_h(i,j), h))."""
        A = self.G.H.matrix(h)
        return lambda pos: self(GElem(A.apply(pos), h))


class TableOracle(PointOracle):
    """A configuration known only on a finite set of cells (e.g. a dump)."""

    def __init__(self, G: Semidirect, layout: CellLayout, cells: dict, provenance=None):
        def lookup(g):
            try:
                return cells[g]
            except KeyError:
                raise BudgetExceeded(f"cell {G.format(g)} is not in the table") from None

        super().__init__(G, layout, lookup, provenance)
        self.cells = cells


# ---------------------------------------------------------------------------
# decoding


def centered_window(side: int) -> tuple[int, int]:
    lo = -(side // 2)
    return lo, lo + side - 1


def upsilon_decode(oracle: PointOracle, depth: int, layer: tuple[int, int] = (1, 1)) -> list[int]:
    """Read x_0..x_{depth-1} off the lattices of the Sub_(1,1) layer on (Z^2, 1_H)."""
    if depth <= 0:
        return []
    p = oracle.p
    H = oracle.G.H
    ident = oracle.layout.identity
    side = p ** depth
    lo, _ = centered_window(side)
    cells = {(i, j): oracle(GElem((i, j), H.identity)) for i in range(lo, lo + side) for j in range(lo, lo + side)}
    black = [pos for pos, c in cells.items() if c.subs[layer]]
    patch = Patch.from_black(black, (lo, lo), side, side)
    try:
        dec = decompose_lattices(SubRule(p, layer), patch, depth - 1)
    except NotSubstitutive as exc:
        raise Inconsistent(f"Sub_{layer} layer has no lattice structure: {exc}") from exc
    out = []
    for m in range(depth):
        syms = {cells[pos].hlayers[(layer[0], ident)] for pos in dec.lattice(m).cells_in((lo, lo), side, side, p)}
        if len(syms) != 1:
            raise Inconsistent(f"lattice B_{m} carries {sorted(syms)}")
        sym = syms.pop()
        if sym == GAP:
            raise Inconsistent(f"lattice B_{m} carries the gap symbol")
        out.append(int(sym))
    return out


def proj_phi(u) -> int:
    """0 iff the cyclic word u contains the pair (0, $)."""
    u = tuple(str(c) for c in u)
    n = len(u)
    return 0 if any(u[k] == "0" and u[(k + 1) % n] == GAP for k in range(n)) else 1


def proj_phi_bits(row, k: int, p: int = 3) -> list[int]:
    """k bits from a row of a q = 1 Toeplitz layer starting at position 0.

    Bit n is read by proj_phi on the positions 0, p^n, 2 p^n, i.e. on the
    window of the n-fold Omega_0 derivative.
    """
    if len(row) < 2 * p ** (k - 1) + 1:
        raise ValueError("row too short for k bits")
    return [proj_phi((row[0], row[p ** n], row[2 * p ** n])) for n in range(k)]


def projective_read(oracle: PointOracle, hs: Iterable, flow: Optional[FlowOracle] = None) -> dict:
    """H-projective read-back: h -> symbol of the source subshift at h."""
    flow = flow or oracle.provenance
    k = getattr(flow, "k", 1)
    p = oracle.p
    ident = oracle.layout.identity
    out = {}
    for h in hs:
        view = oracle.coset_view(h)
        row = [view((i, 0)).hlayers[(1, ident)] for i in range(p ** k)]
        bits = proj_phi_bits(row, k, p)
        out[h] = flow.symbol(bits) if isinstance(flow, RecodedFlow) else bits[0]
    return out


# ---------------------------------------------------------------------------
# dumps and rendering


def window_cells(G: Semidirect, h, depth: int) -> list[GElem]:
    """Cells of the normalized coset window of side p^(depth+1) at h."""
    side = G.p ** (depth + 1)
    lo, hi = centered_window(side)
    A = G.H.matrix(h)
    return [GElem(A.apply((i, j)), h) for i in range(lo, hi + 1) for j in range(lo, hi + 1)]


def glue_partners(G: Semidirect, g: GElem) -> list[GElem]:
    H = G.H
    return [G.mul(g, GElem((0, 0), H.inv(H.evaluate(s)))) for s in H.generators]


def support_of(G: Semidirect, ball: list[GElem], depth: int) -> list[GElem]:
    """Cells outside the ball that verification at this depth reads."""
    inside = set(ball)
    extra: dict = {}
    for g in ball:
        for u in glue_partners(G, g):
            if u not in inside:
                extra.setdefault(u, None)
    for h in dict.fromkeys(g.h for g in ball):
        for u in window_cells(G, h, depth):
            if u not in inside:
                extra.setdefault(u, None)
    return list(extra)


DUMP_MAGIC = "# semidirect dump 1"


def format_dump(config: dict, oracle: PointOracle, ball: list[GElem], support: list[GElem]) -> str:
    G, layout = oracle.G, oracle.layout
    lines = [DUMP_MAGIC, json.dumps(config, sort_keys=True)]
    for tag, cells in (("ball", ball), ("support", support)):
        for g in cells:
            lines.append(f"{tag} {G.format(g)} {layout.serialize(oracle(g))}")
    return "\n".join(lines) + "\n"


def parse_dump(text: str, G: Optional[Semidirect] = None):
    """Returns (config, ball elements, table oracle)."""
    from .flows import parse_flow

    lines = [l for l in text.splitlines() if l.strip()]
    if not lines or lines[0].strip() != DUMP_MAGIC:
        raise ValueError("not a dump file")
    config = json.loads(lines[1])
    if G is None:
        flow = parse_flow(config["flow"], config["group"])
        G = Semidirect(flow.group, config.get("p", 3))
    layout = CellLayout(G.p, G.H.generators)
    ball, cells = [], {}
    for k, line in enumerate(lines[2:], start=3):
        parts = line.split()
        if len(parts) != 7 or parts[0] not in ("ball", "support"):
            raise ValueError(f"line {k}: bad record")
        g = G.parse(" ".join(parts[1:4]))
        cells[g] = layout.deserialize(" ".join(parts[4:]))
        if parts[0] == "ball":
            ball.append(g)
    return config, ball, TableOracle(G, layout, cells)


def render_coset(oracle: PointOracle, h, layer: str, side: int = 27) -> str:
    """ASCII picture of the normalized coset window at h.

    ``layer`` is ``sub:a,b`` (black '#', white '.'), ``h:q,s`` or ``v:q,s``
    (the layer symbols themselves). The top row has the largest j.
    """
    kind, _, idx = layer.partition(":")
    parts = idx.split(",")
    view = oracle.coset_view(h)
    lo, hi = centered_window(side)

    if kind == "sub":
        v = (int(parts[0]), int(parts[1]))
        glyph = lambda c: "#" if c.subs[v] else "."
    elif kind in ("h", "v"):
        key = (int(parts[0]), parts[1])
        attr = "hlayers" if kind == "h" else "vlayers"
        glyph = lambda c: getattr(c, attr)[key]
    else:
        raise ValueError(f"unknown layer selection {layer!r}")
    rows = []
    for j in range(hi, lo - 1, -1):
        rows.append("".join(glyph(view((i, j))) for i in range(lo, hi + 1)))
    return "\n".join(rows) + "\n"
