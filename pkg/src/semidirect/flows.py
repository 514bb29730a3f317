"""Effectively closed H-flows on {0,1}^N as budget-truncated oracles.

A flow is described by cylinders, i.e. partial assignments of bits to
coordinates, that avoid X. Subshifts over H are turned into flows by the
recoding rho(z)_n = z_{phi(n)}, where phi enumerates words over the letters
of H in length-lex order. With an alphabet of c > 2 symbols every coordinate
takes k = ceil(log2 c) bits.

Conventions: (sigma^h z)_g = z_{h^-1 g} and f_h(x)_n = x at the coordinates of
h^-1 phi(n), so that f_h(rho z) = rho(sigma^h z).
"""

from __future__ import annotations

import itertools
import json
import math
import threading
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .groups import HGroup, group_from_spec

Cylinder = tuple  # sorted tuple of (coordinate, bit)


class BudgetExceeded(RuntimeError):
    pass


class NoColoringFound(RuntimeError):
    pass


def cylinder(assign: dict) -> Cylinder:
    return tuple(sorted(assign.items()))


def matches(cyl: Cylinder, bits: Sequence[int]) -> bool:
    """True when the finite word ``bits`` already lies inside the cylinder."""
    n = len(bits)
    return all(i < n and bits[i] == b for i, b in cyl)


def merge(cyls: Iterable[Cylinder]) -> Optional[Cylinder]:
    """Intersection of cylinders, or None when it is empty."""
    out = {}
    for cyl in cyls:
        for i, b in cyl:
            if out.setdefault(i, b) != b:
                return None
    return cylinder(out)


def covered(cyl: Cylinder, forbidden: Iterable[Cylinder]) -> bool:
    """Decide whether [cyl] is contained in the union of the forbidden cylinders."""
    forbidden = list(forbidden)

    def rec(assign: dict, pool: list) -> bool:
        live = []
        for f in pool:
            if all(assign.get(i, b) == b for i, b in f):
                if all(i in assign for i, _ in f):
                    return True
                live.append(f)
        if not live:
            return False
        # branch on a free coordinate of the shortest live cylinder
        f = min(live, key=len)
        i = next(i for i, _ in f if i not in assign)
        return all(rec({**assign, i: b}, live) for b in (0, 1))

    return rec(dict(cyl), forbidden)


# ---------------------------------------------------------------------------
# coordinates


class WordEnumeration:
    """phi: N -> H through length-lex words over S and the inverse letters."""

    def __init__(self, H: HGroup, limit: int = 200_000):
        self.H = H
        self.limit = limit
        self._words: list[str] = []
        self._elems: list = []
        self._first: dict = {}
        self._gen = self._walk()
        self._lock = threading.Lock()

    def _walk(self):
        n = 0
        while True:
            for tup in itertools.product(self.H.letters, repeat=n):
                yield "".join(tup)
            n += 1

    def _extend(self, size: int):
        while len(self._words) < size:
            w = next(self._gen)
            h = self.H.evaluate(w)
            self._first.setdefault(h, len(self._words))
            self._words.append(w)
            self._elems.append(h)

    def word(self, n: int) -> str:
        with self._lock:
            self._extend(n + 1)
            return self._words[n]

    def element(self, n: int):
        with self._lock:
            self._extend(n + 1)
            return self._elems[n]

    def index_of(self, h, limit: Optional[int] = None) -> Optional[int]:
        """Smallest n with phi(n) = h, searching at most ``limit`` coordinates."""
        limit = self.limit if limit is None else limit
        with self._lock:
            if h in self._first:
                n = self._first[h]
                return n if n < limit else None
            while len(self._words) < limit:
                self._extend(len(self._words) + 1)
                if h in self._first:
                    return self._first[h]
        return None


# ---------------------------------------------------------------------------
# subshifts


@dataclass(frozen=True)
class PatternCoding:
    """Finite pattern named by (word over S and inverses, symbol) pairs."""

    items: tuple

    def __post_init__(self):
        object.__setattr__(self, "items", tuple((str(w), s) for w, s in self.items))

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def occurs_at(self, H: HGroup, g, z: Callable) -> bool:
        """Does the pattern appear in z at g (cells g w_i)?"""
        return all(z(H.mul(g, H.evaluate(w))) == a for w, a in self.items)


class SubshiftOracle:
    """Base class: alphabet, truncated forbidden codings, optional exact point."""

    group: HGroup
    alphabet: tuple

    def forbidden_codings(self, budget: int) -> list[PatternCoding]:
        raise NotImplementedError

    @property
    def has_point(self) -> bool:
        return False

    def point(self, h):
        raise BudgetExceeded("this subshift has no exact point")


def _backtrack(H: HGroup, radius: int, alphabet, ok: Callable[[dict, object], bool]) -> dict:
    """Lexicographically least admissible assignment of the H-ball, in ball order."""
    order = H.ball(radius)
    assign: dict = {}
    choice = [0] * len(order)
    pos = 0
    while pos < len(order):
        v = order[pos]
        placed = False
        while choice[pos] < len(alphabet):
            assign[v] = alphabet[choice[pos]]
            choice[pos] += 1
            if ok(assign, v):
                placed = True
                break
        if placed:
            pos += 1
            continue
        del assign[v]
        choice[pos] = 0
        pos -= 1
        if pos < 0:
            raise NoColoringFound(f"no admissible coloring of the radius-{radius} ball")
    return assign


class _PointMixin:
    _point: Optional[dict] = None

    @property
    def has_point(self) -> bool:
        return True

    def point(self, h):
        if self._point is None:
            with self._point_lock:
                if self._point is None:
                    self._point = self._solve()
        try:
            return self._point[h]
        except KeyError:
            raise BudgetExceeded(f"{self.group.format(h)} lies outside the radius-{self.radius} ball") from None

    def point_items(self) -> dict:
        self.point(self.group.identity)
        return dict(self._point)


class SquareFreeSubshift(_PointMixin, SubshiftOracle):
    """Colorings of the Cayley graph with no square ww along a simple path of <= 2L vertices."""

    def __init__(self, H: HGroup, colors: int, L: Optional[int] = None, radius: int = 30):
        self.group = H
        self.alphabet = tuple(range(colors))
        self.L = L if L is not None else (8 if len(H.generators) == 2 else 3)
        self.radius = radius
        self._steps = [H.letter_element(l) for l in H.letters[1:]]
        self._point_lock = threading.Lock()

    def _paths_from(self, v, allowed: Callable, maxlen: int) -> list[list]:
        out, stack = [], [[v]]
        while stack:
            path = stack.pop()
            out.append(path)
            if len(path) == maxlen:
                continue
            for s in self._steps:
                u = self.group.mul(path[-1], s)
                if allowed(u) and u not in path:
                    stack.append(path + [u])
        return out

    def _square_through(self, color: dict, v) -> bool:
        maxlen = 2 * self.L
        paths = self._paths_from(v, lambda u: u in color, maxlen)
        for p1 in paths:
            for p2 in paths:
                n = len(p1) + len(p2) - 1
                if n % 2 or n > maxlen:
                    continue
                if set(p1[1:]) & set(p2[1:]):
                    continue
                seq = [color[u] for u in reversed(p1)] + [color[u] for u in p2[1:]]
                half = n // 2
                if seq[:half] == seq[half:]:
                    return True
        return False

    def _solve(self) -> dict:
        return _backtrack(self.group, self.radius, self.alphabet, lambda a, v: not self._square_through(a, v))

    def forbidden_codings(self, budget: int) -> list[PatternCoding]:
        H = self.group
        out = []
        top = min(self.L, budget)
        # simple paths from the identity as letter words
        stack = [("", [H.identity])]
        paths = []
        while stack:
            word, verts = stack.pop()
            if len(verts) % 2 == 0:
                paths.append(word)
            if len(verts) == 2 * top:
                continue
            for letter in H.letters[1:]:
                u = H.mul(verts[-1], H.letter_element(letter))
                if u not in verts:
                    stack.append((word + letter, verts + [u]))
        for word in sorted(paths, key=lambda w: (len(w), w)):
            half = (len(word) + 1) // 2
            prefixes = [word[:i] for i in range(len(word) + 1)]
            for u in itertools.product(self.alphabet, repeat=half):
                out.append(PatternCoding(tuple(zip(prefixes, u + u))))
        return out


class FullShift(_PointMixin, SubshiftOracle):
    """No forbidden patterns; the exact point is a seeded random coloring of a ball."""

    def __init__(self, H: HGroup, colors: int = 2, radius: int = 30, seed: int = 0):
        self.group = H
        self.alphabet = tuple(range(colors))
        self.radius = radius
        self.seed = seed
        self._point_lock = threading.Lock()

    def _solve(self) -> dict:
        order = self.group.ball(self.radius)
        rng = np.random.default_rng(self.seed)
        vals = rng.integers(0, len(self.alphabet), size=len(order))
        return {h: self.alphabet[int(c)] for h, c in zip(order, vals)}

    def forbidden_codings(self, budget: int) -> list[PatternCoding]:
        return []


class CodingSubshift(_PointMixin, SubshiftOracle):
    """Subshift given by an explicit finite list of forbidden codings."""

    def __init__(self, H: HGroup, alphabet, codings: Sequence, radius: int = 8):
        self.group = H
        self.alphabet = tuple(alphabet)
        self.codings = [c if isinstance(c, PatternCoding) else PatternCoding(c) for c in codings]
        self.radius = radius
        self._point_lock = threading.Lock()

    def forbidden_codings(self, budget: int) -> list[PatternCoding]:
        return [c for c in self.codings if all(len(w) <= budget for w, _ in c)]

    def _violates(self, assign: dict, v) -> bool:
        H = self.group
        for c in self.codings:
            for w, _ in c:
                g = H.mul(v, H.inv(H.evaluate(w)))
                cells = [(H.mul(g, H.evaluate(w2)), a) for w2, a in c]
                if all(u in assign and assign[u] == a for u, a in cells):
                    return True
        return False

    def _solve(self) -> dict:
        return _backtrack(self.group, self.radius, self.alphabet, lambda a, v: not self._violates(a, v))


# ---------------------------------------------------------------------------
# flows


class FlowOracle:
    """Base class for an effectively closed H-flow on {0,1}^N."""

    group: HGroup

    def forbidden_words(self, budget: int) -> list[Cylinder]:
        raise NotImplementedError

    def action_forbidden(self, s: str, w: Sequence[int], budget: int) -> list[Cylinder]:
        raise NotImplementedError

    def pullback(self, h, cyl: Cylinder, budget: Optional[int] = None) -> Optional[Cylinder]:
        """{x : f_h(x) in [cyl]} as a cylinder, None when empty."""
        raise NotImplementedError

    @property
    def has_exact_layer(self) -> bool:
        return False

    def point_bit(self, h, n: int) -> int:
        raise BudgetExceeded("no exact layer")

    def point_prefix(self, h_word: str, n: int) -> list[int]:
        h = self.group.evaluate(h_word)
        return [self.point_bit(h, i) for i in range(n)]

    def is_empty(self, cyl: Optional[Cylinder], budget: int) -> bool:
        """Certify [cyl] ∩ X = ∅ from the forbidden words at this budget."""
        return cyl is None or covered(cyl, self.forbidden_words(budget))


def flow_point_eval(flow: FlowOracle, h_word: str, n: int) -> int:
    if not flow.has_exact_layer:
        raise BudgetExceeded("flow has no exact layer")
    return flow.point_bit(flow.group.evaluate(h_word), n)


class RecodedFlow(FlowOracle):
    """The flow rho(Z) for a subshift Z over H."""

    def __init__(self, Z: SubshiftOracle, H: Optional[HGroup] = None):
        self.subshift = Z
        self.group = H or Z.group
        self.enum = WordEnumeration(self.group)
        self.k = max(1, math.ceil(math.log2(len(Z.alphabet))))
        self._code = {a: i for i, a in enumerate(Z.alphabet)}
        self._cache: dict = {}
        self._lock = threading.Lock()

    # bits of symbols, most significant first
    def code(self, a) -> list[int]:
        c = self._code[a]
        return [(c >> (self.k - 1 - b)) & 1 for b in range(self.k)]

    def symbol(self, bits: Sequence[int]):
        c = 0
        for b in bits:
            c = 2 * c + b
        return self.subshift.alphabet[c] if c < len(self.subshift.alphabet) else None

    def forbidden_words(self, budget: int) -> list[Cylinder]:
        with self._lock:
            if budget in self._cache:
                return self._cache[budget]
        out = set()
        k, enum = self.k, self.enum
        elems = [enum.element(c) for c in range(budget)]
        for c1, c2 in itertools.combinations(range(budget), 2):
            if elems[c1] == elems[c2]:
                for b in range(k):
                    out.add(cylinder({k * c1 + b: 0, k * c2 + b: 1}))
                    out.add(cylinder({k * c1 + b: 1, k * c2 + b: 0}))
        for u in range(len(self.subshift.alphabet), 2 ** k):
            bits = [(u >> (k - 1 - b)) & 1 for b in range(k)]
            for c in range(budget):
                out.add(cylinder({k * c + b: bits[b] for b in range(k)}))
        translates = list(dict.fromkeys(elems))
        H = self.group
        for coding in self.subshift.forbidden_codings(budget):
            ws = [(H.evaluate(w), a) for w, a in coding]
            for g in translates:
                assign, ok = {}, True
                for wh, a in ws:
                    idx = enum.index_of(H.mul(g, wh), budget)
                    if idx is None:
                        ok = False
                        break
                    for b, bit in enumerate(self.code(a)):
                        if assign.setdefault(k * idx + b, bit) != bit:
                            ok = False
                    if not ok:
                        break
                if ok:
                    out.add(cylinder(assign))
        result = sorted(out)
        with self._lock:
            self._cache[budget] = result
        return result

    def _source(self, h, n: int, limit: Optional[int]) -> Optional[int]:
        """Coordinate m with f_h(x)_n = x_m."""
        c, b = divmod(n, self.k)
        g = self.group.mul(self.group.inv(h), self.enum.element(c))
        idx = self.enum.index_of(g, limit)
        return None if idx is None else self.k * idx + b

    def action_forbidden(self, s: str, w: Sequence[int], budget: int) -> list[Cylinder]:
        h = self.group.evaluate(s)
        need: dict = {}
        for n, bit in enumerate(w):
            m = self._source(h, n, budget)
            if m is None:
                continue
            if need.setdefault(m, bit) != bit:
                return [()]
        return [((m, 1 - bit),) for m, bit in sorted(need.items())]

    def pullback(self, h, cyl: Cylinder, budget: Optional[int] = None) -> Optional[Cylinder]:
        assign: dict = {}
        for n, bit in cyl:
            m = self._source(h, n, None)
            if m is None:
                raise BudgetExceeded("enumeration limit reached in pullback")
            if assign.setdefault(m, bit) != bit:
                return None
        return cylinder(assign)

    @property
    def has_exact_layer(self) -> bool:
        return self.subshift.has_point

    def point_bit(self, h, n: int) -> int:
        c, b = divmod(n, self.k)
        g = self.group.mul(self.group.inv(h), self.enum.element(c))
        return self.code(self.subshift.point(g))[b]


def recode_subshift(Z: SubshiftOracle, H: Optional[HGroup] = None) -> RecodedFlow:
    return RecodedFlow(Z, H)


def squarefree_flow(H: HGroup, colors: int = 3, L: Optional[int] = None, radius: int = 30) -> RecodedFlow:
    return RecodedFlow(SquareFreeSubshift(H, colors, L, radius), H)


class FactorSubshift(SubshiftOracle):
    """The symbolic factor z(x)_h = a iff f_h^-1(x) lies in W_a."""

    def __init__(self, flow: FlowOracle, blockmap: dict, max_support: int = 2):
        self.flow = flow
        self.group = flow.group
        self.blockmap = {a: [tuple(c) for c in cyls] for a, cyls in blockmap.items()}
        self.alphabet = tuple(self.blockmap)
        self.max_support = max_support
        self.enum = flow.enum if hasattr(flow, "enum") else WordEnumeration(self.group)

    def _region(self, word: str, a) -> list[Optional[Cylinder]]:
        h = self.group.inv(self.group.evaluate(word))
        return [self.flow.pullback(h, c) for c in self.blockmap[a]]

    def forbidden_codings(self, budget: int) -> list[PatternCoding]:
        words, seen = [], set()
        for n in range(budget):
            h = self.enum.element(n)
            if h not in seen:
                seen.add(h)
                words.append(self.enum.word(n))
        out = []
        for size in range(1, self.max_support + 1):
            for support in itertools.combinations(words, size):
                for symbols in itertools.product(self.alphabet, repeat=size):
                    regions = [self._region(w, a) for w, a in zip(support, symbols)]
                    if all(
                        self.flow.is_empty(merge(p) if None not in p else None, budget)
                        for p in itertools.product(*regions)
                    ):
                        out.append(PatternCoding(tuple(zip(support, symbols))))
        return out

    @property
    def has_point(self) -> bool:
        return self.flow.has_exact_layer

    def point(self, h):
        hi = self.group.inv(h)
        for a, cyls in self.blockmap.items():
            for c in cyls:
                if all(self.flow.point_bit(hi, i) == b for i, b in c):
                    return a
        raise ValueError("block map does not cover the point")


def factor_flow_to_subshift(flow: FlowOracle, blockmap: dict, max_support: int = 2) -> FactorSubshift:
    return FactorSubshift(flow, blockmap, max_support)


def identity_blockmap(flow: RecodedFlow) -> dict:
    return {a: [cylinder({b: bit for b, bit in enumerate(flow.code(a))})] for a in flow.subshift.alphabet}


# ---------------------------------------------------------------------------
# descriptors


def parse_flow(desc, H=None) -> FlowOracle:
    """Build a flow from ``squarefree:3``, ``fullshift:2`` or a dict with a ``kind`` key."""
    if isinstance(desc, str):
        text = desc.strip()
        if text.startswith("{"):
            desc = json.loads(text)
        else:
            kind, _, colors = text.partition(":")
            desc = {"kind": kind, "colors": int(colors) if colors else None}
    desc = dict(desc)
    if "group" in desc or not isinstance(H, HGroup):
        H = group_from_spec(desc.get("group", H))
    kind = desc.get("kind")
    if kind == "squarefree":
        return squarefree_flow(H, desc.get("colors") or 3, desc.get("L"), desc.get("radius", 30))
    if kind == "fullshift":
        return recode_subshift(FullShift(H, desc.get("colors") or 2, desc.get("radius", 30), desc.get("seed", 0)), H)
    if kind == "recoded-subshift":
        alphabet = desc.get("alphabet", 2)
        if isinstance(alphabet, int):
            alphabet = range(alphabet)
        Z = CodingSubshift(H, alphabet, [tuple(map(tuple, c)) for c in desc.get("codings", [])], desc.get("radius", 8))
        return recode_subshift(Z, H)
    raise ValueError(f"unknown flow kind {kind!r}")


def describe_flow(flow: FlowOracle) -> dict:
    Z = getattr(flow, "subshift", None)
    if isinstance(Z, SquareFreeSubshift):
        return {"kind": "squarefree", "colors": len(Z.alphabet), "L": Z.L, "radius": Z.radius}
    if isinstance(Z, FullShift):
        return {"kind": "fullshift", "colors": len(Z.alphabet), "radius": Z.radius, "seed": Z.seed}
    if isinstance(Z, CodingSubshift):
        return {
            "kind": "recoded-subshift",
            "alphabet": list(Z.alphabet),
            "codings": [[list(p) for p in c] for c in Z.codings],
            "radius": Z.radius,
        }
    raise ValueError("flow has no descriptor")


__all__ = [
    "BudgetExceeded",
    "NoColoringFound",
    "PatternCoding",
    "SubshiftOracle",
    "FlowOracle",
    "RecodedFlow",
    "SquareFreeSubshift",
    "FullShift",
    "CodingSubshift",
    "FactorSubshift",
    "WordEnumeration",
    "cylinder",
    "matches",
    "merge",
    "covered",
    "recode_subshift",
    "squarefree_flow",
    "factor_flow_to_subshift",
    "identity_blockmap",
    "flow_point_eval",
    "parse_flow",
    "describe_flow",
]
