"""The two-colour substitutions s_v over (Z/pZ)^2 and their lattices.

A cell c of a patch is replaced by the p x p block occupying p*c + [0,p)^2.
Inside a block the offset v is always black, the offset (0,0) copies the
colour of c, and every other offset is white.

Patches store colours in a boolean array indexed ``cells[x - ox, y - oy]``
(True is black), with the origin at the lower-left corner.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, NamedTuple, Optional

import numpy as np

from .groups import AutoMatrix, reduce_mod_p

WHITE, BLACK = False, True
_UNKNOWN = -1


class NotSubstitutive(ValueError):
    """The patch admits no (unique) de-substitution."""


@dataclass(frozen=True)
class SubRule:
    p: int
    v: tuple[int, int]

    def __post_init__(self):
        if self.p < 3:
            raise ValueError("p must be at least 3")
        v = (self.v[0] % self.p, self.v[1] % self.p)
        if v == (0, 0):
            raise ValueError("v must be non-zero mod p")
        object.__setattr__(self, "v", v)


def nonzero_vectors(p: int = 3) -> list[tuple[int, int]]:
    return [v for v in itertools.product(range(p), repeat=2) if v != (0, 0)]


@dataclass(eq=False)
class Patch:
    origin: tuple[int, int]
    cells: np.ndarray

    def __post_init__(self):
        self.origin = (int(self.origin[0]), int(self.origin[1]))
        self.cells = np.asarray(self.cells, dtype=bool)
        if self.cells.ndim != 2 or 0 in self.cells.shape:
            raise ValueError("a patch needs a non-empty 2D array")

    @classmethod
    def blank(cls, origin, width, height) -> Patch:
        return cls(origin, np.zeros((width, height), dtype=bool))

    @classmethod
    def from_black(cls, black: Iterable[tuple[int, int]], origin, width, height) -> Patch:
        out = cls.blank(origin, width, height)
        ox, oy = out.origin
        for x, y in black:
            if 0 <= x - ox < width and 0 <= y - oy < height:
                out.cells[x - ox, y - oy] = True
        return out

    @property
    def width(self) -> int:
        return self.cells.shape[0]

    @property
    def height(self) -> int:
        return self.cells.shape[1]

    def __contains__(self, pos) -> bool:
        x, y = pos
        return 0 <= x - self.origin[0] < self.width and 0 <= y - self.origin[1] < self.height

    def __getitem__(self, pos) -> bool:
        x, y = pos
        return bool(self.cells[x - self.origin[0], y - self.origin[1]])

    def __eq__(self, other):
        if not isinstance(other, Patch):
            return NotImplemented
        return self.origin == other.origin and np.array_equal(self.cells, other.cells)

    def black_cells(self) -> set[tuple[int, int]]:
        ox, oy = self.origin
        return {(int(i) + ox, int(j) + oy) for i, j in zip(*np.nonzero(self.cells))}

    def window(self, origin, width, height) -> Patch:
        """Sub-rectangle in absolute coordinates; must lie inside the patch."""
        x0, y0 = origin[0] - self.origin[0], origin[1] - self.origin[1]
        if x0 < 0 or y0 < 0 or x0 + width > self.width or y0 + height > self.height:
            raise ValueError("window leaves the patch")
        return Patch(origin, self.cells[x0:x0 + width, y0:y0 + height].copy())

    def translated(self, offset) -> Patch:
        return Patch((self.origin[0] + offset[0], self.origin[1] + offset[1]), self.cells.copy())

    def __repr__(self):
        return f"Patch(origin={self.origin}, {self.width}x{self.height}, black={int(self.cells.sum())})"


def _seed_color(seed) -> bool:
    if isinstance(seed, str):
        if seed not in ("black", "white"):
            raise ValueError(f"seed must be 'black' or 'white', got {seed!r}")
        return seed == "black"
    return bool(seed)


def substitute_once(rule: SubRule, patch: Patch) -> Patch:
    p, (vx, vy) = rule.p, rule.v
    w, h = patch.width, patch.height
    out = np.zeros((p * w, p * h), dtype=bool)
    out[0::p, 0::p] = patch.cells
    out[vx::p, vy::p] = True
    return Patch((p * patch.origin[0], p * patch.origin[1]), out)


def iterate(rule: SubRule, seed, n: int) -> Patch:
    """s_v^n(seed) as a p^n x p^n patch at the origin."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return _iterate_cached(rule, _seed_color(seed), n)


@lru_cache(maxsize=64)
def _iterate_cached(rule: SubRule, color: bool, n: int) -> Patch:
    if n == 0:
        return Patch((0, 0), np.array([[color]]))
    return substitute_once(rule, _iterate_cached(rule, color, n - 1))


# ---------------------------------------------------------------------------
# de-substitution on partially known arrays (values 0, 1, -1 for unknown)


def _residues(origin: int, length: int, p: int) -> np.ndarray:
    return (origin + np.arange(length)) % p


def _anchor_candidates(p, v, arr, origin, require_nonempty: bool):
    """Residues r such that arr is compatible with s_v applied on the grid r + pZ^2."""
    rx = _residues(origin[0], arr.shape[0], p)
    ry = _residues(origin[1], arr.shape[1], p)
    black = arr == 1
    white = arr == 0
    out = []
    for r in itertools.product(range(p), repeat=2):
        bx, by = (r[0] + v[0]) % p, (r[1] + v[1]) % p
        in_b0 = (rx == bx)[:, None] & (ry == by)[None, :]
        if require_nonempty and not in_b0.any():
            continue
        if (white & in_b0).any():
            continue
        in_corner = (rx == r[0])[:, None] & (ry == r[1])[None, :]
        if (black & ~in_b0 & ~in_corner).any():
            continue
        out.append(r)
    return out


def _quotient(p, arr, origin, r, with_partial: bool):
    """Parent array for anchor r; partial blocks contribute unknown parents."""
    ox, oy = origin
    w, h = arr.shape
    if with_partial:
        cx0, cx1 = (ox - r[0]) // p, (ox + w - 1 - r[0]) // p
        cy0, cy1 = (oy - r[1]) // p, (oy + h - 1 - r[1]) // p
    else:
        cx0, cx1 = -((r[0] - ox) // p), (ox + w - 1 - r[0]) // p
        cy0, cy1 = -((r[1] - oy) // p), (oy + h - 1 - r[1]) // p
    q = np.full((cx1 - cx0 + 1, cy1 - cy0 + 1), _UNKNOWN, dtype=np.int8)
    for i in range(q.shape[0]):
        x = r[0] + p * (cx0 + i) - ox
        if not 0 <= x < w:
            continue
        for j in range(q.shape[1]):
            y = r[1] + p * (cy0 + j) - oy
            if 0 <= y < h:
                q[i, j] = arr[x, y]
    return q, (cx0, cy0)


def _desub_step(p, v, arr, origin):
    """One unique de-substitution of a fully known array (side >= p)."""
    cands = _anchor_candidates(p, v, arr, origin, require_nonempty=True)
    if len(cands) != 1:
        if not cands:
            raise NotSubstitutive("no residue class is consistent with a level-0 lattice")
        raise NotSubstitutive(f"ambiguous level-0 lattice: anchors {cands}")
    r = cands[0]
    q, qorigin = _quotient(p, arr, origin, r, with_partial=False)
    return r, q, qorigin


def desubstitute(rule: SubRule, patch: Patch) -> tuple[Patch, tuple[int, int]]:
    """Undo one substitution step.

    Returns the parent patch (cells whose block corner lies in the patch) and
    the anchor residue r: blocks sit at r + p*c + [0,p)^2 and the level-0
    lattice is r + v + pZ^2.
    """
    p = rule.p
    if patch.width < 2 * p or patch.height < 2 * p:
        raise ValueError(f"de-substitution needs a patch of side >= {2 * p}")
    arr = patch.cells.astype(np.int8)
    r, q, qorigin = _desub_step(p, rule.v, arr, patch.origin)
    return Patch(qorigin, q.astype(bool)), r


class Lattice(NamedTuple):
    """The set anchor + p^m v + p^(m+1) Z^2."""

    m: int
    anchor: tuple[int, int]
    v: tuple[int, int]

    def contains(self, pos, p: int) -> bool:
        mod = p ** (self.m + 1)
        return all(
            (pos[k] - self.anchor[k] - p ** self.m * self.v[k]) % mod == 0 for k in (0, 1)
        )

    def cells_in(self, origin, width, height, p: int) -> set[tuple[int, int]]:
        mod = p ** (self.m + 1)
        base = [(self.anchor[k] + p ** self.m * self.v[k]) % mod for k in (0, 1)]
        xs = range(origin[0] + (base[0] - origin[0]) % mod, origin[0] + width, mod)
        ys = range(origin[1] + (base[1] - origin[1]) % mod, origin[1] + height, mod)
        return {(x, y) for x in xs for y in ys}


@dataclass
class LatticeDecomposition:
    rule: SubRule
    levels: list[tuple[int, tuple[int, int]]]
    residual: Optional[tuple[int, int]] = None

    def lattice(self, m: int) -> Lattice:
        mm, anchor = self.levels[m]
        return Lattice(mm, anchor, self.rule.v)

    def level_of(self, pos) -> Optional[int]:
        for m, _ in self.levels:
            if self.lattice(m).contains(pos, self.rule.p):
                return m
        return None

    def synthesize(self, origin, width, height) -> Patch:
        """Black cells implied by the decomposition inside a rectangle."""
        black: set = set()
        for m, _ in self.levels:
            black |= self.lattice(m).cells_in(origin, width, height, self.rule.p)
        if self.residual is not None:
            black.add(self.residual)
        return Patch.from_black(black, origin, width, height)


def decompose_lattices(rule: SubRule, patch: Patch, maxlevel: int) -> LatticeDecomposition:
    """Lattices B_0..B_maxlevel of a patch plus the (at most one) residual cell."""
    p, v = rule.p, rule.v
    side = min(patch.width, patch.height)
    if side < p ** (maxlevel + 1):
        raise ValueError(f"need patch side >= p^{maxlevel + 1} = {p ** (maxlevel + 1)}")
    arr = patch.cells.astype(np.int8)
    origin = patch.origin
    total = [0, 0]
    levels = []
    for m in range(maxlevel + 1):
        r, arr, origin = _desub_step(p, v, arr, origin)
        total[0] += p ** m * r[0]
        total[1] += p ** m * r[1]
        mod = p ** (m + 1)
        levels.append((m, (total[0] % mod, total[1] % mod)))
    scale = p ** (maxlevel + 1)
    leftover = [
        (total[0] + scale * (origin[0] + int(i)), total[1] + scale * (origin[1] + int(j)))
        for i, j in zip(*np.nonzero(arr == 1))
    ]
    if len(leftover) > 1:
        raise NotSubstitutive(f"{len(leftover)} black cells lie outside B_0..B_{maxlevel}")
    return LatticeDecomposition(rule, levels, leftover[0] if leftover else None)


def map_lattice(A: AutoMatrix, lattice: Lattice, p: int = 3) -> Lattice:
    """Image of a lattice under A: a lattice of the same level for v' = (A mod p) v."""
    v2 = reduce_mod_p(A, p).apply(lattice.v)
    mod = p ** (lattice.m + 1)
    ax, ay = A.apply(lattice.anchor)
    return Lattice(lattice.m, (ax % mod, ay % mod), v2)


# ---------------------------------------------------------------------------
# language membership


@lru_cache(maxsize=None)
def _small_factors(rule: SubRule, size: int = 3) -> dict[tuple[int, int], np.ndarray]:
    """All factors of Sub_v with both sides <= size, as stacked arrays per shape.

    Factors of s^(n+1)(black) are determined by the factors of s^n(black) one
    size down, so once the table repeats for two consecutive n it is final.
    """
    def table(n):
        big = iterate(rule, BLACK, n).cells
        out = {}
        for w in range(1, size + 1):
            for h in range(1, size + 1):
                seen = {
                    big[x:x + w, y:y + h].tobytes()
                    for x in range(big.shape[0] - w + 1)
                    for y in range(big.shape[1] - h + 1)
                }
                out[(w, h)] = seen
        return out

    n = 2
    prev = table(n)
    stable = 0
    while stable < 2:
        n += 1
        cur = table(n)
        stable = stable + 1 if cur == prev else 0
        prev = cur
    return {
        shape: np.array(
            [np.frombuffer(b, dtype=bool).reshape(shape) for b in sorted(keys)], dtype=np.int8
        )
        for shape, keys in prev.items()
    }


def _matches_some(factors: np.ndarray, arr: np.ndarray) -> bool:
    known = arr != _UNKNOWN
    if not known.any():
        return len(factors) > 0
    return bool(((factors == arr) | ~known).all(axis=(1, 2)).any())


def _in_language(rule: SubRule, arr: np.ndarray, origin) -> bool:
    w, h = arr.shape
    if w <= 3 and h <= 3:
        return _matches_some(_small_factors(rule)[(w, h)], arr)
    if not (arr != _UNKNOWN).any():
        return True
    p, v = rule.p, rule.v
    for r in _anchor_candidates(p, v, arr, origin, require_nonempty=False):
        q, qorigin = _quotient(p, arr, origin, r, with_partial=True)
        if _in_language(rule, q, qorigin):
            return True
    return False


def is_in_language(rule: SubRule, patch: Patch) -> bool:
    """Whether the patch occurs in some iterate s_v^n(black).

    Exact: every occurrence sits inside s_v(Q) for a parent pattern Q of the
    language, so the search recurses over the admissible block alignments
    (blocks cut by the border get unknown parents) down to 3x3, where a
    precomputed factor table decides.
    """
    return _in_language(rule, patch.cells.astype(np.int8), patch.origin)


def language_depth(rule: SubRule, width: int, height: int) -> int:
    """Smallest n with p^n >= 3 * max(width, height)."""
    n, side = 0, 1
    while side < 3 * max(width, height):
        n += 1
        side *= rule.p
    return n


def embeds_in_iterate(rule: SubRule, patch: Patch, n: int) -> bool:
    """Brute force: does the patch occur at some offset of s_v^n(black)?"""
    big = iterate(rule, BLACK, n).cells
    w, h = patch.width, patch.height
    if w > big.shape[0] or h > big.shape[1]:
        return False
    windows = np.lib.stride_tricks.sliding_window_view(big, (w, h))
    return bool((windows == patch.cells).all(axis=(2, 3)).any())


# ---------------------------------------------------------------------------
# text format and renderers


def format_patch(rule: SubRule, patch: Patch) -> str:
    """Header ``p vx vy ox oy width height`` then rows, top row first."""
    lines = [f"{rule.p} {rule.v[0]} {rule.v[1]} {patch.origin[0]} {patch.origin[1]} {patch.width} {patch.height}"]
    lines.extend(render_ascii(patch).splitlines())
    return "\n".join(lines) + "\n"


def parse_patch(text: str) -> tuple[SubRule, Patch]:
    lines = [l for l in text.splitlines() if l.strip()]
    try:
        p, vx, vy, ox, oy, w, h = (int(t) for t in lines[0].split())
    except (IndexError, ValueError) as exc:
        raise ValueError("bad patch header") from exc
    rows = lines[1:]
    if len(rows) != h or any(len(r) != w for r in rows):
        raise ValueError(f"expected {h} rows of {w} characters")
    cells = np.zeros((w, h), dtype=bool)
    for k, row in enumerate(rows):
        y = h - 1 - k
        for x, ch in enumerate(row):
            if ch not in ".#":
                raise ValueError(f"bad cell character {ch!r}")
            cells[x, y] = ch == "#"
    return SubRule(p, (vx, vy)), Patch((ox, oy), cells)


def render_ascii(patch: Patch, black: str = "#", white: str = ".") -> str:
    rows = []
    for y in range(patch.height - 1, -1, -1):
        rows.append("".join(black if patch.cells[x, y] else white for x in range(patch.width)))
    return "\n".join(rows)


def render_ppm(patch: Patch) -> bytes:
    """Binary P6 image, one pixel per cell, top row first."""
    img = np.where(patch.cells.T[::-1, :, None], 0, 255).astype(np.uint8)
    img = np.repeat(img, 3, axis=2)
    header = f"P6\n{patch.width} {patch.height}\n255\n".encode()
    return header + img.tobytes()
