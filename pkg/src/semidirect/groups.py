"""Exact arithmetic for H, GL(2,Z) and the semidirect product Z^2 x| H.

Group words are plain strings. Each generator is a single lower-case letter;
the matching upper-case letter is its inverse. The letter ``e`` is reserved
for the identity, which every generating set contains.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Hashable, Iterable, Sequence

IDENTITY_LETTER = "e"


@dataclass(frozen=True)
class AutoMatrix:
    """An element of GL(2,Z), stored row-major."""

    a11: int
    a12: int
    a21: int
    a22: int

    def __post_init__(self):
        if self.det not in (1, -1):
            raise ValueError(f"determinant {self.det} is not +-1: {self}")

    @classmethod
    def identity(cls) -> AutoMatrix:
        return cls(1, 0, 0, 1)

    @classmethod
    def from_rows(cls, rows) -> AutoMatrix:
        (a, b), (c, d) = rows
        return cls(a, b, c, d)

    @property
    def det(self) -> int:
        return self.a11 * self.a22 - self.a12 * self.a21

    def rows(self):
        return ((self.a11, self.a12), (self.a21, self.a22))

    def __matmul__(self, other: AutoMatrix) -> AutoMatrix:
        return AutoMatrix(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    def apply(self, vec) -> tuple[int, int]:
        x, y = vec
        return (self.a11 * x + self.a12 * y, self.a21 * x + self.a22 * y)

    def inverse(self) -> AutoMatrix:
        d = self.det  # +-1, so 1/d == d
        return AutoMatrix(d * self.a22, -d * self.a12, -d * self.a21, d * self.a11)

    def __pow__(self, n: int) -> AutoMatrix:
        base = self if n >= 0 else self.inverse()
        out = AutoMatrix.identity()
        for _ in range(abs(n)):
            out = out @ base
        return out


@dataclass(frozen=True)
class ModMatrix:
    """A 2x2 matrix over Z/pZ that is invertible mod p."""

    a11: int
    a12: int
    a21: int
    a22: int
    p: int = 3

    def __post_init__(self):
        for name in ("a11", "a12", "a21", "a22"):
            object.__setattr__(self, name, getattr(self, name) % self.p)
        if _gcd(self.det, self.p) != 1:
            raise ValueError(f"matrix is not invertible mod {self.p}: {self}")

    @property
    def det(self) -> int:
        return (self.a11 * self.a22 - self.a12 * self.a21) % self.p

    def __matmul__(self, other: ModMatrix) -> ModMatrix:
        if other.p != self.p:
            raise ValueError("moduli differ")
        return ModMatrix(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
            self.p,
        )

    def apply(self, vec) -> tuple[int, int]:
        x, y = vec
        p = self.p
        return ((self.a11 * x + self.a12 * y) % p, (self.a21 * x + self.a22 * y) % p)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def reduce_mod_p(A: AutoMatrix, p: int = 3) -> ModMatrix:
    if p < 3:
        raise ValueError("p must be at least 3")
    return ModMatrix(A.a11, A.a12, A.a21, A.a22, p)


def inverse_word(word: str) -> str:
    return word[::-1].swapcase()


class HGroup:
    """A finitely generated group with solvable word problem.

    Subclasses fix a canonical, hashable representation of elements and the
    homomorphism into GL(2,Z) through ``letter_matrix``.
    """

    kind = "custom"

    def __init__(self, generators: Sequence[str], matrices: dict[str, AutoMatrix], name: str = ""):
        gens = list(generators)
        if IDENTITY_LETTER in gens:
            gens.remove(IDENTITY_LETTER)
        for g in gens:
            if len(g) != 1 or not g.islower():
                raise ValueError(f"generator names must be single lower-case letters, got {g!r}")
        if len(set(gens)) != len(gens):
            raise ValueError("duplicate generator names")
        missing = set(gens) - set(matrices)
        if missing:
            raise ValueError(f"no automorphism given for {sorted(missing)}")
        self.generators = (IDENTITY_LETTER, *gens)
        self.matrices = {g: matrices[g] for g in gens}
        self.name = name or self.kind

    # -- element level, overridden per kind
    @property
    def identity(self) -> Hashable:
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def letter_element(self, letter: str):
        raise NotImplementedError

    def matrix(self, h) -> AutoMatrix:
        """The automorphism attached to the canonical element ``h``."""
        return phi_of(self, self.word_for(h))

    def word_for(self, h) -> str:
        raise NotImplementedError

    def format(self, h) -> str:
        return str(h)

    def parse(self, text: str):
        raise NotImplementedError

    # -- shared
    @property
    def letters(self) -> tuple[str, ...]:
        """S together with the inverses of its non-identity generators."""
        return self.generators + tuple(g.upper() for g in self.generators[1:])

    def letter_matrix(self, letter: str) -> AutoMatrix:
        if letter in (IDENTITY_LETTER, IDENTITY_LETTER.upper()):
            return AutoMatrix.identity()
        if letter in self.matrices:
            return self.matrices[letter]
        if letter.lower() in self.matrices:
            return self.matrices[letter.lower()].inverse()
        raise KeyError(f"unknown letter {letter!r}")

    def evaluate(self, word: str):
        out = self.identity
        for letter in word:
            out = self.mul(out, self._letter(letter))
        return out

    def _letter(self, letter: str):
        if letter in (IDENTITY_LETTER, IDENTITY_LETTER.upper()):
            return self.identity
        if letter.lower() not in self.matrices:
            raise KeyError(f"unknown letter {letter!r}")
        return self.letter_element(letter)

    def equal(self, w1: str, w2: str) -> bool:
        return self.evaluate(w1) == self.evaluate(w2)

    def check_homomorphism(self, radius: int = 2):
        """Check that ``matrix`` agrees with the letter product on a ball of H."""
        for word in words_up_to(self.letters, radius):
            h = self.evaluate(word)
            if self.matrix(h) != phi_of(self, word):
                raise ValueError(f"automorphisms do not define a homomorphism (word {word!r})")

    def ball(self, radius: int) -> list:
        """Elements of H at word distance <= radius, breadth first."""
        seen = {self.identity}
        order = [self.identity]
        frontier = [self.identity]
        steps = [self._letter(l) for l in self.letters[1:]]
        for _ in range(radius):
            nxt = []
            for h in frontier:
                for s in steps:
                    k = self.mul(h, s)
                    if k not in seen:
                        seen.add(k)
                        order.append(k)
                        nxt.append(k)
            frontier = nxt
        return order

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} S={self.generators}>"


def phi_of(group: HGroup, word: str) -> AutoMatrix:
    """Ordered product of the generator matrices along ``word``."""
    out = AutoMatrix.identity()
    for letter in word:
        out = out @ group.letter_matrix(letter)
    return out


def words_up_to(letters: Sequence[str], length: int) -> Iterable[str]:
    """All words over ``letters`` of length <= ``length``, in length-lex order."""
    for n in range(length + 1):
        for tup in itertools.product(letters, repeat=n):
            yield "".join(tup)


class ZGroup(HGroup):
    """H = Z; elements are integers."""

    kind = "z"

    def __init__(self, matrix: AutoMatrix, gen: str = "t", name: str = ""):
        super().__init__([gen], {gen: matrix}, name)
        self.gen = gen
        self._pow = lru_cache(maxsize=None)(lambda n: matrix ** n)

    identity = 0

    def mul(self, a, b):
        return a + b

    def inv(self, a):
        return -a

    def letter_element(self, letter):
        return 1 if letter == self.gen else -1

    def matrix(self, h):
        return self._pow(h)

    def word_for(self, h):
        return self.gen * h if h >= 0 else self.gen.upper() * (-h)

    def parse(self, text):
        return int(text)


class ZdGroup(HGroup):
    """H = Z^d with commuting automorphisms; elements are integer tuples."""

    kind = "zd"

    def __init__(self, generators: Sequence[str], matrices: dict[str, AutoMatrix], name: str = ""):
        super().__init__(generators, matrices, name)
        gens = self.generators[1:]
        for a, b in itertools.combinations(gens, 2):
            if matrices[a] @ matrices[b] != matrices[b] @ matrices[a]:
                raise ValueError(f"automorphisms of {a} and {b} do not commute")
        self._index = {g: i for i, g in enumerate(gens)}

    @property
    def identity(self):
        return (0,) * len(self._index)

    def mul(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def inv(self, a):
        return tuple(-x for x in a)

    def letter_element(self, letter):
        out = [0] * len(self._index)
        out[self._index[letter.lower()]] = 1 if letter.islower() else -1
        return tuple(out)

    def matrix(self, h):
        out = AutoMatrix.identity()
        for g, n in zip(self.generators[1:], h):
            out = out @ (self.matrices[g] ** n)
        return out

    def word_for(self, h):
        return "".join(g * n if n >= 0 else g.upper() * -n for g, n in zip(self.generators[1:], h))

    def format(self, h):
        return ",".join(map(str, h))

    def parse(self, text):
        return tuple(int(t) for t in text.split(","))


class FreeGroup(HGroup):
    """Free group; elements are freely reduced words ('' is the identity)."""

    kind = "free"
    identity = ""

    def mul(self, a, b):
        out = list(a)
        for letter in b:
            if out and out[-1] == letter.swapcase():
                out.pop()
            else:
                out.append(letter)
        return "".join(out)

    def inv(self, a):
        return inverse_word(a)

    def letter_element(self, letter):
        return letter

    def matrix(self, h):
        return phi_of(self, h)

    def word_for(self, h):
        return h

    def format(self, h):
        return h or "1"

    def parse(self, text):
        return "" if text == "1" else self.evaluate(text)


class FiniteGroup(HGroup):
    """Permutation group; elements are permutation tuples, composed right to left."""

    kind = "finite"

    def __init__(self, generators, perms: dict[str, Sequence[int]], matrices, name: str = ""):
        super().__init__(generators, matrices, name)
        self.perms = {g: tuple(perms[g]) for g in self.generators[1:]}
        n = {len(p) for p in self.perms.values()}
        if len(n) != 1:
            raise ValueError("permutations have different degrees")
        self._degree = n.pop()
        # close the group and record one word per element
        self._words = {self.identity: ""}
        queue = deque([self.identity])
        while queue:
            h = queue.popleft()
            for letter in self.letters[1:]:
                k = self.mul(h, self.letter_element(letter))
                if k not in self._words:
                    self._words[k] = self._words[h] + letter
                    queue.append(k)
        self._matrix = {h: phi_of(self, w) for h, w in self._words.items()}
        self.elements = sorted(self._words)
        self.check_homomorphism(radius=3)

    @property
    def identity(self):
        return tuple(range(self._degree))

    def mul(self, a, b):
        return tuple(a[i] for i in b)

    def inv(self, a):
        out = [0] * len(a)
        for i, x in enumerate(a):
            out[x] = i
        return tuple(out)

    def letter_element(self, letter):
        p = self.perms[letter.lower()]
        return p if letter.islower() else self.inv(p)

    def matrix(self, h):
        return self._matrix[h]

    def word_for(self, h):
        return self._words[h]

    def format(self, h):
        return str(self.elements.index(h))

    def parse(self, text):
        return self.elements[int(text)]


# ---------------------------------------------------------------------------
# the semidirect product


@dataclass(frozen=True, order=True)
class GElem:
    vec: tuple[int, int]
    h: Hashable


class Semidirect:
    """G = Z^2 x|_phi H with (n1, h1)(n2, h2) = (n1 + phi_h1(n2), h1 h2)."""

    def __init__(self, H: HGroup, p: int = 3):
        if p < 3:
            raise ValueError("p must be at least 3")
        self.H = H
        self.p = p

    @property
    def identity(self) -> GElem:
        return GElem((0, 0), self.H.identity)

    def elem(self, vec=(0, 0), h=None) -> GElem:
        return GElem(tuple(vec), self.H.identity if h is None else h)

    def mul(self, g1: GElem, g2: GElem) -> GElem:
        x, y = self.H.matrix(g1.h).apply(g2.vec)
        return GElem((g1.vec[0] + x, g1.vec[1] + y), self.H.mul(g1.h, g2.h))

    def inv(self, g: GElem) -> GElem:
        hi = self.H.inv(g.h)
        x, y = self.H.matrix(hi).apply(g.vec)
        return GElem((-x, -y), hi)

    def step_generators(self) -> list[GElem]:
        """Symmetric generating set used for the word metric on G."""
        H = self.H
        out = [GElem(v, H.identity) for v in ((1, 0), (-1, 0), (0, 1), (0, -1))]
        for letter in H.letters[1:]:
            out.append(GElem((0, 0), H.evaluate(letter)))
        return out

    def ball(self, radius: int) -> list[GElem]:
        """Elements at word distance <= radius, in breadth-first order."""
        if radius < 0:
            raise ValueError("radius must be >= 0")
        steps = self.step_generators()
        seen = {self.identity}
        order = [self.identity]
        frontier = [self.identity]
        for _ in range(radius):
            nxt = []
            for g in frontier:
                for s in steps:
                    k = self.mul(g, s)
                    if k not in seen:
                        seen.add(k)
                        order.append(k)
                        nxt.append(k)
            frontier = nxt
        return order

    def format(self, g: GElem) -> str:
        return f"{g.vec[0]} {g.vec[1]} {self.H.format(g.h)}"

    def parse(self, text: str) -> GElem:
        i, j, h = text.split()
        return GElem((int(i), int(j)), self.H.parse(h))


def ball(G: Semidirect, radius: int) -> list[GElem]:
    return G.ball(radius)


# ---------------------------------------------------------------------------
# named instances and descriptors


def heisenberg() -> ZGroup:
    return ZGroup(AutoMatrix(1, 1, 0, 1), name="heisenberg")


def direct_z() -> ZGroup:
    return ZGroup(AutoMatrix.identity(), name="z3")


def sol() -> ZGroup:
    return ZGroup(AutoMatrix(2, 1, 1, 1), name="sol")


def flip() -> ZGroup:
    return ZGroup(AutoMatrix(0, 1, 1, 0), name="flip")


def heisenberg_power() -> ZdGroup:
    # two commuting unipotent shears
    return ZdGroup(["a", "b"], {"a": AutoMatrix(1, 1, 0, 1), "b": AutoMatrix(1, 2, 0, 1)}, name="heisenberg2")


def free2() -> FreeGroup:
    return FreeGroup(["a", "b"], {"a": AutoMatrix(1, 1, 0, 1), "b": AutoMatrix(1, 0, 1, 1)}, name="free2")


def klein_rotation() -> FiniteGroup:
    # Z/4 acting on Z^2 by quarter turns
    return FiniteGroup(["r"], {"r": (1, 2, 3, 0)}, {"r": AutoMatrix(0, -1, 1, 0)}, name="rot4")


NAMED_GROUPS = {
    "heisenberg": heisenberg,
    "z3": direct_z,
    "sol": sol,
    "flip": flip,
    "heisenberg2": heisenberg_power,
    "free2": free2,
    "rot4": klein_rotation,
}


def parse_group_descriptor(text: str) -> HGroup:
    """Build an H from the line-oriented descriptor format.

    ::

        kind: z
        generators: t
        phi t: 1 1 0 1
        perm r: 1 2 3 0      # finite kind only
        class: package.module:factory   # custom kind only
    """
    fields: dict[str, str] = {}
    phis: dict[str, AutoMatrix] = {}
    perms: dict[str, tuple[int, ...]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if key.startswith("phi "):
            nums = [int(t) for t in value.split()]
            if len(nums) != 4:
                raise ValueError(f"phi needs 4 integers: {raw!r}")
            phis[key[4:].strip()] = AutoMatrix(*nums)
        elif key.startswith("perm "):
            perms[key[5:].strip()] = tuple(int(t) for t in value.split())
        else:
            fields[key] = value
    kind = fields.get("kind", "")
    name = fields.get("name", "")
    gens = fields.get("generators", "").split()
    if kind == "named":
        return NAMED_GROUPS[name]()
    if kind == "z":
        gens = [g for g in gens if g != IDENTITY_LETTER]
        if len(gens) != 1:
            raise ValueError("kind z takes exactly one generator")
        return ZGroup(phis[gens[0]], gens[0], name=name)
    if kind == "zd":
        return ZdGroup(gens, phis, name=name)
    if kind == "free":
        return FreeGroup(gens, phis, name=name)
    if kind == "finite":
        return FiniteGroup(gens, perms, phis, name=name)
    if kind == "custom":
        import importlib

        module, _, attr = fields["class"].partition(":")
        return getattr(importlib.import_module(module), attr)()
    raise ValueError(f"unknown group kind {kind!r}")


def group_from_spec(spec) -> HGroup:
    """Accept a registered name, a descriptor text, or a dict of descriptor fields."""
    if isinstance(spec, HGroup):
        return spec
    if isinstance(spec, dict):
        lines = [f"kind: {spec['kind']}"]
        if "name" in spec:
            lines.append(f"name: {spec['name']}")
        if "generators" in spec:
            lines.append("generators: " + " ".join(spec["generators"]))
        for g, m in spec.get("phi", {}).items():
            lines.append(f"phi {g}: " + " ".join(map(str, m)))
        for g, m in spec.get("perm", {}).items():
            lines.append(f"perm {g}: " + " ".join(map(str, m)))
        if "class" in spec:
            lines.append(f"class: {spec['class']}")
        return parse_group_descriptor("\n".join(lines))
    if spec in NAMED_GROUPS:
        return NAMED_GROUPS[spec]()
    return parse_group_descriptor(spec)
