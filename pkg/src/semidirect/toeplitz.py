"""Toeplitz encodings of one-sided sequences and their decoding.

``psi_encode`` writes x_n on every position j = q p^n (mod p^(n+1)) and the gap
symbol ``$`` everywhere else. ``omega`` keeps the positions j p + k. Repeatedly
locating the class that carries x_0 and applying ``omega`` reads x back.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

GAP = "$"


class NotToeplitz(ValueError):
    pass


class InsufficientPrefix(ValueError):
    pass


class WindowTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class TWord:
    """Symbols on the integer interval [start, start + len - 1]."""

    start: int
    symbols: tuple

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))

    @classmethod
    def from_string(cls, start: int, text: str) -> TWord:
        return cls(start, tuple(text))

    @property
    def end(self) -> int:
        return self.start + len(self.symbols) - 1

    @property
    def interval(self) -> tuple[int, int]:
        return (self.start, self.end)

    def __len__(self):
        return len(self.symbols)

    def __getitem__(self, j):
        return self.symbols[j - self.start]

    def __contains__(self, j):
        return self.start <= j <= self.end

    def text(self) -> str:
        return "".join(str(s) for s in self.symbols)


def psi_level(p: int, q: int, j: int) -> Optional[int]:
    """The n with j = q p^n mod p^(n+1), or None (j = 0 or wrong leading digit)."""
    if j == 0:
        return None
    n = 0
    while j % p == 0:
        j //= p
        n += 1
    return n if j % p == q else None


def psi_symbol(p: int, q: int, j: int, x: Callable[[int], object]):
    n = psi_level(p, q, j)
    return GAP if n is None else x(n)


def psi_encode(p: int, q: int, x: Sequence, window: tuple[int, int]) -> TWord:
    if not 1 <= q <= p - 1:
        raise ValueError("q must lie in 1..p-1")
    a, b = window
    out = []
    for j in range(a, b + 1):
        n = psi_level(p, q, j)
        if n is None:
            out.append(GAP)
        elif n >= len(x):
            raise InsufficientPrefix(f"position {j} needs x_{n} but the prefix has length {len(x)}")
        else:
            out.append(x[n])
    return TWord(a, out)


def omega(p: int, k: int, w: TWord) -> TWord:
    lo = -((k - w.start) // p)  # ceil((start - k) / p)
    hi = (w.end - k) // p
    return TWord(lo, [w[j * p + k] for j in range(lo, hi + 1)])


def _x0_class(p: int, q: int, w: TWord):
    """The unique residue r mod p holding one repeated non-gap symbol framed by gaps."""
    hits = []
    for r in range(p):
        members = [j for j in range(w.start, w.end + 1) if j % p == r]
        if not members:
            continue
        values = {w[j] for j in members}
        if len(values) != 1 or GAP in values:
            continue
        framed = all(
            w[j - t] == GAP for j in members for t in range(1, q) if j - t in w
        ) and all(
            w[j + t] == GAP for j in members for t in range(1, p - q) if j + t in w
        )
        if framed:
            hits.append((r, values.pop()))
    if len(hits) != 1:
        what = "no residue class" if not hits else f"{len(hits)} residue classes"
        raise NotToeplitz(f"{what} qualify as the x_0 class on [{w.start},{w.end}]")
    return hits[0]


def find_k0(p: int, q: int, w: TWord) -> int:
    r, _ = _x0_class(p, q, w)
    return (r - q) % p


@dataclass
class DecodeResult:
    prefix: list
    kchain: list[int] = field(default_factory=list)
    residual: Optional[int] = None


def decode(p: int, q: int, w: TWord, depth: int) -> DecodeResult:
    """Read x_0 .. x_(depth-1) back from a window of an orbit of Psi_q(x).

    ``kchain`` holds the shift used for each omega step between two decoded
    symbols. ``residual`` is the original position of the only non-gap cell
    left after decoding, when exactly one is left.
    """
    prefix, kchain = [], []
    base, scale = 0, 1  # original position = base + scale * j
    cur = w
    for level in range(depth):
        if len(cur) == 0:
            raise WindowTooSmall(f"window exhausted after {level} levels")
        if level:
            k0 = (r - q) % p
            kchain.append(k0)
            cur = omega(p, k0, cur)
            base, scale = base + scale * k0, scale * p
            if len(cur) == 0:
                raise WindowTooSmall(f"window exhausted after {level} levels")
        try:
            r, sym = _x0_class(p, q, cur)
        except NotToeplitz as exc:
            if len(cur) < 2 * p + 1:
                raise WindowTooSmall(f"level {level}: {exc}") from exc
            raise
        prefix.append(sym)
    residual = None
    if depth:
        k0 = (r - q) % p
        rest = omega(p, k0, cur)
        left = [j for j in range(rest.start, rest.end + 1) if rest[j] != GAP]
        if len(left) == 1:
            residual = base + scale * k0 + scale * p * left[0]
    return DecodeResult(prefix, kchain, residual)


# ---------------------------------------------------------------------------
# multi-layer words


@dataclass(frozen=True)
class LayerWord:
    """One TWord per layer (q, s), all on the same interval."""

    layers: dict

    def __post_init__(self):
        intervals = {w.interval for w in self.layers.values()}
        if len(intervals) > 1:
            raise ValueError("layers do not share an interval")

    @property
    def interval(self):
        return next(iter(self.layers.values())).interval


@dataclass
class Recognition:
    accepted: bool
    stage: Optional[str] = None
    detail: str = ""
    words: dict = field(default_factory=dict)

    def __bool__(self):
        return self.accepted


def _factor_ok(p: int, q: int, factor) -> bool:
    if any(s not in ("0", "1", GAP) for s in factor):
        return False
    for rot in range(p):
        u = factor[rot:] + factor[:rot]
        if u[q] in "01" and all(c == GAP for c in u[1:q]) and all(c == GAP for c in u[q + 1:]):
            return True
    return False


def recognize_top_word(p: int, layers: LayerWord, flow, depth: int, budget: int = 8) -> Recognition:
    """Semi-decide whether a layered word can occur in the Toeplitz encoding of a flow.

    Stages: ``structure`` (local gap pattern and class constancy), ``alignment``
    (one k_0 for all layers), ``cross-q`` (every q decodes the same word for a
    given s) and ``flow`` (decoded words tested against the flow's forbidden
    cylinders at the given budget).
    """
    lo, hi = layers.interval
    if hi - lo + 1 < p ** depth:
        raise WindowTooSmall(f"need at least p^depth = {p ** depth} positions")
    for (q, s), w in layers.layers.items():
        text = w.symbols
        for j in range(len(text) - p + 1):
            if not _factor_ok(p, q, text[j:j + p]):
                return Recognition(False, "structure", f"layer ({q},{s}) factor at {w.start + j}")
    cur = dict(layers.layers)
    decoded = {key: [] for key in cur}
    for level in range(depth):
        ks = {}
        for (q, s), w in cur.items():
            try:
                r, sym = _x0_class(p, q, w)
            except NotToeplitz as exc:
                return Recognition(False, "structure", f"layer ({q},{s}) level {level}: {exc}")
            ks[(q, s)] = (r - q) % p
            decoded[(q, s)].append(sym)
        if len(set(ks.values())) > 1:
            return Recognition(False, "alignment", f"level {level}: k0 values {ks}")
        k0 = next(iter(ks.values()))
        cur = {key: omega(p, k0, w) for key, w in cur.items()}
    words = {}
    for (q, s), bits in decoded.items():
        if s in words and words[s] != bits:
            return Recognition(False, "cross-q", f"generator {s}: {words[s]} vs {bits} (q={q})")
        words[s] = bits
    words = {s: [int(b) for b in bits] for s, bits in words.items()}
    if flow is not None:
        from .flows import matches

        forbidden = flow.forbidden_words(budget)
        for s, bits in words.items():
            hit = next((c for c in forbidden if matches(c, bits)), None)
            if hit is not None:
                return Recognition(False, "flow", f"w_{s} lies in forbidden cylinder {hit}", words)
        base = words.get(flow.group.generators[0])
        for s, bits in words.items():
            for c in flow.action_forbidden(s, bits, budget):
                if matches(c, base):
                    return Recognition(False, "flow", f"w_e is incompatible with f_{s}^-1[w_{s}]", words)
    return Recognition(True, words=words)


# ---------------------------------------------------------------------------
# text formats


def format_tword(p: int, q: int, w: TWord) -> str:
    return f"{p} {q} {w.start} {w.end}\n{w.text()}\n"


def parse_tword(text: str) -> tuple[int, int, TWord]:
    lines = [l.strip() for l in text.splitlines() if l.strip()]
    try:
        p, q, a, b = (int(t) for t in lines[0].split())
    except (IndexError, ValueError) as exc:
        raise ValueError("bad TWord header") from exc
    body = lines[1] if len(lines) > 1 else ""
    if len(body) != b - a + 1:
        raise ValueError(f"expected {b - a + 1} symbols, got {len(body)}")
    if set(body) - {"0", "1", GAP}:
        raise ValueError("symbols must be 0, 1 or $")
    return p, q, TWord.from_string(a, body)


def format_layerword(p: int, lw: LayerWord) -> str:
    out = []
    for (q, s), w in lw.layers.items():
        out.append(f"layer {q} {s}")
        out.append(format_tword(p, q, w).rstrip("\n"))
    return "\n".join(out) + "\n"


def parse_layerword(text: str) -> tuple[int, LayerWord]:
    lines = [l.strip() for l in text.splitlines() if l.strip()]
    layers, p = {}, None
    for k in range(0, len(lines), 3):
        tag = lines[k].split()
        if tag[0] != "layer":
            raise ValueError(f"expected a layer tag, got {lines[k]!r}")
        p, q, w = parse_tword("\n".join(lines[k + 1:k + 3]))
        layers[(int(tag[1]), tag[2])] = w
    return p, LayerWord(layers)
