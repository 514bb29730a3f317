"""Rule scanning, equivariance of the decoder and aperiodicity witnesses."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Optional

from .construction import (
    CellSymbol,
    Inconsistent,
    PointOracle,
    TableOracle,
    centered_window,
    glue_check,
    pi_cell_check,
    upsilon_decode,
)
from .flows import BudgetExceeded, FlowOracle, flow_point_eval
from .groups import GElem, reduce_mod_p
from .substitutions import NotSubstitutive, Patch, SubRule, decompose_lattices, is_in_language
from .toeplitz import LayerWord, TWord, recognize_top_word


@dataclass(frozen=True)
class Violation:
    rule: str
    location: GElem
    detail: str = ""


@dataclass
class RuleSet:
    """Which rule families to apply, plus the flow checks of the Toeplitz recognizer."""

    cell: bool = True
    glue: bool = True
    window: bool = True
    flow: Optional[FlowOracle] = None
    budget: int = 8
    _memo: dict = field(default_factory=dict, repr=False)


def _window_violations(oracle: PointOracle, h, depth: int, rules: RuleSet) -> list[tuple[str, Optional[tuple], str]]:
    """Window rules on the normalized coset view at h; locations are window coordinates."""
    p, layout = oracle.p, oracle.layout
    side = p ** (depth + 1)
    lo, hi = centered_window(side)
    view = oracle.coset_view(h)
    rng = range(lo, hi + 1)
    cells = {(i, j): view((i, j)) for i in rng for j in rng}
    memo_key = (p, depth, tuple(layout.serialize(cells[(i, j)]) for i in rng for j in rng))
    if memo_key in rules._memo:
        return rules._memo[memo_key]
    out = []
    tag = f"window({{}},{depth})"
    for pos, c in cells.items():
        if not pi_cell_check(c, p, layout.identity):
            out.append((tag.format("cell"), pos, "cell rule fails"))
    for key in layout.layer_keys:
        for i in rng:
            col = {cells[(i, j)].hlayers[key] for j in rng}
            if len(col) > 1:
                out.append((tag.format(f"h:{key[0]},{key[1]}"), (i, 0), f"column {i} is not constant"))
        for j in rng:
            row = {cells[(i, j)].vlayers[key] for i in rng}
            if len(row) > 1:
                out.append((tag.format(f"v:{key[0]},{key[1]}"), (0, j), f"row {j} is not constant"))
    for v in layout.vectors:
        rule = SubRule(p, v)
        black = [pos for pos, c in cells.items() if c.subs[v]]
        patch = Patch.from_black(black, (lo, lo), side, side)
        name = tag.format(f"sub:{v[0]},{v[1]}")
        if not is_in_language(rule, patch):
            out.append((name, None, "pattern is not in the substitution language"))
            continue
        try:
            decompose_lattices(rule, patch, depth)
        except NotSubstitutive as exc:
            out.append((name, None, str(exc)))
    for attr, axis in (("hlayers", "row"), ("vlayers", "column")):
        layers = {}
        for key in layout.layer_keys:
            if axis == "row":
                syms = [getattr(cells[(i, 0)], attr)[key] for i in rng]
            else:
                syms = [getattr(cells[(0, j)], attr)[key] for j in rng]
            layers[key] = TWord(lo, syms)
        verdict = recognize_top_word(p, LayerWord(layers), rules.flow, depth, rules.budget)
        if not verdict:
            out.append((tag.format(f"toeplitz-{axis}:{verdict.stage}"), None, verdict.detail))
    rules._memo[memo_key] = out
    return out


def scan_rules(
    oracle: PointOracle,
    radius: int,
    rules: Optional[RuleSet] = None,
    depth: int = 2,
    ball: Optional[list] = None,
    stop_first: bool = False,
) -> list[Violation]:
    """Apply cell, glue and window rules around ball(radius); sorted output.

    Raises BudgetExceeded when the oracle cannot supply a cell a rule needs.
    """
    rules = rules or RuleSet()
    G, layout = oracle.G, oracle.layout
    H = G.H
    ball = ball if ball is not None else G.ball(radius)
    inside = set(ball)
    out: list[Violation] = []

    def done():
        return stop_first and out

    if rules.cell:
        for g in ball:
            if not pi_cell_check(oracle(g), G.p, layout.identity):
                out.append(Violation("cell", g, "cell rule fails"))
                if done():
                    return out
    if rules.glue:
        for s in H.generators:
            si = H.inv(H.evaluate(s))
            M = reduce_mod_p(H.matrix(si), G.p)
            step = GElem((0, 0), si)
            for g in ball:
                if not glue_check(s, oracle(g), oracle(G.mul(g, step)), M, layout.identity):
                    out.append(Violation(f"glue({s})", g, f"against {G.format(G.mul(g, step))}"))
                    if done():
                        return out
    if rules.window:
        cosets: dict = {}
        for g in ball:
            cosets.setdefault(g.h, []).append(g)
        # report window violations at a canonical element of the coset
        cosets = {h: min(gs, key=lambda g: (_norm(g.vec), g.vec)) for h, gs in cosets.items()}
        for h, first in cosets.items():
            A = H.matrix(h)
            for rule, pos, detail in _window_violations(oracle, h, depth, rules):
                loc = first
                if pos is not None:
                    cand = GElem(A.apply(pos), h)
                    if cand in inside:
                        loc = cand
                out.append(Violation(rule, loc, f"coset {H.format(h)}: {detail}"))
                if done():
                    return out
    return sorted(out, key=lambda v: (v.location, v.rule, v.detail))


# ---------------------------------------------------------------------------
# equivariance


@dataclass
class EquivarianceResult:
    passed: bool
    decoded: list
    expected: list
    detail: str = ""

    def __bool__(self):
        return self.passed


def check_equivariance(flow: FlowOracle, oracle: PointOracle, h_word: str, depth: int) -> EquivarianceResult:
    """Upsilon of the (0,h)-shifted configuration against f_h(x*) from the flow."""
    H = oracle.G.H
    h = H.evaluate(h_word)
    expected = [flow_point_eval(flow, h_word, n) for n in range(depth)]
    try:
        decoded = upsilon_decode(oracle.shifted(GElem((0, 0), h)), depth)
    except Inconsistent as exc:
        return EquivarianceResult(False, [], expected, str(exc))
    ok = decoded == expected
    return EquivarianceResult(ok, decoded, expected, "" if ok else f"decoded {decoded}, expected {expected}")


# ---------------------------------------------------------------------------
# aperiodicity


@dataclass
class PeriodWitness:
    g: GElem
    position: Optional[GElem]
    route: str = ""
    radius: int = 0

    @property
    def verdict(self) -> str:
        return "witness" if self.position is not None else "PeriodNotExcluded"


def _norm(pos) -> int:
    return abs(pos[0]) + abs(pos[1])


def _by_norm(radius: int):
    for r in range(radius + 1):
        for x in range(-r, r + 1):
            y = r - abs(x)
            yield (x, y)
            if y:
                yield (x, -y)


def check_aperiodicity(oracle: PointOracle, g: GElem, radius: int, flow: Optional[FlowOracle] = None) -> PeriodWitness:
    """Look for a cell with y(g^-1 pos) != y(pos).

    Candidate cells lie in the coset of the identity, where |x| + |y| bounds
    the word length of ((x, y), 1). Translations are handled first on the
    level-m lattice of Sub_(1,1), with p^(m+1) > 2 max |z|; other elements
    first try the cells where the decoded words of f_h(x*) and x* differ.
    """
    G = oracle.G
    H, p = G.H, G.p
    if g == G.identity:
        raise ValueError("the identity is a period of every configuration")
    gi = G.inv(g)
    ident = H.identity

    def differs(vec) -> bool:
        pos = GElem(vec, ident)
        return oracle(G.mul(gi, pos)) != oracle(pos)

    def attempt(cands, route):
        for vec in cands:
            if _norm(vec) <= radius and differs(vec):
                return PeriodWitness(g, GElem(vec, ident), route, radius)
        return None

    z = g.vec
    if g.h == ident:
        big = max(abs(z[0]), abs(z[1]))
        m = 0
        while p ** (m + 1) <= 2 * big:
            m += 1
        base, step = p ** m, p ** (m + 1)
        span = radius // step + 1
        cands = sorted(
            ((base + step * u, base + step * v) for u in range(-span, span + 1) for v in range(-span, span + 1)),
            key=lambda c: (_norm(c), c),
        )
        found = attempt(cands, f"lattice B_{m}")
        if found:
            return found
    else:
        flow = flow or oracle.provenance
        if flow is not None and flow.has_exact_layer:
            n = next((n for n in range(64) if flow.point_bit(g.h, n) != flow.point_bit(ident, n)), None)
            if n is not None:
                cands = []
                for u in range(-2, 3):
                    i = p ** n * (1 + p * u)
                    cands += [(i, 0), (z[0] + i, z[1])]
                found = attempt(sorted(cands, key=lambda c: (_norm(c), c)), f"decoded bit {n}")
                if found:
                    return found
    found = attempt(_by_norm(radius), "scan")
    return found or PeriodWitness(g, None, "scan", radius)


# ---------------------------------------------------------------------------
# fault injection and reports


def inject_fault(oracle: TableOracle, targets: list, rng: random.Random) -> tuple[TableOracle, str]:
    """Copy of a table oracle with one field of one target cell changed."""
    layout = oracle.layout
    g = rng.choice(targets)
    cell: CellSymbol = oracle.cells[g]
    choices = [("hlayers", k) for k in layout.layer_keys]
    choices += [("vlayers", k) for k in layout.layer_keys]
    choices += [("subs", v) for v in layout.vectors]
    fname, idx = rng.choice(choices)
    old = getattr(cell, fname)[idx]
    if fname == "subs":
        new = not old
    else:
        new = rng.choice([s for s in ("0", "1", "$") if s != old])
    cells = dict(oracle.cells)
    cells[g] = cell.replace(fname, idx, new)
    desc = f"{oracle.G.format(g)}: {fname}[{idx}] {old} -> {new}"
    return TableOracle(oracle.G, layout, cells, oracle.provenance), desc


def format_violations(G, violations: list[Violation]) -> str:
    if not violations:
        return "no violations\n"
    return "".join(f"{v.rule} at {G.format(v.location)}: {v.detail}\n" for v in violations)


def violations_json(G, violations: list[Violation]) -> str:
    return json.dumps(
        [{"rule": v.rule, "location": G.format(v.location), "detail": v.detail} for v in violations], indent=1
    )


def format_witnesses(G, witnesses: list[PeriodWitness]) -> str:
    lines = []
    for w in witnesses:
        where = G.format(w.position) if w.position is not None else f"none within radius {w.radius}"
        lines.append(f"{G.format(w.g)}: {w.verdict} at {where} ({w.route})")
    return "\n".join(lines) + "\n"


def witnesses_json(G, witnesses: list[PeriodWitness]) -> str:
    return json.dumps(
        [
            {
                "g": G.format(w.g),
                "verdict": w.verdict,
                "position": None if w.position is None else G.format(w.position),
                "route": w.route,
                "radius": w.radius,
            }
            for w in witnesses
        ],
        indent=1,
    )


__all__ = [
    "Violation",
    "RuleSet",
    "scan_rules",
    "EquivarianceResult",
    "check_equivariance",
    "PeriodWitness",
    "check_aperiodicity",
    "inject_fault",
    "format_violations",
    "violations_json",
    "format_witnesses",
    "witnesses_json",
    "BudgetExceeded",
]
