"""Command-line front end.

Exit status: 0 success, 1 rule violations or surviving periods, 2 usage
errors, 3 budget errors (cells outside the dump, no coloring found).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field, fields
from typing import Optional

from .construction import PointOracle, format_dump, parse_dump, render_coset, support_of
from .flows import BudgetExceeded, NoColoringFound, describe_flow, parse_flow
from .groups import group_from_spec
from .substitutions import SubRule, format_patch, iterate, render_ascii, render_ppm
from .toeplitz import (
    InsufficientPrefix,
    NotToeplitz,
    WindowTooSmall,
    decode,
    format_tword,
    parse_tword,
    psi_encode,
)
from .verify import (
    RuleSet,
    check_aperiodicity,
    format_violations,
    format_witnesses,
    scan_rules,
    violations_json,
    witnesses_json,
)

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    group: str = "heisenberg"
    flow: object = "squarefree:3"
    p: int = 3
    depth: int = 2
    radius: int = 3
    gmax: int = 2
    search_radius: int = 81
    budget: int = 8
    output: Optional[str] = None
    render: dict = field(default_factory=dict)

    def validate(self):
        if self.p < 3:
            raise UsageError("p must be at least 3")
        if min(self.depth, self.radius, self.gmax, self.search_radius) < 0:
            raise UsageError("radii and depths must be >= 0")
        if self.budget < 1:
            raise UsageError("budgets must be >= 1")
        return self


def load_config(args) -> RunConfig:
    """Flags first, then the config file (which wins)."""
    cfg = RunConfig()
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            setattr(cfg, f.name, val)
    path = getattr(args, "config", None)
    if path:
        with open(path) as fh:
            data = json.load(fh)
        unknown = set(data) - {f.name for f in fields(RunConfig)}
        if unknown:
            raise UsageError(f"unknown config keys {sorted(unknown)}")
        for k, v in data.items():
            setattr(cfg, k, v)
    return cfg.validate()


def write_atomic(path: str, data) -> None:
    mode = "wb" if isinstance(data, bytes) else "w"
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        write_atomic(path, text)
    else:
        sys.stdout.write(text)


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two integers 'a,b', got {text!r}") from None
    return a, b


def _make_flow(cfg: RunConfig):
    H = group_from_spec(cfg.group)
    return parse_flow(cfg.flow, H)


# ---------------------------------------------------------------------------
# commands


def cmd_substitute(args) -> int:
    try:
        rule = SubRule(args.p, args.v)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.n < 0:
        raise UsageError("n must be >= 0")
    patch = iterate(rule, args.seed, args.n)
    _emit(format_patch(rule, patch), args.output)
    if args.ascii:
        sys.stdout.write(render_ascii(patch) + "\n")
    if args.ppm:
        write_atomic(args.ppm, render_ppm(patch))
    return EXIT_OK


def cmd_toeplitz(args) -> int:
    if args.action == "encode":
        x = list(args.x)
        if set(x) - {"0", "1"}:
            raise UsageError("x must be a string of 0 and 1")
        try:
            w = psi_encode(args.p, args.q, x, args.window)
        except InsufficientPrefix as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        _emit(format_tword(args.p, args.q, w), args.output)
        return EXIT_OK
    with open(args.file) as fh:
        p, q, w = parse_tword(fh.read())
    try:
        res = decode(p, q, w, args.depth)
    except (NotToeplitz, WindowTooSmall) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    print("prefix", "".join(str(s) for s in res.prefix))
    print("kchain", " ".join(map(str, res.kchain)))
    print("residual", "none" if res.residual is None else res.residual)
    return EXIT_OK


def cmd_build(args) -> int:
    cfg = load_config(args)
    flow = _make_flow(cfg)
    oracle = PointOracle.for_flow(flow, cfg.p)
    G = oracle.G
    ball = G.ball(cfg.radius)
    support = support_of(G, ball, cfg.depth)
    config = {
        "group": cfg.group,
        "flow": describe_flow(flow),
        "p": cfg.p,
        "radius": cfg.radius,
        "depth": cfg.depth,
        "budget": cfg.budget,
    }
    _emit(format_dump(config, oracle, ball, support), cfg.output)
    print(f"{len(ball)} ball records, {len(support)} support records", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    with open(args.dump) as fh:
        config, ball, oracle = parse_dump(fh.read())
    depth = args.depth if args.depth is not None else config.get("depth", 2)
    flow = parse_flow(config["flow"], config["group"])
    rules = RuleSet(flow=flow, budget=config.get("budget", 8))
    violations = scan_rules(oracle, config["radius"], rules, depth, ball=ball)
    G = oracle.G
    report = violations_json(G, violations) + "\n" if args.json else format_violations(G, violations)
    _emit(report, args.report)
    return EXIT_VIOLATION if violations else EXIT_OK


def cmd_aperiodicity(args) -> int:
    cfg = load_config(args)
    flow = _make_flow(cfg)
    oracle = PointOracle.for_flow(flow, cfg.p)
    G = oracle.G
    witnesses = [check_aperiodicity(oracle, g, cfg.search_radius, flow) for g in G.ball(cfg.gmax)[1:]]
    report = witnesses_json(G, witnesses) + "\n" if args.json else format_witnesses(G, witnesses)
    _emit(report, cfg.output)
    return EXIT_OK if all(w.position is not None for w in witnesses) else EXIT_VIOLATION


def cmd_render(args) -> int:
    cfg = load_config(args)
    flow = _make_flow(cfg)
    oracle = PointOracle.for_flow(flow, cfg.p)
    H = flow.group
    h = H.identity
    if args.coset:
        try:
            h = H.parse(args.coset)
        except ValueError:
            try:
                h = H.evaluate(args.coset)  # a word in the generators, e.g. tT
            except KeyError as exc:
                raise UsageError(f"bad coset {args.coset!r}: {exc}") from None
    side = args.side or cfg.render.get("side", 27)
    layer = args.layer or cfg.render.get("layer", "sub:1,1")
    try:
        text = render_coset(oracle, h, layer, side)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"bad layer selection: {exc}") from exc
    _emit(text, cfg.output)
    if args.ppm:
        if not layer.startswith("sub:"):
            raise UsageError("PPM output needs a sub:a,b layer")
        from .substitutions import Patch

        rows = text.splitlines()[::-1]
        black = [(i, j) for j, row in enumerate(rows) for i, ch in enumerate(row) if ch == "#"]
        write_atomic(args.ppm, render_ppm(Patch.from_black(black, (0, 0), side, side)))
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_run_flags(sp):
    sp.add_argument("--config", help="JSON RunConfig; its values override flags")
    sp.add_argument("--group", help="named group or descriptor (default heisenberg)")
    sp.add_argument("--flow", help="flow descriptor such as squarefree:3 (default)")
    sp.add_argument("--p", type=int)
    sp.add_argument("--depth", type=int)
    sp.add_argument("--radius", type=int)
    sp.add_argument("--budget", type=int)
    sp.add_argument("-o", "--output")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="semidirect", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("substitute", help="iterate a substitution s_v")
    sp.add_argument("--p", type=int, default=3)
    sp.add_argument("--v", type=_pair, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", choices=["black", "white"], default="black")
    sp.add_argument("-o", "--output")
    sp.add_argument("--ascii", action="store_true")
    sp.add_argument("--ppm")
    sp.set_defaults(func=cmd_substitute)

    sp = sub.add_parser("toeplitz", help="Toeplitz encode or decode")
    tsub = sp.add_subparsers(dest="action", required=True)
    enc = tsub.add_parser("encode")
    enc.add_argument("--p", type=int, default=3)
    enc.add_argument("--q", type=int, default=1)
    enc.add_argument("--x", required=True, help="prefix bits, e.g. 0110")
    enc.add_argument("--window", type=_pair, required=True)
    enc.add_argument("-o", "--output")
    dec = tsub.add_parser("decode")
    dec.add_argument("file")
    dec.add_argument("--depth", type=int, default=4)
    sp.set_defaults(func=cmd_toeplitz)

    sp = sub.add_parser("build", help="dump y* on a ball of G")
    _add_run_flags(sp)
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("verify", help="scan a dump for rule violations")
    sp.add_argument("dump")
    sp.add_argument("--depth", type=int)
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--report")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("aperiodicity", help="period witnesses for every g != 1 in a ball")
    _add_run_flags(sp)
    sp.add_argument("--gmax", type=int)
    sp.add_argument("--search-radius", dest="search_radius", type=int)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_aperiodicity)

    sp = sub.add_parser("render", help="ASCII or PPM picture of a coset window")
    _add_run_flags(sp)
    sp.add_argument("--coset", help="element of H or a generator word (default identity)")
    sp.add_argument("--layer", help="sub:a,b | h:q,s | v:q,s")
    sp.add_argument("--side", type=int)
    sp.add_argument("--ppm")
    sp.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceeded, NoColoringFound) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
