import random

import pytest

from semidirect.construction import PointOracle, TableOracle, support_of
from semidirect.flows import BudgetExceeded, squarefree_flow
from semidirect.groups import GElem, free2
from semidirect.verify import (
    RuleSet,
    check_aperiodicity,
    check_equivariance,
    format_violations,
    format_witnesses,
    inject_fault,
    scan_rules,
    violations_json,
    witnesses_json,
)


def _table(oracle, radius, depth):
    G = oracle.G
    ball = G.ball(radius)
    cells = {g: oracle(g) for g in ball + support_of(G, ball, depth)}
    return ball, TableOracle(G, oracle.layout, cells)


def test_ystar_has_no_violations(flow, oracle):
    assert scan_rules(oracle, 2, RuleSet(flow=flow), depth=2) == []


def test_scan_order_independent(flow, oracle):
    ball, table = _table(oracle, 1, 1)
    bad, _ = inject_fault(table, ball, random.Random(4))
    a = scan_rules(bad, 1, RuleSet(flow=flow), 1, ball=ball)
    b = scan_rules(bad, 1, RuleSet(flow=flow), 1, ball=list(reversed(ball)))
    assert a == b and a


def test_flipped_sub_bit_is_caught(flow, oracle):
    ball, table = _table(oracle, 1, 1)
    g = GElem((1, 0), 0)
    cells = dict(table.cells)
    cells[g] = cells[g].replace("subs", (1, 1), True)
    v = scan_rules(TableOracle(oracle.G, oracle.layout, cells), 1, RuleSet(flow=flow), 1, ball=ball)
    assert any(x.rule == "cell" or x.rule.startswith("window") for x in v)


def test_glue_corruption_is_located(flow, oracle):
    G = oracle.G
    ball, table = _table(oracle, 1, 1)
    g = GElem((0, 1), 0)  # black in Sub_(0,1) = Sub_{phi~_{t^-1}(1,1)}
    partner = G.mul(g, GElem((0, 0), -1))
    cells = dict(table.cells)
    old = cells[partner].vlayers[(1, "e")]
    cells[partner] = cells[partner].replace("vlayers", (1, "e"), "1" if old == "0" else "0")
    v = scan_rules(TableOracle(G, oracle.layout, cells), 1, RuleSet(window=False), 1, ball=ball)
    assert [(x.rule, x.location) for x in v] == [("glue(t)", g)]


def test_missing_cells_exceed_budget(oracle):
    ball, table = _table(oracle, 1, 1)
    with pytest.raises(BudgetExceeded):
        scan_rules(table, 1, RuleSet(), depth=2, ball=ball)


def test_fault_injection_small(flow, oracle):
    ball, table = _table(oracle, 1, 1)
    rng = random.Random(1)
    rules = RuleSet(flow=flow)
    for _ in range(30):
        bad, desc = inject_fault(table, ball, rng)
        assert scan_rules(bad, 1, rules, 1, ball=ball, stop_first=True), desc


@pytest.mark.parametrize("hw", ["", "t", "T", "tt", "TT"])
def test_equivariance(flow, oracle, hw):
    res = check_equivariance(flow, oracle, hw, 3)
    assert res, res.detail
    assert res.decoded == flow.point_prefix(hw, 3)


def test_aperiodicity_examples(oracle):
    G = oracle.G
    w = check_aperiodicity(oracle, GElem((1, 0), 0), 9)
    assert w.position is not None and w.route.startswith("lattice")
    assert abs(w.position.vec[0]) + abs(w.position.vec[1]) <= 9
    w = check_aperiodicity(oracle, GElem((0, 0), 1), 81)
    assert w.position is not None and w.route.startswith("decoded")
    with pytest.raises(ValueError):
        check_aperiodicity(oracle, G.identity, 9)


def test_witnesses_are_genuine(oracle):
    G = oracle.G
    for g in G.ball(2)[1:]:
        w = check_aperiodicity(oracle, g, 81)
        assert oracle(G.mul(G.inv(g), w.position)) != oracle(w.position)


def test_translation_bound(oracle):
    # p^(m+1) > 2 |z| gives a witness on B_m
    for z in [(4, 0), (0, -5), (13, 13), (40, -2)]:
        w = check_aperiodicity(oracle, GElem(z, 0), 400)
        assert w.position is not None and w.route.startswith("lattice")


def test_period_not_excluded_is_a_value(oracle):
    # the origin is blank in every coset, so radius 0 cannot separate (0, t)
    w = check_aperiodicity(oracle, GElem((0, 0), 1), 0)
    assert w.position is None and w.verdict == "PeriodNotExcluded"


def test_reports(oracle):
    G = oracle.G
    assert format_violations(G, []) == "no violations\n"
    ws = [check_aperiodicity(oracle, g, 81) for g in G.ball(1)[1:]]
    assert len(format_witnesses(G, ws).splitlines()) == 6
    assert '"verdict": "witness"' in witnesses_json(G, ws)
    assert violations_json(G, []) == "[]"


def test_free_group_instance():
    # nonabelian H: small-scale scan and freeness checks
    H = free2()
    flow = squarefree_flow(H, 4, radius=4)
    oracle = PointOracle.for_flow(flow)
    assert scan_rules(oracle, 1, RuleSet(flow=flow), depth=1) == []
    for hw in ("a", "b", "aB"):
        assert check_equivariance(flow, oracle, hw, 2)
