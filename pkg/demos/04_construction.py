"""Build y* on a ball, scan it for rule violations, then break one cell."""

import random

from semidirect.construction import PointOracle, TableOracle, render_coset, support_of
from semidirect.flows import squarefree_flow
from semidirect.groups import heisenberg
from semidirect.verify import RuleSet, inject_fault, scan_rules

flow = squarefree_flow(heisenberg(), 3)
oracle = PointOracle.for_flow(flow)
print(render_coset(oracle, 0, "sub:1,1", 27))

G = oracle.G
ball = G.ball(2)
rules = RuleSet(flow=flow)
print("violations on ball(2):", len(scan_rules(oracle, 2, rules, 2)))

cells = {g: oracle(g) for g in [*ball, *support_of(G, ball, 2)]}
bad, desc = inject_fault(TableOracle(G, oracle.layout, cells, flow), ball, random.Random(3))
found = scan_rules(bad, 2, rules, 2, ball=ball, stop_first=True)
print("after", desc, "->", found[:1])
