"""Period witnesses for the nontrivial elements of ball(2)."""

from semidirect.construction import PointOracle
from semidirect.flows import squarefree_flow
from semidirect.groups import heisenberg
from semidirect.verify import check_aperiodicity, format_witnesses

flow = squarefree_flow(heisenberg(), 3)
oracle = PointOracle.for_flow(flow)
G = oracle.G
ws = [check_aperiodicity(oracle, g, 81, flow) for g in G.ball(2)[1:]]
print(format_witnesses(G, ws), end="")
