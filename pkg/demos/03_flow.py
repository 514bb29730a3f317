"""A square-free H-coloring of the Heisenberg fiber and its recoded flow."""

from semidirect.flows import flow_point_eval, squarefree_flow
from semidirect.groups import heisenberg

H = heisenberg()
flow = squarefree_flow(H, 3)
print("z* on -8..8:", "".join(str(flow.subshift.point(h)) for h in range(-8, 9)))
for word in ("e", "t", "T", "tt"):
    bits = [flow_point_eval(flow, word, n) for n in range(8)]
    print(f"f_{word}(x*)[:8] =", "".join(map(str, bits)))
