"""Iterate s_v, print a small patch, and split it into its lattices."""

from semidirect.substitutions import BLACK, SubRule, decompose_lattices, iterate, render_ascii

rule = SubRule(3, (1, 1))
patch = iterate(rule, BLACK, 2)
print(render_ascii(patch))
print()

big = iterate(rule, BLACK, 4)
dec = decompose_lattices(rule, big, 3)
for m in range(4):
    lat = dec.lattice(m)
    print(f"B_{m}: anchor {lat.anchor} mod {3 ** (m + 1)}")
print("residual cell:", dec.residual)
