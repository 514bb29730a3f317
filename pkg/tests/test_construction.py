import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semidirect.construction import (
    CellLayout,
    Inconsistent,
    PointOracle,
    TableOracle,
    build_ystar,
    build_yh,
    build_zab,
    format_dump,
    glue_check,
    parse_dump,
    pi_cell_check,
    proj_phi,
    proj_phi_bits,
    projective_read,
    render_coset,
    support_of,
    upsilon_decode,
)
from semidirect.flows import FullShift, recode_subshift, squarefree_flow
from semidirect.groups import AutoMatrix, GElem, Semidirect, heisenberg, reduce_mod_p
from semidirect.substitutions import nonzero_vectors
from semidirect.toeplitz import GAP, psi_encode

LAYOUT = CellLayout(3, ("e", "t"))


def test_blank_cell_passes():
    assert pi_cell_check(LAYOUT.blank())


def test_rule_one_black_needs_symbol():
    c = LAYOUT.blank().replace("subs", (1, 0), True)
    assert not pi_cell_check(c)
    assert pi_cell_check(c.replace("hlayers", (1, "e"), "1"))
    d = LAYOUT.blank().replace("subs", (0, 2), True)
    assert not pi_cell_check(d)
    assert pi_cell_check(d.replace("vlayers", (2, "e"), "0"))


def test_rule_two_equal_symbols():
    c = LAYOUT.blank().replace("subs", (1, 1), True)
    c = c.replace("hlayers", (1, "e"), "0").replace("vlayers", (1, "e"), "0")
    assert pi_cell_check(c)
    assert not pi_cell_check(c.replace("hlayers", (1, "t"), "0").replace("vlayers", (1, "t"), "1"))


def test_rule_one_converse_fails_on_genuine_cells(flow):
    # (1,0) of y^1 carries x_0 on the horizontal layer but is white in Sub_(1,1)
    c = build_yh(flow, "", (1, 0))
    assert c.hlayers[(1, "e")] != GAP and not c.subs[(1, 1)]
    assert pi_cell_check(c)


def test_zab_examples():
    assert build_zab(3, (1, 1), (1, 1))
    assert not build_zab(3, (1, 1), (0, 0))
    assert build_zab(3, (1, 1), (3, 3))
    assert build_zab(3, (1, 1), (4, 1))
    assert not build_zab(3, (1, 1), (3, 0))
    with pytest.raises(ValueError):
        build_zab(3, (0, 0), (1, 1))


@settings(max_examples=200)
@given(st.sampled_from(nonzero_vectors(3)), st.integers(-500, 500), st.integers(-500, 500))
def test_zab_against_search(v, i, j):
    want = any(
        (i - 3 ** m * v[0]) % 3 ** (m + 1) == 0 and (j - 3 ** m * v[1]) % 3 ** (m + 1) == 0 for m in range(8)
    )
    assert build_zab(3, v, (i, j)) == want


def test_exactly_one_black_layer_off_origin():
    for i, j in itertools.product(range(-30, 31), repeat=2):
        n = sum(build_zab(3, v, (i, j)) for v in nonzero_vectors(3))
        assert n == (0 if (i, j) == (0, 0) else 1)


def test_yh_cells_pass_cell_rules(flow):
    H = flow.group
    oracle = PointOracle.for_flow(flow)
    for h in H.ball(2):
        for i, j in itertools.product(range(-40, 41), repeat=2):
            assert pi_cell_check(oracle(GElem((i, j), h)))


def test_yh_at_11(flow):
    H = flow.group
    for hw in ("", "t", "T", "tt"):
        c = build_yh(flow, hw, (1, 1))
        assert c.subs[(1, 1)]
        for s in ("e", "t"):
            bit = str(flow.point_bit(H.mul(H.evaluate(s), H.evaluate(hw)), 0))
            assert c.hlayers[(1, s)] == c.vlayers[(1, s)] == bit


def test_yh_identity_at_10(flow):
    assert build_yh(flow, "", (1, 0)).hlayers[(1, "e")] == str(flow.point_bit(0, 0))


def test_yh_rows_are_psi(flow):
    x = [str(b) for b in flow.point_prefix("t", 8)]
    row = psi_encode(3, 2, x, (-40, 40))
    for i in range(-40, 41):
        assert build_yh(flow, "", (i, 7)).hlayers[(2, "t")] == row[i]


def test_ystar_identity_coset_is_y1(flow):
    for i, j in itertools.product(range(-9, 10), repeat=2):
        assert build_ystar(flow, GElem((i, j), 0)) == build_yh(flow, "", (i, j))


def test_ystar_heisenberg_example(flow):
    A = AutoMatrix(1, 1, 0, 1).inverse()
    assert A.apply((0, 1)) == (-1, 1)
    assert build_ystar(flow, GElem((0, 1), 1)) == build_yh(flow, "T", (-1, 1))


def test_ystar_is_deterministic(flow):
    g = GElem((5, -7), 2)
    assert build_ystar(flow, g) == build_ystar(flow, g)
    o = PointOracle.for_flow(flow)
    assert o(g) is o(g)


def test_glue_examples():
    M = reduce_mod_p(AutoMatrix(1, 1, 0, 1).inverse())
    a, b = M.apply((1, 1))
    assert (a, b) == (0, 1)
    c1 = LAYOUT.blank()
    assert glue_check("t", c1, LAYOUT.blank(), M)
    c1 = c1.replace("subs", (0, 1), True)
    assert not glue_check("t", c1, LAYOUT.blank(), M)
    c2 = LAYOUT.blank().replace("subs", (1, 1), True).replace("vlayers", (1, "e"), "1")
    assert not glue_check("t", c1.replace("vlayers", (1, "t"), "0"), c2, M)
    assert glue_check("t", c1.replace("vlayers", (1, "t"), "1"), c2, M)


def test_glue_holds_on_ystar(oracle):
    G = oracle.G
    H = G.H
    for s in H.generators:
        si = H.inv(H.evaluate(s))
        M = reduce_mod_p(H.matrix(si))
        for g in G.ball(3):
            assert glue_check(s, oracle(g), oracle(G.mul(g, GElem((0, 0), si))), M)


def test_glue_is_a_tautology_for_identity(oracle):
    M = reduce_mod_p(AutoMatrix.identity())
    for g in oracle.G.ball(2):
        assert glue_check("e", oracle(g), oracle(g), M)


def test_upsilon_round_trip(flow, oracle):
    assert upsilon_decode(oracle, 0) == []
    assert upsilon_decode(oracle, 4) == flow.point_prefix("", 4)


def test_upsilon_detects_corrupted_lattice(oracle):
    G = oracle.G
    cells = {GElem((i, j), 0): oracle(GElem((i, j), 0)) for i in range(-13, 14) for j in range(-13, 14)}
    g = GElem((3, 3), 0)  # a cell of B_1 in Sub_(1,1)
    old = cells[g].hlayers[(1, "e")]
    cells[g] = cells[g].replace("hlayers", (1, "e"), "1" if old == "0" else "0")
    with pytest.raises(Inconsistent):
        upsilon_decode(TableOracle(G, oracle.layout, cells), 3)


def test_upsilon_decodes_shifted_cosets(flow, oracle):
    H = flow.group
    for h in H.ball(2):
        got = upsilon_decode(oracle.shifted(GElem((0, 0), h)), 3)
        assert got == [flow.point_bit(h, n) for n in range(3)]


def test_proj_phi_examples():
    assert proj_phi(("0", "$", "1")) == 0
    assert proj_phi(("$", "0", "$")) == 0
    assert proj_phi(("$", "1", "0")) == 0
    assert proj_phi(("1", "$", "1")) == 1


def test_proj_phi_all_phases():
    # every window of Psi_1(x) is a cyclic shift of (a, x0, $)
    for x0 in (0, 1):
        for a in ("0", "1", "$"):
            u = [a, str(x0), "$"]
            for r in range(3):
                assert proj_phi(u[r:] + u[:r]) == x0
    # the linear reading fails on ($, a, 0)
    linear = lambda u: 0 if any(u[k] == "0" and u[k + 1] == "$" for k in range(2)) else 1
    assert linear(("$", "1", "0")) == 1 != proj_phi(("$", "1", "0"))


def test_proj_phi_bits_reads_levels():
    x = [1, 0, 1]
    row = psi_encode(3, 1, x, (0, 26)).symbols
    assert proj_phi_bits([str(s) for s in row], 3) == x


def test_projective_read_binary():
    H = heisenberg()
    flow = recode_subshift(FullShift(H, 2, radius=10, seed=11), H)
    oracle = PointOracle.for_flow(flow)
    got = projective_read(oracle, range(-8, 9))
    assert got == {h: flow.subshift.point(h) for h in range(-8, 9)}


def test_projective_read_ternary(flow, oracle):
    got = projective_read(oracle, range(-8, 9))
    assert got == {h: flow.subshift.point(h) for h in range(-8, 9)}
    assert projective_read(oracle, [0])[0] == flow.subshift.point(0)


def test_projective_read_shift_compatible(flow, oracle):
    # reading sigma_{(0,h')} y* at h gives z* at h'^-1 h
    for hp in (1, -2):
        shifted = oracle.shifted(GElem((0, 0), hp))
        got = projective_read(shifted, range(-3, 4), flow)
        assert got == {h: flow.subshift.point(h - hp) for h in range(-3, 4)}


def test_dump_round_trip(oracle):
    G = oracle.G
    ball = G.ball(1)
    support = support_of(G, ball, 1)
    config = {"group": "heisenberg", "flow": {"kind": "squarefree", "colors": 3, "L": 8, "radius": 30}, "p": 3, "radius": 1, "depth": 1}
    text = format_dump(config, oracle, ball, support)
    cfg, ball2, table = parse_dump(text)
    assert cfg == config and ball2 == ball
    for g in ball + support:
        assert table(g) == oracle(g)
    with pytest.raises(ValueError):
        parse_dump("hello\n")


def test_layout_serialization(oracle):
    c = oracle(GElem((4, 1), 1))
    assert LAYOUT.deserialize(LAYOUT.serialize(c)) == c
    with pytest.raises(ValueError):
        LAYOUT.deserialize("$$ $$$$ ........")


def test_render_coset(oracle):
    pic = render_coset(oracle, 0, "sub:1,1", side=9)
    rows = pic.splitlines()
    assert len(rows) == 9 and all(len(r) == 9 for r in rows)
    # (1,1) sits at column 5, row 9 - 1 - 5
    assert rows[3][5] == "#"
    assert set(render_coset(oracle, 0, "h:2,t", side=9)) <= set("01$\n")
    with pytest.raises(ValueError):
        render_coset(oracle, 0, "x:1", side=9)
