import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semidirect.groups import AutoMatrix, reduce_mod_p
from semidirect.substitutions import (
    BLACK,
    WHITE,
    Lattice,
    NotSubstitutive,
    Patch,
    SubRule,
    decompose_lattices,
    desubstitute,
    embeds_in_iterate,
    format_patch,
    is_in_language,
    iterate,
    map_lattice,
    nonzero_vectors,
    parse_patch,
    render_ascii,
    render_ppm,
    substitute_once,
)

VECTORS = nonzero_vectors(3)


def test_eight_vectors():
    assert len(VECTORS) == 8 and (0, 0) not in VECTORS


def test_displays_for_11():
    rule = SubRule(3, (1, 1))
    assert render_ascii(iterate(rule, WHITE, 1)) == "...\n.#.\n..."
    assert render_ascii(iterate(rule, BLACK, 1)) == "...\n.#.\n#.."


def test_iterate_two_has_eleven_black_cells():
    assert int(iterate(SubRule(3, (1, 1)), BLACK, 2).cells.sum()) == 11
    assert iterate(SubRule(3, (1, 1)), BLACK, 0).cells.shape == (1, 1)


def test_rule_validation():
    with pytest.raises(ValueError):
        SubRule(3, (0, 0))
    with pytest.raises(ValueError):
        SubRule(3, (3, 6))
    with pytest.raises(ValueError):
        SubRule(2, (1, 0))


@pytest.mark.parametrize("v", VECTORS)
def test_powers_of_v_are_black(v):
    for seed in (BLACK, WHITE):
        for n in range(1, 5):
            patch = iterate(SubRule(3, v), seed, n)
            for m in range(n):
                assert patch[(3 ** m * v[0], 3 ** m * v[1])]


@pytest.mark.parametrize("v", VECTORS)
def test_desubstitute_inverts_substitute(v):
    rule = SubRule(3, v)
    big = iterate(rule, BLACK, 3)
    parent, anchor = desubstitute(rule, big)
    assert anchor == (0, 0)
    assert parent == iterate(rule, BLACK, 2)


def test_desubstitute_rejects_garbage():
    rule = SubRule(3, (1, 1))
    with pytest.raises(NotSubstitutive):
        desubstitute(rule, Patch((0, 0), np.ones((9, 9), dtype=bool)))
    with pytest.raises(ValueError):
        desubstitute(rule, Patch.blank((0, 0), 4, 4))


def _brute_classes(rule, patch, maxlevel):
    # independent classification: the level of a black cell c relative to the
    # known anchor (0, 0) is the m with c = 3^m v mod 3^(m+1)
    out = {}
    for c in patch.black_cells():
        level = None
        for m in range(maxlevel + 1):
            mod = 3 ** (m + 1)
            if all((c[k] - 3 ** m * rule.v[k]) % mod == 0 for k in (0, 1)):
                level = m
                break
        out.setdefault(level, set()).add(c)
    return out


@pytest.mark.parametrize("v", VECTORS)
def test_decomposition_matches_brute_force(v):
    rule = SubRule(3, v)
    patch = iterate(rule, BLACK, 4)
    dec = decompose_lattices(rule, patch, 3)
    classes = _brute_classes(rule, patch, 3)
    covered = set()
    for m in range(4):
        cells = dec.lattice(m).cells_in((0, 0), 81, 81, 3) & patch.black_cells()
        assert cells == classes.get(m, set())
        assert not (cells & covered)
        covered |= cells
    rest = patch.black_cells() - covered
    assert rest == classes.get(None, set()) == {(0, 0)}
    assert dec.residual == (0, 0)
    assert dec.synthesize((0, 0), 81, 81) == patch


def test_white_seed_has_no_residual():
    rule = SubRule(3, (2, 1))
    assert decompose_lattices(rule, iterate(rule, WHITE, 3), 2).residual is None


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(VECTORS), st.integers(0, 80 - 27), st.integers(0, 80 - 27))
def test_windows_have_lattice_structure(v, x, y):
    rule = SubRule(3, v)
    win = iterate(rule, BLACK, 4).window((x, y), 27, 27)
    dec = decompose_lattices(rule, win, 2)
    for m in range(3):
        lat = dec.lattice(m)
        # translate the anchor back to absolute coordinates of s^4
        assert lat.contains((3 ** m * v[0], 3 ** m * v[1]), 3)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(VECTORS), st.integers(0, 81 - 9), st.integers(0, 81 - 9), st.integers(3, 9))
def test_windows_are_in_language(v, x, y, L):
    rule = SubRule(3, v)
    big = iterate(rule, BLACK, 4)
    x, y = min(x, 81 - L), min(y, 81 - L)
    assert is_in_language(rule, big.window((x, y), L, L))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(VECTORS), st.integers(0, 70), st.integers(0, 70), st.integers(0, 35))
def test_language_agrees_with_large_iterate(v, x, y, flip):
    # one flipped cell: exact membership must agree with the factor set of s^5
    rule = SubRule(3, v)
    L = 6
    win = iterate(rule, BLACK, 4).window((x, y), L, L)
    cells = win.cells.copy()
    cells[flip // L, flip % L] ^= True
    patch = Patch((0, 0), cells)
    assert is_in_language(rule, patch) == embeds_in_iterate(rule, patch, 5)


def test_language_bound_counterexample():
    # a 3x3 window of s^5 for v = (0, 1) that s^2 does not contain although
    # 3^2 >= 3 * 3: the side-based depth bound is too small for axis vectors
    rule = SubRule(3, (0, 1))
    win = iterate(rule, BLACK, 5).window((34, 145), 3, 3)
    assert not embeds_in_iterate(rule, win, 2)
    assert embeds_in_iterate(rule, win, 3)
    assert is_in_language(rule, win)


@pytest.mark.parametrize(
    "A",
    [AutoMatrix(1, 1, 0, 1), AutoMatrix(0, -1, 1, 0), AutoMatrix(2, 1, 1, 1), AutoMatrix(0, 1, 1, 0), AutoMatrix(1, 0, -1, 1)],
)
@pytest.mark.parametrize("v", VECTORS)
def test_automorphisms_map_lattices(A, v):
    M = reduce_mod_p(A, 3)
    v2 = M.apply(v)
    for m in range(3):
        lat = Lattice(m, (0, 0), v)
        img = map_lattice(A, lat)
        assert img.v == v2
        for c in sorted(lat.cells_in((-30, -30), 60, 60, 3))[:20]:
            assert img.contains(A.apply(c), 3)


def test_patch_text_round_trip(tmp_path):
    rule = SubRule(3, (2, 1))
    patch = iterate(rule, BLACK, 2)
    r2, p2 = parse_patch(format_patch(rule, patch))
    assert r2 == rule and p2 == patch
    with pytest.raises(ValueError):
        parse_patch("3 1 1 0 0 2 2\n#.\n")
    data = render_ppm(patch)
    assert data.startswith(b"P6\n9 9\n255\n") and len(data) == len(b"P6\n9 9\n255\n") + 9 * 9 * 3
