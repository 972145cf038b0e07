import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dobrushin.lattice import (
    box,
    boundary_sets,
    build_domain,
    dual,
    dual_config,
    edge,
    induced_edges,
    is_dual,
    is_primal,
    l_domain,
    primal,
    tile_corners,
    tile_edge,
    tile_of,
)


def test_domain_2x2():
    dom = build_domain(2, 2)
    assert len(dom.Lam) == 25
    assert dom.vL == (-6, 0) and dom.vR == (6, 0)


def test_domain_1x1():
    assert len(build_domain(1, 1).Lam) == 9


def test_domain_edge_count():
    # edges inside the 5x5 block plus edges to the upper exterior: 3 per side, 5 on top
    dom = build_domain(2, 2)
    inside = 2 * 5 * 4
    assert len(dom.E) == inside + 3 + 3 + 5
    lam = set(dom.Lam)
    assert all(e[0] in lam or e[1] in lam for e in dom.E)
    assert all(min(x[1] for x in e) >= 0 for e in dom.E if not (e[0] in lam and e[1] in lam))


def test_domain_rejects_empty():
    with pytest.raises(ValueError):
        build_domain(0, 1)


def test_domain_tiles_partition():
    dom = build_domain(2, 3)
    assert set(dom.tiles_bd) | set(dom.tiles_int) == set(dom.tiles_A)
    assert set(dom.tiles_bd_plus) | set(dom.tiles_bd_minus) == set(dom.tiles_bd)
    assert dom.E_bar == dom.E + dom.E_b_plus


def test_dual_config_all_open():
    dom = build_domain(1, 1)
    de, w = dual_config(dom.E, np.ones(len(dom.E), dtype=bool))
    assert not w.any()
    assert all(is_dual(x) for e in de for x in e)


def test_dual_involution_random():
    rng = random.Random(0)
    for _ in range(100):
        x, y = rng.randint(-50, 50), rng.randint(-50, 50)
        a = primal(x, y)
        b = primal(x + 1, y) if rng.random() < 0.5 else primal(x, y + 1)
        e = edge(a, b)
        assert dual(dual(e)) == e
        assert dual(e) != e
        assert tile_of(dual(e)) == tile_of(e)


def test_boundary_sets_examples():
    inner, outer, bedge = boundary_sets({(0, 0)})
    assert outer == {(2, 0), (-2, 0), (0, 2), (0, -2)} and inner == {(0, 0)} and len(bedge) == 4
    inner, outer, bedge = boundary_sets(box(1, 1))
    assert len(bedge) == 12 and len(outer) == 12 and len(inner) == 8
    assert boundary_sets(set()) == (set(), set(), set())


def test_tile_corners():
    t = (1, 0)
    i, j, u, v = tile_corners(t)
    assert tile_edge(t) == (i, j)
    assert all(is_primal(x) for x in (i, j)) and all(is_dual(x) for x in (u, v))
    assert dual((i, j)) == (u, v)


def test_l_domain_parity():
    # a single primal vertex: all diamond neighbours are dual, so the domain is odd
    assert l_domain({(0, 0)}).parity == "odd"
    assert l_domain({(1, 1)}).parity == "even"


@given(st.sets(st.tuples(st.integers(-4, 4), st.integers(-4, 4)), min_size=1, max_size=25))
def test_boundary_edges_cross(S):
    V = {primal(*p) for p in S}
    inner, outer, bedge = boundary_sets(V)
    assert inner <= V and not (outer & V)
    for a, b in bedge:
        assert (a in V) != (b in V)
    assert len(induced_edges(V)) * 2 + len(bedge) == 4 * len(V)
