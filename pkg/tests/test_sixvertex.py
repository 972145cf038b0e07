import itertools
import math

import numpy as np
import pytest

from dobrushin.lattice import build_domain, is_dual, l_domain, tile_corners
from dobrushin.oracle import EVEN_2X2, ODD_PLUS
from dobrushin.params import from_q
from dobrushin.sixvertex import (
    FORCED,
    HeightFunction,
    SpinPair,
    dobrushin_boundary_ok,
    dobrushin_window,
    even_window,
    heights_from,
    heights_from_orientation,
    height_from_spins,
    ice_ok,
    is_height_function,
    loops_of,
    odd_window,
    orient_loops,
    orientation_from_spins,
    spin_log_weight,
    spins_from_height,
    spins_from_orientation,
    tile_type,
    trace_arcs,
)

P25 = from_q(25)


def windows():
    return [
        dobrushin_window(build_domain(1, 1)),
        dobrushin_window(build_domain(2, 2)),
        even_window(l_domain(EVEN_2X2)),
        odd_window(l_domain(ODD_PLUS)),
    ]


@pytest.mark.parametrize("k", range(4))
def test_loop_count_matches_tracing(k):
    win = windows()[k]
    rng = np.random.default_rng(k)
    for _ in range(200):
        w = rng.random(len(win.fk_edges)) < 0.5
        cycles, _ = trace_arcs(win, win.tile_states(w))
        assert loops_of(w, win).n_loops == cycles


def test_single_tile_arc_pairs():
    # flipping one free tile changes the number of traced cycles by exactly one
    win = dobrushin_window(build_domain(1, 1))
    st = win.tile_states(np.zeros(len(win.fk_edges), dtype=bool))
    c0, _ = trace_arcs(win, st)
    t = int(np.flatnonzero(win.src >= 0)[0])
    st[t] = True
    c1, _ = trace_arcs(win, st)
    assert abs(c1 - c0) == 1


def test_all_open_loops_encircle_dual_vertices():
    dom = build_domain(2, 2)
    win = dobrushin_window(dom)
    lp = loops_of(np.ones(len(dom.E), dtype=bool), win)
    assert lp.n_loops == len(dom.Lam_dual)
    lamd = set(dom.Lam_dual)
    for c in lp.free:
        members = [v for k, v in enumerate(win.nodes) if lp.label[k] == c]
        assert len(members) == 1 and members[0] in lamd


def test_orientation_rules():
    win = dobrushin_window(build_domain(2, 2))
    rng = np.random.default_rng(4)
    w = rng.random(len(win.fk_edges)) < 0.6
    lp = loops_of(w, win)
    o = orient_loops(lp, P25, np.zeros(lp.n_loops))
    assert o.clockwise[lp.free].all()
    o1 = orient_loops(lp, P25, np.full(lp.n_loops, 0.999))
    assert not o1.clockwise[lp.free].any()
    forced = lp.kind == FORCED
    assert np.array_equal(o.clockwise[forced], o1.clockwise[forced])
    with pytest.raises(ValueError):
        orient_loops(lp, P25, np.zeros(lp.n_loops + 1))


def test_orientation_frequency():
    lam = math.acosh(2.5)
    target = math.exp(lam) / (math.exp(lam) + math.exp(-lam))
    win = even_window(l_domain(EVEN_2X2))
    lp = loops_of(np.ones(len(win.fk_edges), dtype=bool), win)
    rng = np.random.default_rng(0)
    n = 40000
    hits = sum(orient_loops(lp, P25, rng.random(lp.n_loops)).clockwise[lp.free].sum() for _ in range(n // max(lp.n_loops, 1)))
    total = (n // max(lp.n_loops, 1)) * lp.n_loops
    assert abs(hits / total - target) < 4 * math.sqrt(target * (1 - target) / total)


def test_all_open_even_heights_are_boundary_values():
    win = even_window(l_domain(EVEN_2X2))
    w = np.ones(len(win.fk_edges), dtype=bool)
    lp = loops_of(w, win)
    assert lp.n_loops == 4
    h = heights_from(w, win, P25, np.zeros(lp.n_loops))
    assert all(x == (1 if is_dual(v) else 0) for v, x in h.values.items())


def test_single_enclosed_vertex_height_law():
    win = even_window(l_domain(EVEN_2X2))
    w = np.zeros(len(win.fk_edges), dtype=bool)
    lp = loops_of(w, win)
    k = win.nodes.index((0, 0))
    pos = list(lp.free).index(lp.label[k])
    vals = {}
    for u in (0.0, 0.999):
        uni = np.zeros(lp.n_loops)
        uni[pos] = u
        vals[u] = heights_from(w, win, P25, uni)[(0, 0)]
    assert vals == {0.0: 2, 0.999: 0}
    lam = P25.lam
    p_up = math.exp(lam) / 5
    assert p_up + math.exp(-lam) / 5 == pytest.approx(1.0)
    rng = np.random.default_rng(1)
    n = 5000
    ups = 0
    for _ in range(n):
        h = heights_from(w, win, P25, rng.random(lp.n_loops))
        ups += h[(0, 0)] - h[(1, 1)] == 1
    assert abs(ups / n - p_up) < 4 * math.sqrt(p_up * (1 - p_up) / n)


def test_nesting_depth_bounds_height():
    win = dobrushin_window(build_domain(3, 3))
    rng = np.random.default_rng(9)
    for _ in range(30):
        w = rng.random(len(win.fk_edges)) < 0.5
        lp = loops_of(w, win)
        h = heights_from(w, win, P25, rng.random(lp.n_loops))
        depth = np.zeros(lp.n_clusters, dtype=int)
        root_h = np.zeros(lp.n_clusters, dtype=int)
        for c in lp.order:
            p = lp.parent[c]
            if p >= 0:
                depth[c] = depth[p] + 1
                root_h[c] = root_h[p]
            else:
                root_h[c] = win.heights[0] if lp.kind[c] == 0 else win.heights[1]
        for k, v in enumerate(win.nodes):
            c = lp.label[k]
            assert abs(h[v] - root_h[c]) <= depth[c]


def test_spins_from_height_rules():
    h = HeightFunction({(0, 0): 0, (1, 1): 1, (2, 0): 4, (3, 1): 5})
    s = spins_from_height(h)
    assert set(s.primal.values()) == {1} and set(s.dual.values()) == {1}
    s3 = spins_from_height(HeightFunction({(1, 1): 3}))
    assert s3.dual[(1, 1)] == -1
    shifted = HeightFunction({v: x + 2 for v, x in h.values.items()})
    assert spins_from_height(shifted) == s.flipped()
    with pytest.raises(ValueError):
        spins_from_height(HeightFunction({(0, 0): 1}))


def test_tile_type_table():
    t = (1, 0)
    i, j, u, v = tile_corners(t)
    counts = {}
    errors = 0
    for si, sj, su, sv in itertools.product([1, -1], repeat=4):
        sig = SpinPair({i: si, j: sj}, {u: su, v: sv})
        if si != sj and su != sv:
            assert not ice_ok(sig, t)
            with pytest.raises(ValueError):
                tile_type(sig, t)
            errors += 1
            continue
        k = tile_type(sig, t)
        counts[k] = counts.get(k, 0) + 1
        if si != sj:
            assert k in (1, 2)
        elif su != sv:
            assert k in (3, 4)
        else:
            assert k in (5, 6)
    assert errors == 4 and counts == {1: 2, 2: 2, 3: 2, 4: 2, 5: 2, 6: 2}


def test_spin_round_trips_and_weights():
    dom = build_domain(2, 2)
    win = dobrushin_window(dom)
    rng = np.random.default_rng(3)
    bd = set(dom.tiles_bd)
    for _ in range(40):
        w = rng.random(len(win.fk_edges)) < 0.55
        lp = loops_of(w, win)
        o = orient_loops(lp, P25, rng.random(lp.n_loops))
        s = spins_from_orientation(o)
        assert dobrushin_boundary_ok(s, dom)
        assert all(ice_ok(s, t) for t in dom.tiles_A)
        back = orientation_from_spins(s, lp)
        nonroot = lp.parent >= 0
        assert np.array_equal(back.clockwise[nonroot], o.clockwise[nonroot])
        n_in = sum(tile_type(s, t) >= 5 for t in dom.tiles_A if t not in bd)
        n_bd = sum(tile_type(s, t) >= 5 for t in dom.tiles_A if t in bd)
        assert spin_log_weight(s, dom, P25) == pytest.approx(n_in * math.log(P25.c) + n_bd * math.log(P25.c_b))
        assert spin_log_weight(s.flipped(), dom, P25) == -math.inf
        ho = heights_from_orientation(o)
        h = height_from_spins(s, win, win.nodes[0], ho[win.nodes[0]])
        offsets = {h[v] - ho[v] for v in win.nodes}
        assert offsets == {0}
        assert is_height_function(ho, dom.tiles_A)
