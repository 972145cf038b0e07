import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dobrushin.atrc import (
    ATRCChain,
    ATRCGraph,
    MATRCGraph,
    atrc_dual,
    atrc_heat_bath_step,
    atrc_log_weight,
    atrc_weights,
    conditional,
    connects_to_boundary,
    decode_state,
    encode,
    encode_state,
    four_point,
    layers,
    matrc_log_weight,
    sample_atrc_from_height,
    sample_matrc_from_spins,
    two_point,
)
from dobrushin.lattice import _build_domain, build_domain, dual, edge, induced_edges
from dobrushin.oracle import at_correlations, enumerate as exact
from dobrushin.params import from_q
from dobrushin.sixvertex import SpinPair

P25 = from_q(25)
LN2 = math.log(2)
EDGE = [((0, 0), (2, 0))]


def test_encode_layers():
    s = encode([0, 0, 1, 1], [0, 1, 1, 0])
    assert s.tolist() == [0, 1, 2, -1]
    t, tt = layers([0, 1, 2])
    assert t.tolist() == [False, False, True] and tt.tolist() == [False, True, True]


def test_single_edge_weights():
    g = ATRCGraph.from_edges(EDGE)
    J, U = P25.J, P25.U
    w_t, w_tt = atrc_weights(J, U)
    assert w_t == pytest.approx(P25.w_tau) and w_tt == pytest.approx(P25.w_tautau)
    assert atrc_log_weight(g, [0], J, U) == pytest.approx(4 * LN2)
    assert atrc_log_weight(g, [2], J, U) == pytest.approx(math.log(w_t) + 2 * LN2)
    assert atrc_log_weight(g, [1], J, U) == pytest.approx(math.log(w_tt) + 3 * LN2)
    assert atrc_log_weight(g, [-1], J, U) == -math.inf


def test_off_curve_warns():
    g = ATRCGraph.from_edges(EDGE)
    with pytest.warns(UserWarning):
        atrc_log_weight(g, [0], 1.0, 0.0)


def test_bad_eta():
    with pytest.raises(ValueError):
        ATRCGraph.from_edges(EDGE, (1, 0))


def test_conditional_closed_form():
    g = ATRCGraph.from_edges(EDGE)
    w_t, w_tt = P25.w_tau, P25.w_tautau
    z = 16 + 8 * w_tt + 4 * w_t
    p = conditional(lambda x: atrc_log_weight(g, x, P25.J, P25.U), np.zeros(1, dtype=np.int8), 0)
    assert np.allclose(p, [16 / z, 8 * w_tt / z, 4 * w_t / z], atol=1e-14)


def test_conditional_bulk_edge():
    # edge of a square whose endpoints are joined off e in both layers
    sq = sorted(induced_edges([(0, 0), (2, 0), (0, 2), (2, 2)]))
    g = ATRCGraph.from_edges(sq)
    st = np.array([2, 2, 2, 0], dtype=np.int8)
    p = conditional(lambda x: atrc_log_weight(g, x, P25.J, P25.U), st, 3)
    w = np.array([1.0, P25.w_tautau, P25.w_tau])
    assert np.allclose(p, w / w.sum(), atol=1e-14)
    # both ends isolated otherwise: factor 1/2 per merged layer
    st = np.zeros(4, dtype=np.int8)
    p = conditional(lambda x: atrc_log_weight(g, x, P25.J, P25.U), st, 3)
    w = np.array([1.0, P25.w_tautau / 2, P25.w_tau / 4])
    assert np.allclose(p, w / w.sum(), atol=1e-14)


def test_heat_bath_frozen_edge():
    g = ATRCGraph.from_edges(EDGE)
    with pytest.raises(IndexError):
        atrc_heat_bath_step(g, [0], 1, 0.5, P25)
    assert atrc_heat_bath_step(g, [0], 0, 0.0, P25)[0] == 0
    assert atrc_heat_bath_step(g, [0], 0, 0.9999999, P25)[0] == 2


def test_single_edge_chain_stationary():
    g = ATRCGraph.from_edges(EDGE)
    ex = exact("atrc", g, P25)
    ch = ATRCChain(g, P25, 7)
    n = 200000
    rows = np.empty(n, dtype=np.int8)
    for k in range(n):
        rows[k] = ch.run(1)[0]
    freq = np.bincount(rows, minlength=3) / n
    probs = np.zeros(3)
    probs[ex.configs[:, 0]] = ex.probs
    assert np.all(np.abs(freq - probs) < 4 * np.sqrt(probs * (1 - probs) / n))


def test_matrc_empty_on_unit_domain():
    dom = _build_domain(1, 1)
    mg = MATRCGraph.of(dom)
    s = np.zeros(mg.ne, dtype=np.int8)
    lam = set(dom.Lam)
    expect = len(dom.V_bar) * LN2
    bminus = {}
    for a, b in dom.E_b_minus:
        for x in (a, b):
            if x in lam:
                bminus[x] = bminus.get(x, 0) + 1
    for v in dom.Lam:
        expect += math.log(1 + P25.c_b ** bminus.get(v, 0))
    assert matrc_log_weight(mg, s, P25) == pytest.approx(expect, abs=1e-12)
    # an inner vertex has no E_b^- edges so it contributes 1 + c_b^0 = 2
    assert bminus.get((0, 0), 0) == 0


def test_matrc_forbidden_boundary_middle_state():
    dom = _build_domain(1, 1)
    mg = MATRCGraph.of(dom)
    s = np.zeros(mg.ne, dtype=np.int8)
    s[np.flatnonzero(~mg.in_E)[0]] = 1
    assert matrc_log_weight(mg, s, P25) == -math.inf


def test_matrc_normalises():
    ex = exact("matrc", _build_domain(0, 0), P25)
    assert ex.probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_xc_rule():
    e = ((0, 0), (2, 0))
    a, b = dual(e)
    c = math.sqrt(7)
    base = {(0, 0): 0, (2, 0): 0, a: 1, b: 1}
    assert sample_atrc_from_height({**base, a: -1}, e, 0.99, c) == 2
    assert sample_atrc_from_height({**base, (2, 0): 2}, e, 0.0, c) == 0
    assert sample_atrc_from_height(base, e, 0.9, c) == 1
    assert sample_atrc_from_height(base, e, 0.5, c) == 0
    assert sample_atrc_from_height(base, e, 0.0, c) == 2


def _dobrushin_spins(dom):
    prim = {}
    dl = {}
    for e in dom.E_bar + dom.E_b_minus:
        for x in e:
            prim[x] = 1
        for u in dual(e):
            dl[u] = 1 if u[1] > 0 else -1
    return SpinPair(prim, dl)


def test_spins_to_matrc_rules():
    dom = build_domain(2, 2)
    sig = _dobrushin_spins(dom)
    nE = len(dom.E)
    out = sample_matrc_from_spins(sig, dom, P25, np.full(len(dom.E_bar), 0.99))
    for k, e in enumerate(dom.E_bar):
        a, b = dual(e)
        if sig.dual[a] != sig.dual[b]:
            assert out[k] == 2
        elif k >= nE:
            assert out[k] == 0
            assert 0.99 > 1 / P25.c_b
        else:
            assert out[k] == 1
    flipped = SpinPair({**sig.primal, (0, 2): -1}, sig.dual)
    out = sample_matrc_from_spins(flipped, dom, P25, np.zeros(len(dom.E_bar)))
    k = dom.E_bar.index(edge((0, 2), (2, 2)))
    assert out[k] == 0
    with pytest.raises(ValueError):
        sample_matrc_from_spins(sig, dom, P25, np.zeros(3))


def test_dual_state_map():
    edges = sorted(induced_edges([(0, 0), (2, 0), (0, 2), (2, 2)]))
    de, s = atrc_dual(edges, np.full(4, 2, dtype=np.int8))
    assert s.tolist() == [0] * 4
    _, s = atrc_dual(edges, np.ones(4, dtype=np.int8))
    assert s.tolist() == [1] * 4
    assert [dual(e) for e in de] == edges


def test_two_point_trivial():
    g = ATRCGraph.box(1, (0, 0), with_boundary_edges=False)
    z = np.zeros(g.ne, dtype=np.int8)
    assert two_point(g, z, (0, 0), (0, 0))
    assert not two_point(g, z, (0, 0), (2, 2))
    assert not four_point(g, z, (0, 0), (2, 2))
    full = np.full(g.ne, 2, dtype=np.int8)
    assert two_point(g, full, (0, 0), (2, 2)) and four_point(g, full, (0, 0), (2, 2))


def test_two_point_mean_matches_ashkin_teller():
    sq = [(0, 0), (2, 0), (0, 2), (2, 2)]
    E = sorted({edge(v, w) for v in sq for w in [(v[0] + 2, v[1]), (v[0] - 2, v[1]), (v[0], v[1] + 2), (v[0], v[1] - 2)]})
    outside = sorted({x for e in E for x in e} - set(sq))
    g = ATRCGraph.from_edges(E, (1, 1), boundary=outside)
    ex = exact("atrc", g, P25)
    two = sum(p * two_point(g, x, (0, 0), (2, 2)) for x, p in zip(ex.configs, ex.probs))
    four = sum(p * four_point(g, x, (0, 0), (2, 2)) for x, p in zip(ex.configs, ex.probs))
    t_at, f_at = at_correlations(g, P25.J, P25.U, (0, 0), (2, 2))
    assert two == pytest.approx(t_at, abs=1e-10)
    assert four == pytest.approx(f_at, abs=1e-10)


def test_connects_to_boundary():
    g = ATRCGraph.box(3, (0, 0), with_boundary_edges=False)
    assert not connects_to_boundary(g, np.zeros(g.ne, dtype=np.int8), (0, 0), 1)
    assert connects_to_boundary(g, np.full(g.ne, 2, dtype=np.int8), (0, 0), 3)
    gw = ATRCGraph.box(3, (1, 1))
    assert gw.wired_tau.sum() > 0


def test_chain_deterministic():
    g = ATRCGraph.box(3, (1, 1))
    a = ATRCChain(g, P25, 5).run(30).copy()
    b = ATRCChain(g, P25, 5).run(30).copy()
    assert np.array_equal(a, b)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 2), max_size=100))
def test_state_round_trip(s):
    text = encode_state(np.array(s, dtype=np.int8), {"q": 25})
    back, h = decode_state(text)
    assert back.tolist() == s and h["q"] == 25
