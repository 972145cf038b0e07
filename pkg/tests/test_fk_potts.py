import itertools
import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dobrushin.fk_potts import (
    FKChain,
    FKGraph,
    PottsChain,
    PottsGraph,
    cluster_count,
    config_header,
    decode_config,
    edwards_sokal_color,
    encode_config,
    fk_log_weight,
    glauber_probs,
    heat_bath_step,
    p_open_given,
    potts_glauber_step,
    potts_log_weight,
    sample_fk,
)
from dobrushin.lattice import build_domain
from dobrushin.oracle import enumerate as exact
from dobrushin.params import from_q

SQUARE = [((0, 0), (2, 0)), ((2, 0), (2, 2)), ((0, 2), (2, 2)), ((0, 0), (0, 2))]


def bfs_clusters(nv, ends, omega):
    adj = [[] for _ in range(nv)]
    for (a, b), w in zip(ends, omega):
        if w:
            adj[a].append(b)
            adj[b].append(a)
    seen, k = set(), 0
    for s in range(nv):
        if s in seen:
            continue
        k += 1
        dq = deque([s])
        seen.add(s)
        while dq:
            x = dq.popleft()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    dq.append(y)
    return k


def test_single_edge_weight():
    g = FKGraph.from_edges([((0, 0), (2, 0))])
    assert fk_log_weight(g, [0], 0.5, 2) == pytest.approx(math.log(0.5) + 2 * math.log(2))
    assert fk_log_weight(g, [1], 0.5, 2) == pytest.approx(math.log(0.5) + math.log(2))


def test_all_open_one_cluster():
    g = FKGraph.box(2)
    w = np.ones(g.ne, dtype=bool)
    assert cluster_count(g, w) == 1
    assert fk_log_weight(g, w, 0.3, 7) == pytest.approx(g.ne * math.log(0.3) + math.log(7))


def test_empty_box():
    g = FKGraph.box(1)
    assert g.ne == 12 and g.nv == 9
    w = np.zeros(12, dtype=bool)
    assert cluster_count(g, w) == 9
    assert fk_log_weight(g, w, 0.4, 5) == pytest.approx(12 * math.log(0.6) + 9 * math.log(5))


def test_cluster_count_vs_bfs():
    g = FKGraph.box(1)
    rng = np.random.default_rng(1)
    for _ in range(300):
        w = rng.random(g.ne) < 0.5
        assert cluster_count(g, w) == bfs_clusters(g.nv, g.ends, w)


def test_heat_bath_conditionals():
    assert p_open_given(True, 0.5, 2) == 0.5
    assert p_open_given(False, 0.5, 2) == pytest.approx(1 / 3)
    g = FKGraph.from_edges(SQUARE)
    # edge 0 with the other three open: endpoints connected off e
    w = np.array([0, 1, 1, 1], dtype=bool)
    assert heat_bath_step(g, w, 0, 0.5, 2, 0.49)[0]
    assert not heat_bath_step(g, w, 0, 0.5, 2, 0.51)[0]
    w = np.zeros(4, dtype=bool)
    assert heat_bath_step(g, w, 0, 0.5, 2, 0.33)[0]
    assert not heat_bath_step(g, w, 0, 0.5, 2, 0.34)[0]
    with pytest.raises(IndexError):
        heat_bath_step(g, w, 4, 0.5, 2, 0.1)


def test_heat_bath_ratio_matches_weights():
    g = FKGraph.box(1)
    p, q = 0.6, 9.0
    rng = np.random.default_rng(2)
    for _ in range(50):
        w = rng.random(g.ne) < 0.5
        e = int(rng.integers(g.ne))
        w1, w0 = w.copy(), w.copy()
        w1[e], w0[e] = True, False
        a, b = fk_log_weight(g, w1, p, q), fk_log_weight(g, w0, p, q)
        target = 1 / (1 + math.exp(b - a))
        conn = cluster_count(g, w0) == cluster_count(g, w1)
        assert p_open_given(conn, p, q) == pytest.approx(target, rel=1e-12)


def test_sample_fk_zero_sweeps_and_determinism():
    g = FKGraph.box(2, bc="wired")
    assert sample_fk(g, 0.5, 3, 0, 1).all()
    g = FKGraph.box(2)
    assert not sample_fk(g, 0.5, 3, 0, 1).any()
    a = sample_fk(g, 0.7, 25, 50, 11)
    b = sample_fk(g, 0.7, 25, 50, 11)
    assert np.array_equal(a, b)


def test_sample_fk_marginals():
    g = FKGraph.from_edges(SQUARE)
    p, q = 0.6, 4.0
    ex = exact("fk", g, (p, q))
    marg = ex.probs @ ex.configs
    ch = FKChain(g, p, q, 5)
    ch.run(100)
    n = 10**5
    rows = np.empty((n, g.ne), dtype=bool)
    for s in range(n):
        rows[s] = ch.run(1)
    batches = rows.reshape(100, -1, g.ne).mean(axis=1)
    se = batches.std(axis=0, ddof=1) / 10
    assert np.all(np.abs(rows.mean(axis=0) - marg) < 4 * se + 1e-3)


def test_es_all_open_is_monochrome():
    dom = build_domain(2, 2)
    g = FKGraph.dobrushin(dom)
    sig = edwards_sokal_color(g, np.ones(g.ne, dtype=bool), 25, 0, dom.Lam)
    assert np.all(sig == 1)


def test_es_empty_uniform():
    dom = build_domain(3, 3)
    g = FKGraph.dobrushin(dom)
    counts = np.zeros(2)
    for s in range(400):
        sig = edwards_sokal_color(g, np.zeros(g.ne, dtype=bool), 2, s, dom.Lam)
        counts += np.bincount(sig - 1, minlength=2)
    frac = counts[0] / counts.sum()
    n = counts.sum()
    assert abs(frac - 0.5) < 4 * math.sqrt(0.25 / n)


def test_es_rejects_real_q():
    g = FKGraph.box(1)
    with pytest.raises(ValueError):
        edwards_sokal_color(g, np.zeros(g.ne, dtype=bool), 6.5, 0)


def test_glauber_isolated_and_aligned():
    g = PottsGraph([(0, 0)], np.zeros((0, 2), dtype=np.int64), np.zeros(1, dtype=np.int64))
    assert np.allclose(glauber_probs(g, np.array([1]), 0, 1.0, 5), 0.2)
    star = PottsGraph([(0, 0), (2, 0), (-2, 0), (0, 2), (0, -2)],
                      np.array([[0, 1], [0, 2], [0, 3], [0, 4]]), np.zeros(5, dtype=np.int64))
    T, q = 0.7, 25
    pr = glauber_probs(star, np.ones(5, dtype=np.int64), 0, T, q)
    assert pr[0] == pytest.approx(math.exp(4 / T) / (math.exp(4 / T) + q - 1), rel=1e-12)
    assert potts_glauber_step(star, np.ones(5, dtype=np.int64), 0, T, 0.0, q)[0] == 1


def test_glauber_detailed_balance():
    g = PottsGraph([(0, 0), (2, 0)], np.array([[0, 1]]), np.array([1, 0]))
    T, q = 0.9, 3
    for s in itertools.product(range(1, q + 1), repeat=2):
        for i in range(2):
            for c in range(1, q + 1):
                t = list(s)
                t[i] = c
                fw = glauber_probs(g, np.array(s), i, T, q)[c - 1]
                bw = glauber_probs(g, np.array(t), i, T, q)[s[i] - 1]
                lhs = math.exp(potts_log_weight(g, s, T)) * fw
                rhs = math.exp(potts_log_weight(g, t, T)) * bw
                assert lhs == pytest.approx(rhs, rel=1e-12)


def test_potts_chain_deterministic_and_bc():
    g = PottsGraph.box(3, bc="1f")
    assert g.field1.sum() == 7 + 2 * 4
    a = PottsChain(g, 1.0, 25, 3).run(20).copy()
    b = PottsChain(g, 1.0, 25, 3).run(20).copy()
    assert np.array_equal(a, b) and a.min() >= 1 and a.max() <= 25


@settings(max_examples=100, deadline=None)
@given(st.lists(st.booleans(), max_size=200))
def test_encode_round_trip(bits):
    h = config_header(FKGraph.box(1), 3, 10)
    head, back = decode_config(encode_config(bits, h))
    assert head == h
    assert back.tolist() == bits
