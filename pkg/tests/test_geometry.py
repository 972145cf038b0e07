import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dobrushin.geometry import (
    Cone,
    ConfinedPiece,
    Graph,
    backbone_cluster,
    classify,
    coarse_grain,
    concat,
    cone_points,
    diamond,
    displacement,
    irreducible_decompose,
    regular_cone_points,
)

points = st.sets(st.tuples(st.integers(-6, 6), st.integers(-6, 6)), min_size=1, max_size=30)


def brute_cone_points(V, cone):
    V = list(V)
    out = set()
    for v in V:
        d = np.array(V) - np.array(v)
        if np.all(cone.forward(d) | cone.backward(d)):
            out.add(v)
    return out


def path(L):
    return Graph.of([(x, 0) for x in range(L + 1)])


def test_cone_membership():
    c = Cone()
    assert c.contains((3, 3)) and c.contains((1, 0)) and not c.contains((1, 2))
    assert c.backward(np.array([[-2, 1]]))[0]
    with pytest.raises(ValueError):
        Cone(theta=0.0)


def test_cone_points_examples():
    assert cone_points({(0, 0), (1, 0), (2, 0)}) == {(0, 0), (1, 0), (2, 0)}
    assert cone_points({(0, 0), (1, 2)}) == set()
    assert cone_points({(5, -3)}) == {(5, -3)}
    assert cone_points(set()) == set()


@settings(max_examples=300, deadline=None)
@given(points, st.sampled_from([math.pi / 6, math.pi / 4, math.pi / 3]))
def test_cone_points_brute_force(V, theta):
    cone = Cone(theta=theta)
    assert cone_points(V, cone=cone) == brute_cone_points(V, cone)


@settings(max_examples=100, deadline=None)
@given(points, st.sampled_from([(1, 0), (0, 1), (1, 1)]))
def test_cone_points_other_axes(V, axis):
    cone = Cone(axis=axis)
    assert cone_points(V, cone=cone) == brute_cone_points(V, cone)


def test_regular_examples():
    g = path(4)
    assert regular_cone_points(g) == {(1, 0), (2, 0), (3, 0)}
    spur = Graph.of([(x, 0) for x in range(5)] + [(2, 1)])
    assert regular_cone_points(spur) == {(1, 0), (3, 0)}
    assert (2, 0) in cone_points(spur.vertices) or (2, 0) not in regular_cone_points(spur)


@settings(max_examples=200, deadline=None)
@given(points)
def test_regular_subset(V):
    g = Graph.of(V)
    assert regular_cone_points(g) <= cone_points(V)


def test_diamond():
    pts = np.array([(1, 0), (2, 0), (5, 0), (2, 2)])
    assert diamond((0, 0), (4, 0), pts).tolist() == [True, True, False, True]


def test_straight_path_decomposition():
    L = 10
    d = irreducible_decompose(path(L), (0, 0), (L, 0))
    assert d.M == L - 2
    assert all(len(p.graph.vertices) == 2 for p in d.middle)
    assert d.reassemble() == path(L)


def test_decomposition_requires_cone_point():
    with pytest.raises(ValueError):
        irreducible_decompose(path(1), (0, 0), (1, 0))
    with pytest.raises(ValueError):
        irreducible_decompose(path(3), (0, 0), None)


def test_concat_algebra():
    bond = classify(Graph.of([(0, 0), (1, 0)]), (0, 0), "A")
    assert displacement(bond) == (1, 0)
    two = concat(bond, bond)
    assert two.kind == "A" and displacement(two) == (2, 0)
    single = ConfinedPiece(Graph.of([(0, 0)]), (0, 0), "A")
    assert displacement(single) == (0, 0)
    left = classify(Graph.of([(-1, 0), (0, 0)]), (0, 0), "BL")
    right = classify(Graph.of([(0, 0), (1, 0), (2, 0)]), (2, 0), "BR")
    assert concat(left, bond).kind == "BL"
    ar = concat(bond, right)
    assert ar.kind == "BR" and ar.marked == (3, 0)
    assert concat(left, right).kind == "full"
    with pytest.raises(ValueError):
        concat(right, bond)
    with pytest.raises(ValueError):
        classify(Graph.of([(0, 0), (0, 3)]), (0, 0), "A")


def test_displacement_additivity():
    g = backbone_cluster(20, 3, 0.3, 1)
    d = irreducible_decompose(g, (0, 0), (20, 0))
    acc = d.left
    for piece in d.middle:
        nxt = concat(acc, piece)
        X = displacement(acc)
        assert displacement(nxt) == (X[0] + displacement(piece)[0], X[1] + displacement(piece)[1])
        acc = nxt


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(6, 30), st.floats(0.05, 0.45))
def test_round_trip(seed, L, p):
    g = backbone_cluster(L, 3, p, seed)
    try:
        d = irreducible_decompose(g, (0, 0), (L, 0))
    except ValueError:
        assert not regular_cone_points(g)
        return
    assert d.reassemble() == g
    for piece in d.middle:
        inner = regular_cone_points(piece.graph) - {(0, 0), displacement(piece)}
        assert not inner


def test_round_trip_with_entry_shift():
    g = path(6).translate((3, -2))
    d = irreducible_decompose(g, (3, -2), (9, -2))
    assert d.reassemble() == path(6)


def test_coarse_grain_trivial():
    sk = coarse_grain({(0, 0)}, 4)
    assert sk.vertices == [(0, 0)] and sk.edges == [] and sk.is_tree()


def test_coarse_grain_segment():
    K = 4
    sk = coarse_grain({(x, 0) for x in range(3 * K + 1)}, K)
    assert 2 <= len(sk.vertices) <= 3
    assert sk.is_tree()


def test_coarse_grain_errors():
    with pytest.raises(ValueError):
        coarse_grain({(1, 0)}, 3)
    with pytest.raises(ValueError):
        coarse_grain({(0, 0)}, 0)
    with pytest.raises(ValueError):
        coarse_grain({(0, 0)}, 2, cell="hex")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5), st.sampled_from(["linf", "l1"]))
def test_skeleton_is_small_tree(seed, K, cell):
    g = backbone_cluster(40, 4, 0.4, seed)
    sk = coarse_grain(g.vertices, K, cell=cell, edges=g.edges)
    assert sk.is_tree()
    assert len(sk.vertices) <= len(g.vertices)
    assert set(sk.vertices) <= g.vertices
    for a, b in sk.edges:
        assert 0 < max(abs(a[0] - b[0]), abs(a[1] - b[1])) <= K + sk.halo + 1
    assert '"K"' in sk.to_json()
