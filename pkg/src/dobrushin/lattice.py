"""Primal and dual square lattices, tiles and the rectangular Dobrushin domains.

Coordinates are doubled integers throughout: the primal vertex (x, y) is
stored as (2x, 2y) and the dual vertex (x + 1/2, y + 1/2) as (2x + 1, 2y + 1).
An edge is a sorted pair of endpoints; a tile is identified with the midpoint
of its primal edge, which is also the midpoint of the crossing dual edge.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

Vertex = tuple[int, int]
Edge = tuple[Vertex, Vertex]

STEPS = ((2, 0), (-2, 0), (0, 2), (0, -2))


def primal(x: int, y: int) -> Vertex:
    return (2 * x, 2 * y)


def dual_vertex(x: float, y: float) -> Vertex:
    """Dual vertex at (x, y), where both coordinates are half-integers."""
    X, Y = round(2 * x), round(2 * y)
    if X % 2 == 0 or Y % 2 == 0:
        raise ValueError(f"({x}, {y}) is not a dual vertex")
    return (X, Y)


def is_primal(v: Vertex) -> bool:
    return v[0] % 2 == 0 and v[1] % 2 == 0


def is_dual(v: Vertex) -> bool:
    return v[0] % 2 == 1 and v[1] % 2 == 1


def real_coords(v: Vertex) -> tuple[float, float]:
    return (v[0] / 2, v[1] / 2)


def neighbours(v: Vertex) -> list[Vertex]:
    return [(v[0] + dx, v[1] + dy) for dx, dy in STEPS]


def edge(a: Vertex, b: Vertex) -> Edge:
    if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 2 or (a[0] - b[0]) % 2 or (a[1] - b[1]) % 2:
        raise ValueError(f"{a} and {b} are not adjacent")
    return (a, b) if a <= b else (b, a)


def midpoint(e: Edge) -> Vertex:
    (a, b) = e
    return ((a[0] + b[0]) // 2, (a[1] + b[1]) // 2)


def is_horizontal(e: Edge) -> bool:
    return e[0][1] == e[1][1]


def dual(e: Edge) -> Edge:
    """The edge of the other lattice crossing ``e`` at its midpoint (an involution)."""
    m = midpoint(e)
    if is_horizontal(e):
        return edge((m[0], m[1] - 1), (m[0], m[1] + 1))
    return edge((m[0] - 1, m[1]), (m[0] + 1, m[1]))


def dual_config(edges, omega):
    """Dual edges in matching order and the dual configuration 1 - omega."""
    w = np.asarray(omega, dtype=np.bool_)
    return [dual(e) for e in edges], ~w


def edges_of(v: Vertex) -> list[Edge]:
    return [edge(v, w) for w in neighbours(v)]


def tile_edge(t: Vertex) -> Edge:
    """Primal edge e_t of the tile centred at the doubled midpoint ``t``."""
    if t[0] % 2 == 1 and t[1] % 2 == 0:
        return edge((t[0] - 1, t[1]), (t[0] + 1, t[1]))
    if t[0] % 2 == 0 and t[1] % 2 == 1:
        return edge((t[0], t[1] - 1), (t[0], t[1] + 1))
    raise ValueError(f"{t} is not the midpoint of a primal edge")


def tile_of(e: Edge) -> Vertex:
    return midpoint(e)


def tile_corners(t: Vertex) -> tuple[Vertex, Vertex, Vertex, Vertex]:
    """(i, j, u, v): primal endpoints of e_t and dual endpoints of e_t*."""
    i, j = tile_edge(t)
    u, v = dual((i, j))
    return i, j, u, v


def tiles_touching(v: Vertex) -> list[Vertex]:
    """The four tiles having ``v`` (primal or dual) as a corner."""
    return [(v[0] + dx // 2, v[1] + dy // 2) for dx, dy in STEPS]


def diamond_neighbours(v: Vertex) -> list[Vertex]:
    """Neighbours in the rotated lattice: the four nearest vertices of the other lattice."""
    return [(v[0] + dx, v[1] + dy) for dx in (-1, 1) for dy in (-1, 1)]


def boundary_sets(S: Iterable, kind: str | None = None):
    """(inner boundary, outer boundary, edge boundary) of a vertex or edge set.

    Vertex sets live in one of the two square lattices; edge sets consist of
    nearest-neighbour edges. For edge sets the edge boundary is the edge
    boundary of the vertex set they span.
    """
    S = set(S)
    if not S:
        return set(), set(), set()
    sample = next(iter(S))
    if kind is None:
        kind = "edge" if isinstance(sample[0], tuple) else "vertex"
    if kind == "vertex":
        inner, outer, bedge = set(), set(), set()
        for x in S:
            for y in neighbours(x):
                if y not in S:
                    inner.add(x)
                    outer.add(y)
                    bedge.add(edge(x, y))
        return inner, outer, bedge
    inner, outer = set(), set()
    for e in S:
        for x in e:
            for f in edges_of(x):
                if f not in S:
                    inner.add(e)
                    outer.add(f)
    verts = {x for e in S for x in e}
    _, _, bedge = boundary_sets(verts, "vertex")
    return inner, outer, bedge


def induced_edges(verts: Iterable[Vertex]) -> set[Edge]:
    vs = set(verts)
    out = set()
    for x in vs:
        for y in neighbours(x):
            if y in vs:
                out.add(edge(x, y))
    return out


def box(n: int, m: int) -> list[Vertex]:
    return [primal(x, y) for x in range(-n, n + 1) for y in range(-m, m + 1)]


@dataclass
class DobrushinDomain:
    """Rectangular domain with its augmented edge sets and tile classes."""

    n: int
    m: int
    Lam: list[Vertex]
    V: list[Vertex]
    E: list[Edge]
    Lam_dual: list[Vertex]
    tiles_A: list[Vertex]
    tiles_bd: list[Vertex]
    tiles_bd_plus: list[Vertex]
    tiles_bd_minus: list[Vertex]
    tiles_int: list[Vertex]
    E_b_plus: list[Edge]
    E_b_minus: list[Edge]
    E_bar: list[Edge]
    V_bar: list[Vertex]
    vL: Vertex
    vR: Vertex
    vindex: dict = field(repr=False, default_factory=dict)
    eindex: dict = field(repr=False, default_factory=dict)
    kindex: dict = field(repr=False, default_factory=dict)
    keindex: dict = field(repr=False, default_factory=dict)

    @property
    def D(self) -> set[Vertex]:
        return set(self.Lam) | set(self.Lam_dual)

    def in_Lam(self, v: Vertex) -> bool:
        return abs(v[0]) <= 2 * self.n and abs(v[1]) <= 2 * self.m and is_primal(v)

    def in_Lam_dual(self, v: Vertex) -> bool:
        X, Y = v
        if not is_dual(v):
            return False
        upper = -2 * self.n - 2 <= X <= 2 * self.n + 2 and 0 <= Y <= 2 * self.m + 2
        lower = -2 * self.n <= X <= 2 * self.n and -2 * self.m <= Y <= 0
        return upper or lower

    def edge_array(self, edges: list[Edge], index: dict) -> np.ndarray:
        return np.array([[index[a], index[b]] for a, b in edges], dtype=np.int64).reshape(-1, 2)

    def fk_arrays(self):
        """Edge endpoint indices into ``V`` and the mask of wired (exterior) vertices."""
        ends = self.edge_array(self.E, self.vindex)
        wired = np.array([not self.in_Lam(v) for v in self.V], dtype=np.bool_)
        return ends, wired

    def k_arrays(self):
        """Edge endpoint indices of K = (V_bar, E_bar) and the E-membership mask."""
        ends = self.edge_array(self.E_bar, self.kindex)
        in_E = np.zeros(len(self.E_bar), dtype=np.bool_)
        in_E[: len(self.E)] = True
        return ends, in_E

    def to_json(self) -> str:
        def vs(lst):
            return [list(real_coords(v)) for v in lst]

        def es(lst):
            return [[list(real_coords(a)), list(real_coords(b))] for a, b in lst]

        return json.dumps(
            {
                "n": self.n,
                "m": self.m,
                "Lambda": vs(self.Lam),
                "V": vs(self.V),
                "E": es(self.E),
                "Lambda_dual": vs(self.Lam_dual),
                "E_b_plus": es(self.E_b_plus),
                "E_b_minus": es(self.E_b_minus),
                "v_L": list(real_coords(self.vL)),
                "v_R": list(real_coords(self.vR)),
            }
        )


def build_domain(n: int, m: int) -> DobrushinDomain:
    if n < 1 or m < 1:
        raise ValueError("Dobrushin domains need n >= 1 and m >= 1")
    return _build_domain(n, m)


def _build_domain(n: int, m: int) -> DobrushinDomain:
    """Same as :func:`build_domain` but also accepts the degenerate sizes n, m >= 0."""
    if n < 0 or m < 0:
        raise ValueError("n, m must be nonnegative")
    Lam = box(n, m)
    Lam_set = set(Lam)
    _, outer, _ = boundary_sets(Lam_set, "vertex")
    upper_ext = sorted(v for v in outer if v[1] >= 0)
    V = sorted(Lam_set | set(upper_ext))
    V_set = set(V)
    E = sorted(e for e in induced_edges(V_set) if e[0] in Lam_set or e[1] in Lam_set)

    dom = DobrushinDomain(
        n=n, m=m, Lam=sorted(Lam), V=V, E=E, Lam_dual=[], tiles_A=[], tiles_bd=[],
        tiles_bd_plus=[], tiles_bd_minus=[], tiles_int=[], E_b_plus=[], E_b_minus=[],
        E_bar=[], V_bar=[], vL=primal(-n - 1, 0), vR=primal(n + 1, 0),
    )
    Lam_dual = sorted(
        (X, Y)
        for X in range(-2 * n - 3, 2 * n + 4)
        for Y in range(-2 * m - 1, 2 * m + 4)
        if dom.in_Lam_dual((X, Y))
    )
    dom.Lam_dual = Lam_dual
    D = set(Lam) | set(Lam_dual)

    tiles = set()
    for v in D:
        tiles.update(tiles_touching(v))
    ncorner = {t: sum(c in D for c in tile_corners(t)) for t in tiles}
    dom.tiles_A = sorted(tiles)
    dom.tiles_bd = sorted(t for t in tiles if ncorner[t] == 1)
    dom.tiles_bd_plus = sorted(t for t in dom.tiles_bd if min(c[1] for c in tile_corners(t)) >= 0)
    dom.tiles_bd_minus = sorted(set(dom.tiles_bd) - set(dom.tiles_bd_plus))
    dom.tiles_int = sorted(t for t in tiles if ncorner[t] > 1)
    dom.E_b_plus = sorted(tile_edge(t) for t in dom.tiles_bd_plus)
    dom.E_b_minus = sorted(tile_edge(t) for t in dom.tiles_bd_minus)
    if sorted(tile_edge(t) for t in dom.tiles_int) != E:
        raise AssertionError("interior tiles do not reproduce the edge set")
    dom.E_bar = E + dom.E_b_plus
    dom.V_bar = sorted({x for e in dom.E_bar for x in e})
    dom.vindex = {v: k for k, v in enumerate(V)}
    dom.eindex = {e: k for k, e in enumerate(E)}
    dom.kindex = {v: k for k, v in enumerate(dom.V_bar)}
    dom.keindex = {e: k for k, e in enumerate(dom.E_bar)}
    return dom


@dataclass
class LDomain:
    """A finite set of vertices of the rotated lattice (primal and dual together).

    ``A`` holds the tiles with at least one corner in the domain, ``bd`` those
    with exactly one. ``parity`` is 'even' when every outer neighbour is
    primal, 'odd' when every outer neighbour is dual, otherwise None.
    """

    verts: frozenset
    A: list[Vertex]
    bd: list[Vertex]
    parity: str | None

    @property
    def primal_part(self) -> list[Vertex]:
        return sorted(v for v in self.verts if is_primal(v))

    @property
    def dual_part(self) -> list[Vertex]:
        return sorted(v for v in self.verts if is_dual(v))

    @property
    def tile_edges(self) -> list[Edge]:
        return [tile_edge(t) for t in self.A]


def l_domain(verts: Iterable[Vertex]) -> LDomain:
    D = frozenset(verts)
    tiles = set()
    for v in D:
        tiles.update(tiles_touching(v))
    A = sorted(tiles)
    bd = sorted(t for t in A if sum(c in D for c in tile_corners(t)) == 1)
    outer = {w for v in D for w in diamond_neighbours(v) if w not in D}
    if outer and all(is_primal(w) for w in outer):
        parity = "even"
    elif outer and all(is_dual(w) for w in outer):
        parity = "odd"
    else:
        parity = None
    return LDomain(D, A, bd, parity)


def domain_of_edges(E: Iterable[Edge]) -> LDomain:
    """Vertices of degree 4 in the graph spanned by E and in its dual graph."""
    E = set(E)
    deg: dict = {}
    for e in E:
        for x in e:
            deg[x] = deg.get(x, 0) + 1
        for x in dual(e):
            deg[x] = deg.get(x, 0) + 1
    return l_domain(v for v, d in deg.items() if d == 4)


def bkw_edges(D: LDomain) -> list[Edge]:
    """Primal edges dual to the dual edges with both endpoints in an even domain."""
    duals = set(D.dual_part)
    return sorted(dual(f) for f in induced_edges(duals))


def bkw_edges_odd(D: LDomain) -> list[Edge]:
    """Primal edges with both endpoints in an odd domain."""
    return sorted(induced_edges(D.primal_part))
