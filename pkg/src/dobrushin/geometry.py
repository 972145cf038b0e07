"""Cluster geometry: cones, coarse-graining skeletons, cone-points and irreducible pieces.

Vertices are integer pairs of Z^2 (unit spacing). A cone with axis a and
half-aperture theta is {x : tan(theta) <x, a> >= |<x, a_perp>|}; its
opposite is the backward cone.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

_EPS = 1e-9
UNIT = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class Cone:
    axis: tuple = (1.0, 0.0)
    theta: float = math.pi / 4

    def __post_init__(self):
        if not 0 < self.theta < math.pi / 2:
            raise ValueError("half-aperture must lie in (0, pi/2)")
        a = np.asarray(self.axis, dtype=float)
        object.__setattr__(self, "axis", tuple(a / np.linalg.norm(a)))

    def coords(self, x) -> np.ndarray:
        """(along axis, across axis) coordinates of points given as rows."""
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        a1, a2 = self.axis
        return np.stack([x[:, 0] * a1 + x[:, 1] * a2, -x[:, 0] * a2 + x[:, 1] * a1], axis=1)

    def forward(self, x) -> np.ndarray:
        c = self.coords(x)
        return math.tan(self.theta) * c[:, 0] >= np.abs(c[:, 1]) - _EPS

    def backward(self, x) -> np.ndarray:
        return self.forward(-np.asarray(x, dtype=float).reshape(-1, 2))

    def contains(self, x) -> bool:
        return bool(self.forward(x)[0])


def diamond(u, v, points, cone: Cone = Cone()) -> np.ndarray:
    """Mask of points in (u + forward cone) intersected with (v + backward cone)."""
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    return cone.forward(p - np.asarray(u)) & cone.backward(p - np.asarray(v))


# ---------------------------------------------------------------- graphs


@dataclass(frozen=True)
class Graph:
    vertices: frozenset
    edges: frozenset = frozenset()

    @classmethod
    def of(cls, vertices, edges=None) -> "Graph":
        vs = frozenset(tuple(map(int, v)) for v in vertices)
        if edges is None:
            es = {tuple(sorted((v, (v[0] + d[0], v[1] + d[1])))) for v in vs for d in UNIT
                  if (v[0] + d[0], v[1] + d[1]) in vs}
        else:
            es = {tuple(sorted((tuple(map(int, a)), tuple(map(int, b))))) for a, b in edges}
        return cls(vs, frozenset(es))

    def translate(self, w) -> "Graph":
        dx, dy = int(w[0]), int(w[1])
        return Graph(frozenset((x + dx, y + dy) for x, y in self.vertices),
                     frozenset(((a[0] + dx, a[1] + dy), (b[0] + dx, b[1] + dy)) for a, b in self.edges))

    def restrict(self, keep) -> "Graph":
        keep = frozenset(keep)
        return Graph(keep, frozenset(e for e in self.edges if e[0] in keep and e[1] in keep))

    def union(self, other: "Graph") -> "Graph":
        return Graph(self.vertices | other.vertices, self.edges | other.edges)

    def to_dict(self) -> dict:
        return {"vertices": sorted(map(list, self.vertices)), "edges": sorted([list(a), list(b)] for a, b in self.edges)}


# ---------------------------------------------------------------- cone-points


def cone_points(V, theta: float = math.pi / 4, cone: Cone | None = None) -> set:
    """Vertices v with V inside v + (forward cone union backward cone).

    Sorting by the axis coordinate reduces the test to prefix and suffix
    extrema of x2 -/+ tan(theta) x1.
    """
    cone = cone or Cone(theta=theta)
    pts = sorted(set(map(tuple, V)))
    if not pts:
        return set()
    c = cone.coords(pts)
    t = math.tan(cone.theta)
    x1, x2 = c[:, 0], c[:, 1]
    order = np.argsort(x1, kind="stable")
    x1s, lo_key, hi_key = x1[order], (x2 - t * x1)[order], (x2 + t * x1)[order]
    n = len(pts)
    # group equal axis coordinates so that ties count on both sides
    starts = np.r_[0, np.flatnonzero(np.diff(x1s) > _EPS) + 1]
    ends = np.r_[starts[1:], n]
    suf_max_lo = np.maximum.accumulate(lo_key[::-1])[::-1]
    suf_min_hi = np.minimum.accumulate(hi_key[::-1])[::-1]
    pre_max_hi = np.maximum.accumulate(hi_key)
    pre_min_lo = np.minimum.accumulate(lo_key)
    out = set()
    for s, e in zip(starts, ends):
        for k in range(s, e):
            ok = (suf_max_lo[s] <= lo_key[k] + _EPS and suf_min_hi[s] >= hi_key[k] - _EPS
                  and pre_max_hi[e - 1] <= hi_key[k] + _EPS and pre_min_lo[e - 1] >= lo_key[k] - _EPS)
            if ok:
                out.add(pts[order[k]])
    return out


def _cone_unit(cone: Cone):
    """Lattice direction e used by the regularity condition, and its perpendicular."""
    if cone.forward(np.array([[1, 0], [-1, 0]])).any():
        return (1, 0), (0, 1)
    return (0, 1), (1, 0)


def regular_cone_points(C: Graph, theta: float = math.pi / 4, cone: Cone | None = None) -> set:
    """Cone-points with both edges along e present and both edges across e absent."""
    cone = cone or Cone(theta=theta)
    e, p = _cone_unit(cone)
    E = C.edges
    out = set()
    for v in cone_points(C.vertices, cone=cone):
        def has(d):
            w = (v[0] + d[0], v[1] + d[1])
            return tuple(sorted((v, w))) in E
        if has(e) and has((-e[0], -e[1])) and not has(p) and not has((-p[0], -p[1])):
            out.add(v)
    return out


# ---------------------------------------------------------------- confined pieces

KINDS = ("BL", "BR", "A")


def _apex(V, cone: Cone, which: str):
    """The unique vertex u with V inside u + forward (which='f') or backward ('b') cone, else None."""
    pts = np.array(sorted(V), dtype=float)
    c = cone.coords(pts)
    k = int(np.argmin(c[:, 0]) if which == "f" else np.argmax(c[:, 0]))
    u = pts[k]
    test = cone.forward(pts - u) if which == "f" else cone.backward(pts - u)
    return tuple(int(x) for x in u) if test.all() else None


def front(V, cone: Cone = Cone()):
    return _apex(V, cone, "f")


def back(V, cone: Cone = Cone()):
    return _apex(V, cone, "b")


@dataclass(frozen=True)
class ConfinedPiece:
    """A marked confined graph: kind 'BL' (backward-confined, marked at 0),
    'BR' (forward-confined with front at 0) or 'A' (diamond-confined, front at 0)."""

    graph: Graph
    marked: tuple
    kind: str
    cone: Cone = field(default=Cone())

    def __post_init__(self):
        if self.kind not in KINDS + ("full",):
            raise ValueError(f"unknown piece class {self.kind!r}")


def classify(graph: Graph, marked, kind: str, cone: Cone = Cone()) -> ConfinedPiece:
    """Build a piece after checking the containment rules of its class."""
    V = graph.vertices
    if marked not in V:
        raise ValueError("marked vertex must belong to the graph")
    if kind == "BL" and (back(V, cone) is None or tuple(marked) != (0, 0)):
        raise ValueError("not backward-confined with marked vertex at the origin")
    if kind in ("BR", "A") and front(V, cone) != (0, 0):
        raise ValueError("front vertex is not at the origin")
    if kind == "A" and back(V, cone) is None:
        raise ValueError("not diamond-confined")
    return ConfinedPiece(graph, tuple(marked), kind, cone)


def displacement(g: ConfinedPiece) -> tuple:
    if g.kind in ("BL", "A"):
        b = back(g.graph.vertices, g.cone)
        if b is None:
            raise ValueError("piece is not backward-confined")
        return b
    if g.kind == "BR":
        return g.marked
    raise ValueError("a closed chain has no displacement")


def concat(g1: ConfinedPiece, g2: ConfinedPiece) -> ConfinedPiece:
    """g1 joined with g2 translated by the displacement of g1."""
    if g1.kind not in ("BL", "A") or g2.kind not in ("BR", "A"):
        raise ValueError(f"cannot concatenate {g1.kind} with {g2.kind}")
    X = displacement(g1)
    G = g1.graph.union(g2.graph.translate(X))
    if g1.kind == "A" and g2.kind == "A":
        return ConfinedPiece(G, g1.marked, "A", g1.cone)
    if g1.kind == "BL" and g2.kind == "A":
        return ConfinedPiece(G, g1.marked, "BL", g1.cone)
    if g1.kind == "A" and g2.kind == "BR":
        return ConfinedPiece(G, (X[0] + g2.marked[0], X[1] + g2.marked[1]), "BR", g1.cone)
    return ConfinedPiece(G, g1.marked, "full", g1.cone)


@dataclass
class Decomposition:
    left: ConfinedPiece
    middle: list
    right: ConfinedPiece
    cone_points: list

    @property
    def M(self) -> int:
        return len(self.middle)

    def reassemble(self) -> Graph:
        g = self.left
        for piece in self.middle:
            g = concat(g, piece)
        return concat(g, self.right).graph

    def to_dict(self) -> dict:
        def piece(p):
            return {"kind": p.kind, "marked": list(p.marked), "graph": p.graph.to_dict()}
        return {"cone_points": [list(c) for c in self.cone_points], "left": piece(self.left),
                "middle": [piece(p) for p in self.middle], "right": piece(self.right)}


def irreducible_decompose(C: Graph, entry=(0, 0), exit=None, theta: float = math.pi / 4,
                          cone: Cone | None = None) -> Decomposition:
    """Split C at its regular cone-points lying between ``entry`` and ``exit``.

    ``entry`` is moved to the origin. With a single such cone-point the
    middle list is empty; with none, ValueError.
    """
    cone = cone or Cone(theta=theta)
    entry = tuple(entry)
    if entry != (0, 0):
        C = C.translate((-entry[0], -entry[1]))
        exit = None if exit is None else (exit[0] - entry[0], exit[1] - entry[1])
    if exit is None:
        raise ValueError("an exit vertex is required")
    exit = tuple(exit)
    if (0, 0) not in C.vertices or exit not in C.vertices:
        raise ValueError("entry and exit must belong to the graph")
    cps = [v for v in regular_cone_points(C, cone=cone)
           if cone.contains(np.array(v)) and cone.contains(np.array(exit) - np.array(v))]
    if not cps:
        raise ValueError("no regular cone-point separates entry and exit")
    cps.sort(key=lambda v: (cone.coords([v])[0, 0], v))
    V = np.array(sorted(C.vertices))

    def part(mask):
        return C.restrict(map(tuple, V[mask].tolist()))

    left = ConfinedPiece(part(cone.backward(V - np.array(cps[0]))), (0, 0), "BL", cone)
    middle = []
    for a, b in zip(cps[:-1], cps[1:]):
        g = part(diamond(a, b, V, cone)).translate((-a[0], -a[1]))
        middle.append(ConfinedPiece(g, (0, 0), "A", cone))
    last = cps[-1]
    g = part(cone.forward(V - np.array(last))).translate((-last[0], -last[1]))
    right = ConfinedPiece(g, (exit[0] - last[0], exit[1] - last[1]), "BR", cone)
    return Decomposition(left, middle, right, cps)


# ---------------------------------------------------------------- coarse graining


@dataclass
class Skeleton:
    vertices: list
    edges: list
    K: int
    halo: int

    def to_json(self) -> str:
        return json.dumps({"K": self.K, "halo": self.halo, "vertices": [list(v) for v in self.vertices],
                           "edges": [[list(a), list(b)] for a, b in self.edges]})

    def is_tree(self) -> bool:
        if len(self.edges) != len(self.vertices) - 1:
            return False
        seen = {self.vertices[0]}
        adj: dict = {}
        for a, b in self.edges:
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
        stack = [self.vertices[0]]
        while stack:
            x = stack.pop()
            for y in adj.get(x, []):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == len(self.vertices)


def _ball(K: int, cell: str):
    r = range(-K, K + 1)
    if cell == "linf":
        return {(x, y) for x in r for y in r}
    if cell == "l1":
        return {(x, y) for x in r for y in r if abs(x) + abs(y) <= K}
    raise ValueError(f"unknown cell shape {cell!r}")


def _thicken(A, k: int):
    r = range(-k, k + 1)
    return {(x + a, y + b) for x, y in A for a in r for b in r}


def _inner_boundary(S):
    return {v for v in S if any((v[0] + d[0], v[1] + d[1]) not in S for d in UNIT)}


def coarse_grain(C, K: int, cell: str = "linf", halo: int | None = None, edges=None) -> Skeleton:
    """Skeleton of the cluster C (a vertex set containing the origin) at scale K.

    Cells are K-balls (``cell`` = 'linf' or 'l1'); the explored region grows by
    the cell thickened by ``halo`` (default floor(ln(K)^2)). Minima are
    lexicographic; each new vertex is attached to the smallest skeleton vertex
    whose explored region it borders. Paths run through C's edges (nearest-neighbour pairs of C
    when ``edges`` is None).
    """
    G = Graph.of(C, edges)
    if (0, 0) not in G.vertices:
        raise ValueError("the cluster must contain the origin")
    if K < 1:
        raise ValueError("K must be at least 1")
    halo = int(math.floor(math.log(K) ** 2)) if halo is None else halo
    delta = _ball(K, cell)
    delta_in = _inner_boundary(delta)
    delta_p = _thicken(delta, halo)
    adj: dict = {v: [] for v in G.vertices}
    for a, b in G.edges:
        adj[a].append(b)
        adj[b].append(a)
    sk_v = [(0, 0)]
    sk_e = []
    V = set(delta_p)

    def reaches(z):
        # path in C from z to the inner boundary of z + delta inside (z + delta) minus V
        seen = {z}
        q = deque([z])
        while q:
            x = q.popleft()
            rel = (x[0] - z[0], x[1] - z[1])
            if rel in delta_in:
                return True
            for y in adj[x]:
                r = (y[0] - z[0], y[1] - z[1])
                if y not in seen and r in delta and y not in V:
                    seen.add(y)
                    q.append(y)
        return False

    while True:
        ext = {(v[0] + d[0], v[1] + d[1]) for v in V for d in UNIT} - V
        A = sorted(z for z in ext if z in G.vertices and reaches(z))
        if not A:
            break
        vi = A[0]
        # v_i lies outside V, so it touches the explored region v* + delta' of some v* from outside
        vstar = min(v for v in sk_v
                    if any((vi[0] + d[0] - v[0], vi[1] + d[1] - v[1]) in delta_p for d in UNIT))
        sk_v.append(vi)
        sk_e.append((vstar, vi))
        V |= {(vi[0] + a, vi[1] + b) for a, b in delta_p}
    return Skeleton(sk_v, sk_e, K, halo)


# ---------------------------------------------------------------- test clusters


def backbone_cluster(length: int, width: int, p: float, seed) -> Graph:
    """Cluster of the origin for bond percolation of density p on {0..length} x {-width..width},
    with the axis edges between (0, 0) and (length, 0) forced open."""
    rng = np.random.default_rng(seed)
    xs, ys = np.arange(length + 1), np.arange(-width, width + 1)
    edges = []
    for x in xs:
        for y in ys:
            if x < length and (y == 0 or rng.random() < p):
                edges.append(((int(x), int(y)), (int(x) + 1, int(y))))
            if y < width and rng.random() < p:
                edges.append(((int(x), int(y)), (int(x), int(y) + 1)))
    adj: dict = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen = {(0, 0)}
    q = deque([(0, 0)])
    while q:
        x = q.popleft()
        for y in adj.get(x, []):
            if y not in seen:
                seen.add(y)
                q.append(y)
    return Graph.of(seen, [e for e in edges if e[0] in seen])
