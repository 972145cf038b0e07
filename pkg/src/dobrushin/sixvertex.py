"""Loops of a percolation configuration, their orientations, six-vertex spins and heights.

A loop configuration lives on a window of tiles. Every tile carries its
primal edge e_t = ij and the crossing dual edge e_t* = uv; when e_t is open
the two arcs of the tile flank it (turning around u and v), otherwise they
turn around i and j. Instead of following arcs we work with the clusters of
the tile corners: corners on the same side of every arc are merged, and two
such clusters touching across a tile are separated by exactly one loop. The
clusters form a tree whose roots are the frozen exterior, so every non-root
cluster stands for the loop separating it from its parent.

Heights rise by one when a loop is crossed from outside if the loop is
clockwise and drop by one otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order

from . import _uf
from .lattice import (
    DobrushinDomain,
    LDomain,
    Vertex,
    bkw_edges,
    bkw_edges_odd,
    is_primal,
    tile_corners,
    tile_edge,
)
from .params import ModelParams

ROOT_W, ROOT_F, FORCED, FREE = 0, 1, 2, 3


@dataclass
class Window:
    """Tiles carrying a loop configuration, with frozen tile states and exterior roots.

    ``src[t]`` indexes the percolation configuration for free tiles and is -1
    for frozen ones, whose state is ``fixed[t]``. ``root`` marks corners glued
    to the exterior clusters W (height ``heights[0]``) and F (``heights[1]``).
    ``step`` is the height change across a favoured loop crossed from outside.
    """

    kind: str
    tiles: list
    nodes: list
    corners: np.ndarray
    src: np.ndarray
    fixed: np.ndarray
    boundary: np.ndarray
    inside: np.ndarray
    root: np.ndarray
    heights: tuple
    step: int
    fk_edges: list
    index: dict = field(repr=False, default_factory=dict)

    @property
    def n_tiles(self) -> int:
        return len(self.tiles)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def tile_states(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=np.bool_)
        if omega.shape != (len(self.fk_edges),):
            raise ValueError(f"expected {len(self.fk_edges)} edge states, got {omega.shape}")
        out = self.fixed.copy()
        free = self.src >= 0
        out[free] = omega[self.src[free]]
        return out


def _make_window(kind, tiles, inside_fn, root_fn, heights, step, fk_edges, fixed_fn, boundary_fn):
    tiles = sorted(tiles)
    nodes = sorted({c for t in tiles for c in tile_corners(t)})
    index = {v: k for k, v in enumerate(nodes)}
    corners = np.array([[index[c] for c in tile_corners(t)] for t in tiles], dtype=np.int64).reshape(-1, 4)
    eidx = {e: k for k, e in enumerate(fk_edges)}
    src = np.array([eidx.get(tile_edge(t), -1) for t in tiles], dtype=np.int64)
    fixed = np.array([bool(fixed_fn(t)) for t in tiles], dtype=np.bool_)
    fixed[src >= 0] = False
    boundary = np.array([bool(boundary_fn(t)) for t in tiles], dtype=np.bool_)
    inside = np.array([bool(inside_fn(v)) for v in nodes], dtype=np.bool_)
    root = np.array([root_fn(v) for v in nodes], dtype=np.int8)
    return Window(kind, tiles, nodes, corners, src, fixed, boundary, inside, root, heights, step, list(fk_edges), index)


def dobrushin_window(dom: DobrushinDomain) -> Window:
    """Window of the Dobrushin domain: tiles A, configuration on E, 1/0 exterior."""
    lam = set(dom.Lam)
    lamd = set(dom.Lam_dual)
    plus = set(dom.tiles_bd_plus)
    bd = set(dom.tiles_bd)

    def root(v):
        if is_primal(v):
            return ROOT_W if (v not in lam and v[1] >= 0) else -1
        return ROOT_F if (v not in lamd and v[1] < 0) else -1

    return _make_window(
        "dobrushin", dom.tiles_A, lambda v: v in lam or v in lamd, root, (0, -1), 1, dom.E,
        lambda t: t in plus, lambda t: t in bd,
    )


def even_window(D: LDomain) -> Window:
    """Window of an even domain: wired configuration on the edges dual to D's dual edges."""
    bd = set(D.bd)
    return _make_window(
        "even", D.A, lambda v: v in D.verts,
        lambda v: ROOT_W if (is_primal(v) and v not in D.verts) else -1,
        (0, 1), 1, bkw_edges(D), lambda t: True, lambda t: t in bd,
    )


def odd_window(D: LDomain) -> Window:
    """Window of an odd domain: free configuration on the primal edges inside D."""
    bd = set(D.bd)
    return _make_window(
        "odd", D.A, lambda v: v in D.verts,
        lambda v: ROOT_F if (not is_primal(v) and v not in D.verts) else -1,
        (0, 1), -1, bkw_edges_odd(D), lambda t: False, lambda t: t in bd,
    )


# ---------------------------------------------------------------- loops


@dataclass
class LoopConfig:
    """Tile states and the cluster tree of the tile corners.

    ``label`` maps corners to clusters; ``parent`` gives the enclosing cluster
    (-1 for roots); ``kind`` is one of ROOT_W, ROOT_F, FORCED, FREE; ``free``
    lists the free loops (by cluster id) in a fixed deterministic order.
    """

    window: Window
    state: np.ndarray
    label: np.ndarray
    parent: np.ndarray
    kind: np.ndarray
    order: np.ndarray
    free: np.ndarray
    interface: bool

    @property
    def n_loops(self) -> int:
        """Number of loops not imposed by the boundary."""
        return int(self.free.size)

    @property
    def n_clusters(self) -> int:
        return int(self.parent.size)


def _cluster_tree(win: Window, state: np.ndarray) -> LoopConfig:
    N = win.n_nodes
    c = win.corners
    ends = np.concatenate([c[:, [0, 1]], c[:, [2, 3]]])
    mask = np.concatenate([state, ~state])
    froot = np.flatnonzero(win.root == ROOT_F)
    if froot.size:
        ends = np.concatenate([ends, np.stack([froot, np.full(froot.size, N)], axis=1)])
        mask = np.concatenate([mask, np.ones(froot.size, dtype=np.bool_)])
    wired = np.zeros(N + 1, dtype=np.bool_)
    wired[: N] = win.root == ROOT_W
    lab = _uf.components(N + 1, np.ascontiguousarray(ends), mask, wired)
    # vertices 0..N-1 are corners, N is the F anchor and N + 1 the ghost standing for W
    uniq, lab_c = np.unique(lab[: N], return_inverse=True)
    K = uniq.size
    pairs = np.concatenate([lab_c[c[:, [0, 2]]], lab_c[c[:, [2, 1]]], lab_c[c[:, [1, 3]]], lab_c[c[:, [3, 0]]]])
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    pairs = np.unique(np.sort(pairs, axis=1), axis=0)
    if pairs.shape[0] != K - 1:
        raise AssertionError(f"corner clusters do not form a tree ({pairs.shape[0]} adjacencies, {K} clusters)")

    kind = np.full(K, FREE, dtype=np.int8)
    for r in (ROOT_W, ROOT_F):
        sel = win.root == r
        if sel.any():
            ids = np.unique(lab_c[sel])
            if ids.size != 1:
                raise AssertionError("exterior root split into several clusters")
            kind[ids[0]] = r
    size = np.bincount(lab_c, minlength=K)
    outside_nonroot = (~win.inside) & (win.root < 0)
    forced = np.unique(lab_c[outside_nonroot])
    if np.any(size[forced] != 1):
        raise AssertionError("an exterior corner belongs to a non-trivial free cluster")
    kind[forced] = FORCED

    roots = np.flatnonzero(kind <= ROOT_F)
    start = roots[0]
    adj = coo_matrix((np.ones(2 * len(pairs)), (np.r_[pairs[:, 0], pairs[:, 1]], np.r_[pairs[:, 1], pairs[:, 0]])), shape=(K, K)).tocsr()
    order, pred = breadth_first_order(adj, start, directed=False, return_predecessors=True)
    parent = pred.astype(np.int64)
    parent[roots] = -1
    interface = False
    if roots.size == 2:
        other = roots[1]
        interface = bool(pred[other] == start)
        if not interface:
            raise AssertionError("the two exterior clusters are not separated by a single path")
        order = _reorder(order, parent)
    first = np.full(K, N, dtype=np.int64)
    np.minimum.at(first, lab_c, np.arange(N))
    free = np.flatnonzero(kind == FREE)
    free = free[np.argsort(first[free], kind="stable")]
    return LoopConfig(win, state, lab_c, parent, kind, order, free, interface)


def _reorder(order, parent):
    """Breadth-first order in which every cluster follows its parent."""
    seen = set()
    out = []
    pending = list(order)
    while pending:
        rest = []
        for c in pending:
            p = parent[c]
            if p < 0 or p in seen:
                out.append(c)
                seen.add(c)
            else:
                rest.append(c)
        pending = rest
    return np.array(out, dtype=np.int64)


def loops_of(omega, window: Window) -> LoopConfig:
    """Loop configuration of ``omega`` (indexed like ``window.fk_edges``)."""
    return _cluster_tree(window, window.tile_states(omega))


def loop_count(omega, window: Window) -> int:
    return loops_of(omega, window).n_loops


def trace_arcs(window: Window, state) -> tuple[int, int]:
    """(closed cycles, open paths) traced arc by arc inside the window.

    Each tile contributes two arcs joining midpoints of its sides; sides are
    shared between neighbouring tiles. Independent of the cluster tree.
    """
    nbr: dict = {}

    def side(a, b):
        return (a[0] + b[0], a[1] + b[1])

    def link(x, y):
        nbr.setdefault(x, []).append(y)
        nbr.setdefault(y, []).append(x)

    for t, s in zip(window.tiles, np.asarray(state, dtype=bool)):
        i, j, u, v = tile_corners(t)
        iu, uj, jv, vi = side(i, u), side(u, j), side(j, v), side(v, i)
        if s:
            link(iu, uj)
            link(jv, vi)
        else:
            link(vi, iu)
            link(uj, jv)
    seen = set()
    cycles = paths = 0
    for start in nbr:
        if start in seen:
            continue
        stack, comp = [start], []
        seen.add(start)
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in nbr[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if all(len(nbr[x]) == 2 for x in comp):
            cycles += 1
        else:
            paths += 1
    return cycles, paths


# ---------------------------------------------------------------- orientations and heights


@dataclass
class OrientedLoops:
    loops: LoopConfig
    clockwise: np.ndarray  # per cluster; meaningful for non-roots

    def sign(self) -> np.ndarray:
        return np.where(self.clockwise, 1, -1).astype(np.int64)


def favoured_probability(params: ModelParams) -> float:
    return math.exp(params.lam) / params.sqrt_q


def orient_loops(loops: LoopConfig, params: ModelParams, uniforms) -> OrientedLoops:
    """Orient every loop: boundary loops are forced, free loop k is favoured iff uniforms[k] < e^lam/sqrt(q).

    The favoured orientation is clockwise (height +1 from outside) except in
    odd domains, where it is counter-clockwise.
    """
    u = np.asarray(uniforms, dtype=float)
    if u.shape != (loops.n_loops,):
        raise ValueError(f"need one uniform per free loop ({loops.n_loops}), got {u.shape}")
    step = loops.window.step
    sign = np.full(loops.n_clusters, step, dtype=np.int64)
    fav = u < favoured_probability(params)
    sign[loops.free] = np.where(fav, step, -step)
    return OrientedLoops(loops, sign > 0)


@dataclass
class HeightFunction:
    values: dict

    def __getitem__(self, v):
        return self.values[v]

    def grid(self, lattice: str = "primal"):
        """Dense (x, y, h) grid on one sublattice; rows indexed by x, columns by y."""
        pts = [v for v in self.values if is_primal(v) == (lattice == "primal")]
        xs = sorted({v[0] for v in pts})
        ys = sorted({v[1] for v in pts})
        g = np.full((len(xs), len(ys)), np.iinfo(np.int64).min, dtype=np.int64)
        xi = {x: k for k, x in enumerate(xs)}
        yi = {y: k for k, y in enumerate(ys)}
        for v in pts:
            g[xi[v[0]], yi[v[1]]] = self.values[v]
        return xs, ys, g

    def to_csv(self, path: str, lattice: str = "primal"):
        xs, ys, g = self.grid(lattice)
        with open(path, "w") as f:
            f.write("x/y," + ",".join(str(y / 2) for y in ys) + "\n")
            for x, row in zip(xs, g):
                f.write(str(x / 2) + "," + ",".join("" if h == np.iinfo(np.int64).min else str(h) for h in row) + "\n")


def cluster_heights(o: OrientedLoops) -> np.ndarray:
    lp = o.loops
    h = np.zeros(lp.n_clusters, dtype=np.int64)
    sign = o.sign()
    hw, hf = lp.window.heights
    for c in lp.order:
        p = lp.parent[c]
        if p < 0:
            h[c] = hw if lp.kind[c] == ROOT_W else hf
        else:
            h[c] = h[p] + sign[c]
    return h


def heights_from_orientation(o: OrientedLoops) -> HeightFunction:
    h = cluster_heights(o)[o.loops.label]
    return HeightFunction(dict(zip(o.loops.window.nodes, h.tolist())))


def heights_from(omega, window: Window, params: ModelParams, uniforms) -> HeightFunction:
    """Height function obtained by orienting the loops of ``omega`` with the given uniforms."""
    return heights_from_orientation(orient_loops(loops_of(omega, window), params, uniforms))


# ---------------------------------------------------------------- spins


@dataclass
class SpinPair:
    primal: dict
    dual: dict

    def flipped(self) -> "SpinPair":
        return SpinPair({k: -s for k, s in self.primal.items()}, {k: -s for k, s in self.dual.items()})

    def __eq__(self, other) -> bool:
        return isinstance(other, SpinPair) and self.primal == other.primal and self.dual == other.dual


def spins_from_height(h: HeightFunction) -> SpinPair:
    prim, dl = {}, {}
    for v, x in h.values.items():
        r = x % 4
        if is_primal(v):
            if r not in (0, 2):
                raise ValueError(f"odd height {x} on primal vertex {v}")
            prim[v] = 1 if r == 0 else -1
        else:
            if r not in (1, 3):
                raise ValueError(f"even height {x} on dual vertex {v}")
            dl[v] = 1 if r == 1 else -1
    return SpinPair(prim, dl)


def spins_from_orientation(o: OrientedLoops) -> SpinPair:
    """Spin pair of an oriented loop configuration, normalised by sigma_primal = +1 on W."""
    s = spins_from_height(heights_from_orientation(o))
    win = o.loops.window
    w = np.flatnonzero(win.root == ROOT_W)
    if w.size and s.primal[win.nodes[w[0]]] != 1:
        s = s.flipped()
    return s


def height_from_spins(sigma: SpinPair, window: Window, anchor: Vertex, value: int = 0) -> HeightFunction:
    """Integrate h(u) - h(i) = sigma_primal(i) sigma_dual(u) over the window from ``anchor``.

    Raises ValueError if the increments are inconsistent (ice-rule violation).
    """
    h = {anchor: value}
    adj: dict = {}
    for t in window.tiles:
        i, j, u, v = tile_corners(t)
        for a in (i, j):
            for b in (u, v):
                adj.setdefault(a, set()).add(b)
                adj.setdefault(b, set()).add(a)
    stack = [anchor]
    while stack:
        x = stack.pop()
        for y in adj.get(x, ()):
            i, u = (x, y) if is_primal(x) else (y, x)
            d = sigma.primal[i] * sigma.dual[u]
            hy = h[x] + (d if x == i else -d)
            if y in h:
                if h[y] != hy:
                    raise ValueError("spins violate the ice rule")
            else:
                h[y] = hy
                stack.append(y)
    return HeightFunction(h)


def orientation_from_spins(sigma: SpinPair, loops: LoopConfig) -> OrientedLoops:
    """Loop orientations inducing ``sigma`` (compatible spins assumed)."""
    win = loops.window
    w = np.flatnonzero(win.root == ROOT_W)
    anchor = win.nodes[w[0]] if w.size else win.nodes[np.flatnonzero(win.root == ROOT_F)[0]]
    value = win.heights[0] if w.size else win.heights[1]
    h = height_from_spins(sigma, win, anchor, value)
    hc = np.zeros(loops.n_clusters, dtype=np.int64)
    for k, v in enumerate(win.nodes):
        hc[loops.label[k]] = h[v]
    cw = np.zeros(loops.n_clusters, dtype=np.bool_)
    nonroot = loops.parent >= 0
    diff = hc[nonroot] - hc[loops.parent[nonroot]]
    if np.any(np.abs(diff) != 1):
        raise ValueError("spins are not compatible with the loop configuration")
    cw[nonroot] = diff > 0
    return OrientedLoops(loops, cw)


# ---------------------------------------------------------------- tile types and weights


def _local_heights(si, sj, su, sv):
    """Heights (i, j, u, v) relative to h(i) = 0, or None on an ice-rule violation."""
    hu = si * su
    hv = si * sv
    hj = hu - sj * su
    if hj != hv - sj * sv:
        return None
    return 0, hj, hu, hv


def _type_from_heights(hi, hj, hu, hv) -> int:
    a, b, d = hj - hi, hv - hu, hu - hi
    if a == 2:
        return 1
    if a == -2:
        return 2
    if b == 2:
        return 3
    if b == -2:
        return 4
    if a == 0 and b == 0:
        return 5 if d == 1 else 6
    raise ValueError("not a six-vertex configuration on this tile")


def tile_type(x, t: Vertex) -> int:
    """Six-vertex type (1..6) of tile ``t`` in a SpinPair or HeightFunction."""
    i, j, u, v = tile_corners(t)
    if isinstance(x, HeightFunction):
        hs = (x[i], x[j], x[u], x[v])
        if any(abs(hs[p] - hs[q]) != 1 for p in (0, 1) for q in (2, 3)):
            raise ValueError("ice-rule violation")
        return _type_from_heights(*hs)
    loc = _local_heights(x.primal[i], x.primal[j], x.dual[u], x.dual[v])
    if loc is None:
        raise ValueError("ice-rule violation")
    return _type_from_heights(*loc)


def is_type56(x, t: Vertex) -> bool:
    return tile_type(x, t) >= 5


def ice_ok(sigma: SpinPair, t: Vertex) -> bool:
    i, j, u, v = tile_corners(t)
    return (sigma.primal[i] - sigma.primal[j]) * (sigma.dual[u] - sigma.dual[v]) == 0


def dobrushin_boundary_ok(sigma: SpinPair, dom: DobrushinDomain) -> bool:
    for v, s in sigma.primal.items():
        if not dom.in_Lam(v) and s != 1:
            return False
    for v, s in sigma.dual.items():
        if not dom.in_Lam_dual(v) and s != (1 if v[1] > 0 else -1):
            return False
    return True


def spin_log_weight(sigma: SpinPair, dom: DobrushinDomain, params: ModelParams) -> float:
    """Log-weight of a spin pair under Dobrushin conditions; -inf if forbidden."""
    if not dobrushin_boundary_ok(sigma, dom):
        return -math.inf
    bd = set(dom.tiles_bd)
    lc, lcb = math.log(params.c), math.log(params.c_b)
    total = 0.0
    for t in dom.tiles_A:
        if not ice_ok(sigma, t):
            return -math.inf
        if is_type56(sigma, t):
            total += lcb if t in bd else lc
    return total


def is_height_function(h: HeightFunction, tiles) -> bool:
    for t in tiles:
        i, j, u, v = tile_corners(t)
        if h[i] % 2 or h[j] % 2:
            return False
        for a in (i, j):
            for b in (u, v):
                if abs(h[a] - h[b]) != 1:
                    return False
    return True


def height_log_weight(h: HeightFunction, Delta, delta, params: ModelParams, c: float | None = None,
                      c_b: float | None = None, outside=(0, 1)) -> float:
    """Log-weight of ``h`` under the height measure on Delta with boundary tiles ``delta``.

    Tiles of A \\ delta carry c, tiles of delta carry c_b; heights off Delta must
    equal ``outside`` (primal value, dual value). Returns -inf when forbidden.
    """
    c = params.c if c is None else c
    c_b = params.c_b if c_b is None else c_b
    D = set(Delta)
    tiles = sorted({(v[0] + dx, v[1] + dy) for v in D for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))})
    if not is_height_function(h, tiles):
        return -math.inf
    for v, x in h.values.items():
        if v not in D and x != (outside[0] if is_primal(v) else outside[1]):
            return -math.inf
    ds = set(delta)
    lc, lcb = math.log(c), math.log(c_b)
    total = 0.0
    for t in tiles:
        if tile_type(h, t) >= 5:
            total += lcb if t in ds else lc
    return total
