"""Exact enumeration on tiny graphs and finite checks of the coupling identities.

Every ``verify_*`` returns a :class:`Report` holding the measured maximal
deviation, the tolerance and the outcome of a deliberately corrupted variant
(the negative control), which is expected to fail.
"""
from __future__ import annotations

import itertools
from builtins import enumerate as _enumerate
import json
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _exact, _uf
from .atrc import ATRCGraph, MATRCGraph, atrc_dual, atrc_edge_logs, layers, matrc_edge_logs
from .fk_potts import FKGraph, PottsGraph
from .lattice import (
    DobrushinDomain,
    LDomain,
    _build_domain,
    bkw_edges,
    bkw_edges_odd,
    diamond_neighbours,
    dual,
    edges_of,
    induced_edges,
    is_primal,
    l_domain,
    tile_corners,
    tile_of,
)
from .params import ModelParams, from_q
from .sixvertex import (
    HeightFunction,
    LoopConfig,
    OrientedLoops,
    Window,
    cluster_heights,
    dobrushin_window,
    even_window,
    height_log_weight,
    loops_of,
    odd_window,
)

MAX_STATES = 10**7
TOL = 1e-10

EVEN_2X2 = frozenset({(0, 0), (1, 1), (1, -1), (-1, 1), (-1, -1)})
EVEN_TWIN = frozenset({(0, 0), (2, 0), (1, 1), (1, -1), (-1, 1), (-1, -1), (3, 1), (3, -1)})
ODD_PLUS = frozenset({(1, 1), (0, 0), (2, 0), (0, 2), (2, 2)})


class StateSpaceTooLarge(ValueError):
    pass


def _guard(size: float, what: str):
    if size > MAX_STATES:
        raise StateSpaceTooLarge(f"{what}: {size:.3g} states exceed the limit of {MAX_STATES:.0e}")


# ---------------------------------------------------------------- distributions


@dataclass
class ExactDistribution:
    """Configurations (rows), their probabilities and the log partition function."""

    model: str
    configs: np.ndarray
    probs: np.ndarray
    log_z: float
    labels: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.probs)

    def items(self):
        return zip(map(tuple, self.configs.tolist()), self.probs.tolist())

    def as_dict(self) -> dict:
        return dict(self.items())

    @property
    def Z(self) -> float:
        return math.exp(self.log_z)

    def expect(self, fn) -> float:
        return _exact.neumaier_sum([p * fn(x) for x, p in zip(self.configs, self.probs)])


def _dist(model, rows, logw, labels=()) -> ExactDistribution:
    p, lz = _exact.log_normalize(logw)
    return ExactDistribution(model, np.asarray(rows), p, float(lz), list(labels))


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * _exact.neumaier_sum([abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys])


def _fk_pq(params):
    if isinstance(params, ModelParams):
        return params.p_c, params.q
    if isinstance(params, dict):
        return params["p"], params["q"]
    return params


def fk_code_logw(g: FKGraph, p: float, q: float) -> np.ndarray:
    """Log-weight p^o (1-p)^(|E|-o) q^k of every FK code (bit e = edge e)."""
    _guard(2.0**g.ne, "fk")
    o, k = _exact.fk_stats(g.ne, g.ends, g.nv, g.wired)
    lq = math.log(q)
    lp = math.log(p) if p > 0 else -math.inf
    l1 = math.log(1 - p) if p < 1 else -math.inf
    with np.errstate(invalid="ignore"):
        return np.where(o > 0, o * lp, 0.0) + np.where(g.ne - o > 0, (g.ne - o) * l1, 0.0) + k * lq


def _code_rows(codes, ne):
    return ((np.asarray(codes)[:, None] >> np.arange(ne)) & 1).astype(np.int8)


def _atrc_rows_logw(g: ATRCGraph, rows, J, U):
    lf = atrc_edge_logs(g.ne, J, U)
    z = np.zeros(g.nv, dtype=np.int64)
    return _exact.atrc_logw_rows(rows, g.ends, g.nv, g.wired_tau, g.wired_tt, lf, False, 1.0,
                                 np.zeros(g.nv, dtype=np.bool_), z)


def _matrc_allowed(mg: MATRCGraph):
    return [(0, 1, 2) if e else (0, 2) for e in mg.in_E]


def _matrc_rows_logw(mg: MATRCGraph, rows, params: ModelParams):
    g = mg.graph
    lf = matrc_edge_logs(mg, params)
    return _exact.atrc_logw_rows(np.ascontiguousarray(rows, dtype=np.int8), g.ends, g.nv, g.wired_tau,
                                 g.wired_tt, lf, True, params.c_b, mg.in_lam, mg.bminus)


def _dobrushin_spin_base(win: Window, dom: DobrushinDomain):
    """Boundary spins on the window nodes and the bit index of each node of D."""
    D = dom.D
    base = np.zeros(win.n_nodes, dtype=np.int8)
    dbit = np.full(win.n_nodes, -1, dtype=np.int64)
    k = 0
    for idx, v in _enumerate(win.nodes):
        if v in D:
            dbit[idx] = k
            k += 1
        elif is_primal(v):
            base[idx] = 1
        else:
            base[idx] = 1 if v[1] > 0 else -1
    return base, dbit, k


def _spin_table(dom: DobrushinDomain, params: ModelParams):
    win = dobrushin_window(dom)
    base, dbit, nD = _dobrushin_spin_base(win, dom)
    _guard(2.0**nD, "spin6v")
    keep, logw = _exact.spin_table(nD, dbit, base, win.corners, win.boundary, math.log(params.c), math.log(params.c_b))
    return win, base, dbit, nD, keep, logw


def enumerate_heights(nodes, tiles, fixed: dict, bound: int):
    """All height functions on ``nodes`` (values of ``fixed`` frozen) with |h| <= bound.

    Adjacent corners of a tile differ by one; primal values are even.
    """
    nodes = list(nodes)
    nb = {v: set() for v in nodes}
    for t in tiles:
        i, j, u, v = tile_corners(t)
        for a in (i, j):
            for b in (u, v):
                if a in nb:
                    nb[a].add(b)
                if b in nb:
                    nb[b].add(a)
    free = [v for v in nodes if v not in fixed]
    # order free nodes so each one (after the first) touches an earlier or fixed node
    order, placed = [], set(fixed)
    while len(order) < len(free):
        rest = [v for v in free if v not in placed]
        nxt = next((v for v in rest if nb[v] & placed), rest[0])
        order.append(nxt)
        placed.add(nxt)
    vals = dict(fixed)
    out = []

    def rec(k):
        if k == len(order):
            out.append(dict(vals))
            return
        v = order[k]
        known = [vals[w] for w in nb[v] if w in vals]
        if known:
            cand = {known[0] - 1, known[0] + 1}
        else:
            cand = set(range(-bound, bound + 1))
        par = 0 if is_primal(v) else 1
        for x in sorted(cand):
            if abs(x) > bound or x % 2 != par:
                continue
            if all(abs(x - y) == 1 for y in known):
                vals[v] = x
                rec(k + 1)
                del vals[v]

    rec(0)
    return out


def _domain_diameter(D) -> int:
    xs = [v[0] for v in D]
    ys = [v[1] for v in D]
    return max(max(xs) - min(xs), max(ys) - min(ys)) + 1


def _height_measure(D: LDomain, params: ModelParams, c=None, c_b=None, boundary_tiles=None):
    """Exact height measure on D as a dict {heights on sorted D: probability}."""
    nodes = sorted({x for t in D.A for x in tile_corners(t)})
    fixed = {v: (0 if is_primal(v) else 1) for v in nodes if v not in D.verts}
    bound = _domain_diameter(D.verts) + 1
    hs = enumerate_heights(nodes, D.A, fixed, bound)
    _guard(len(hs), "height")
    delta = D.bd if boundary_tiles is None else boundary_tiles
    keys = sorted(D.verts)
    lw = np.array([height_log_weight(HeightFunction(h), D.verts, delta, params, c=c, c_b=c_b) for h in hs])
    p, _ = _exact.log_normalize(lw)
    out: dict = {}
    for h, x in zip(hs, p):
        if x > 0:
            k = tuple(h[v] for v in keys)
            out[k] = out.get(k, 0.0) + x
    return out, keys


def enumerate(model: str, domain, params=None, bc=None) -> ExactDistribution:
    """Exact law of ``model`` on a tiny domain.

    fk: ``domain`` an FKGraph, ``params`` a ModelParams (p_c, q) or (p, q).
    potts: a PottsGraph, ``params`` = (T, q). spin6v and matrc: a Dobrushin
    domain. height: an LDomain; ``bc`` may give (c, c_b). atrc: an
    ATRCGraph, ``params`` a ModelParams or (J, U).
    """
    if model == "fk":
        p, q = _fk_pq(params)
        lw = fk_code_logw(domain, p, q)
        return _dist("fk", _code_rows(np.arange(lw.size), domain.ne), lw, domain.edges if hasattr(domain, "edges") else [])
    if model == "potts":
        T, q = params
        q = int(q)
        _guard(float(q) ** domain.nv, "potts")
        rows = _exact.mixed_radix(np.arange(q**domain.nv), [q] * domain.nv).astype(np.int64) + 1
        same = (rows[:, domain.ends[:, 0]] == rows[:, domain.ends[:, 1]]).sum(axis=1) if domain.ends.size else 0
        lw = (same + ((rows == 1) * domain.field1).sum(axis=1)) / T
        return _dist("potts", rows, lw, domain.verts)
    if model == "spin6v":
        win, base, dbit, nD, keep, logw = _spin_table(domain, params)
        codes = np.flatnonzero(keep)
        labels = [v for k, v in _enumerate(win.nodes) if dbit[k] >= 0]
        rows = _exact.spin_rows(codes, dbit, base)[:, dbit >= 0]
        return _dist("spin6v", rows, logw[codes], labels)
    if model == "height":
        c, c_b = bc if bc is not None else (None, None)
        meas, keys = _height_measure(domain, params, c, c_b)
        ks = list(meas)
        return ExactDistribution("height", np.array(ks), np.array([meas[k] for k in ks]), float("nan"), keys)
    if model == "atrc":
        J, U = (params.J, params.U) if isinstance(params, ModelParams) else params
        _guard(3.0**domain.ne, "atrc")
        rows = _exact.mixed_radix(np.arange(3**domain.ne), [3] * domain.ne)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return _dist("atrc", rows, _atrc_rows_logw(domain, rows, J, U), domain.edges)
    if model == "matrc":
        mg = MATRCGraph.of(domain)
        allowed = _matrc_allowed(mg)
        _guard(float(np.prod([len(a) for a in allowed])), "matrc")
        rows = _exact.product_states(allowed)
        return _dist("matrc", rows, _matrc_rows_logw(mg, rows, params), domain.E_bar)
    raise ValueError(f"unknown model {model!r}")


# ---------------------------------------------------------------- reports


@dataclass
class Report:
    name: str
    passed: bool
    max_deviation: float
    tolerance: float = TOL
    details: dict = field(default_factory=dict)
    controls: list = field(default_factory=list)

    @property
    def controls_fail(self) -> bool:
        return all(not c.passed for c in self.controls)

    @property
    def ok(self) -> bool:
        """Main check passes and every negative control fails."""
        return self.passed and self.controls_fail

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "max_deviation": float(self.max_deviation),
            "tolerance": self.tolerance,
            "details": self.details,
            "controls": [c.to_dict() for c in self.controls],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, default=float)


def _report(name, dev, tol=TOL, **details) -> Report:
    return Report(name, bool(dev <= tol), float(dev), tol, details)


def _tv_arrays(a, b) -> float:
    return 0.5 * float(_exact.neumaier_sum(np.abs(np.asarray(a) - np.asarray(b))))


# ---------------------------------------------------------------- loop weight


def loop_weight_deviation(dom: DobrushinDomain, q: float, p: float) -> tuple[float, dict]:
    """Max relative deviation between FK 1/0 probabilities at p and sqrt(q)^(#loops)."""
    win = dobrushin_window(dom)
    ends, wired = dom.fk_arrays()
    ne = len(dom.E)
    _guard(2.0**ne, "fk")
    o, k, L = _exact.fk_loop_table(ne, ends, len(dom.V), wired, win.corners, win.src, win.fixed,
                                   win.n_nodes, win.root, win.inside)
    lw_fk = o * math.log(p) + (ne - o) * math.log(1 - p) + k * math.log(q)
    lw_loop = L * 0.5 * math.log(q)
    p1, _ = _exact.log_normalize(lw_fk)
    p2, _ = _exact.log_normalize(lw_loop)
    dev = float(np.max(np.abs(p1 / p2 - 1)))
    return dev, {"configurations": int(2**ne), "max_loops": int(L.max())}


def verify_loop_weight(dom: DobrushinDomain | None = None, q: float = 25.0) -> Report:
    dom = dom or _build_domain(1, 1)
    p_c = math.sqrt(q) / (math.sqrt(q) + 1)
    dev, det = loop_weight_deviation(dom, q, p_c)
    r = _report("loop_weight", dev, domain=[dom.n, dom.m], q=q, **det)
    cdev, _ = loop_weight_deviation(dom, q, 0.5)
    r.controls.append(_report("loop_weight/p=1/2", cdev, q=q))
    return r


# ---------------------------------------------------------------- BKW: FK -> spins


def bkw_spin_law(dom: DobrushinDomain, params: ModelParams, p_fav: float):
    """Spin-code law from exact FK 1/0 and independent loop orientations."""
    win = dobrushin_window(dom)
    base, dbit, nD = _dobrushin_spin_base(win, dom)
    g = FKGraph.dobrushin(dom)
    # FKGraph.dobrushin lists dom.E in order, so bit e of the code is window source e
    lw = fk_code_logw(g, params.p_c, params.q)
    shift = float(lw.max())
    lpf = math.log(p_fav) if p_fav > 0 else -math.inf
    lpu = math.log(1 - p_fav) if p_fav < 1 else -math.inf
    _guard(2.0**nD, "spin6v")
    S = _exact.bkw_pushforward(g.ne, lw, win.corners, win.src, win.fixed, win.n_nodes, win.root, win.inside,
                               win.heights[0], win.heights[1], win.step, lpf, lpu, dbit, nD, shift)
    return S / _exact.neumaier_sum(S)


def verify_bkw_spin(dom: DobrushinDomain | None = None, params: ModelParams | None = None) -> Report:
    dom = dom or _build_domain(1, 1)
    params = params or from_q(25.0)
    _, _, _, _, keep, logw = _spin_table(dom, params)
    target, _ = _exact.log_normalize(logw)
    pf = math.exp(params.lam) / params.sqrt_q
    push = bkw_spin_law(dom, params, pf)
    r = _report("bkw_spin", _tv_arrays(push, target), domain=[dom.n, dom.m], q=params.q,
                admissible_spin_configurations=int(keep.sum()))
    lit = math.exp(params.lam) / params.c
    bad = bkw_spin_law(dom, params, min(lit, 1.0))
    r.controls.append(_report("bkw_spin/threshold=e^lam/c", _tv_arrays(bad, target),
                              favoured_probability=lit, is_probability=bool(lit <= 1.0)))
    return r


# ---------------------------------------------------------------- spins -> mATRC


def _ebar_tiles(dom: DobrushinDomain, win: Window) -> np.ndarray:
    return np.array([[win.index[x] for x in tile_corners(tile_of(e))] for e in dom.E_bar], dtype=np.int64)


def spin_matrc_law(dom, params, xs, c_in=None, c_bd=None):
    """Unnormalised pushforward probabilities of the mATRC rows ``xs`` and the spin partition sum."""
    win, base, dbit, nD, keep, logw = _spin_table(dom, params)
    codes = np.flatnonzero(keep)
    spins = _exact.spin_rows(codes, dbit, base)
    slw = logw[codes]
    tiles = _ebar_tiles(dom, win)
    isb = np.arange(len(dom.E_bar)) >= len(dom.E)
    c_in = params.c if c_in is None else c_in
    c_bd = params.c_b if c_bd is None else c_bd
    P = _exact.matrc_pushforward(np.ascontiguousarray(xs, dtype=np.int8), spins, slw, tiles, isb, c_in, c_bd)
    Zs = _exact.neumaier_sum(np.exp(slw - slw.max()))
    return P / Zs, (spins, slw, tiles)


def _lr_connected(dom, mg, rows):
    z = np.zeros(mg.graph.nv, dtype=np.bool_)
    return _exact.connected_rows(np.ascontiguousarray(rows, dtype=np.int8), mg.graph.ends, mg.graph.nv, z, 2,
                                 dom.kindex[dom.vL], dom.kindex[dom.vR])


def _coupling_sample(spins, slw, tiles, nE, params, rng, size):
    """Draw (spins, mATRC) pairs from the exact spin law and the tile rules."""
    p, _ = _exact.log_normalize(slw)
    idx = rng.choice(len(p), size=size, p=p)
    out = np.empty((size, tiles.shape[0]), dtype=np.int8)
    for r, k in _enumerate(idx):
        s = spins[k]
        u = rng.random(tiles.shape[0])
        for t, (i, j, a, b) in _enumerate(tiles):
            if s[a] != s[b]:
                out[r, t] = 2
            elif s[i] != s[j]:
                out[r, t] = 0
            elif t < nE:
                out[r, t] = 2 if u[t] < 1 / params.c else (0 if u[t] < 2 / params.c else 1)
            else:
                out[r, t] = 2 if u[t] < 1 / params.c_b else 0
    return idx, out


def coupling_support_ok(dom, spins_row, x, tiles) -> bool:
    """Primal spins constant on tau-tau' clusters and dual spins constant across closed tau edges."""
    for t, (i, j, a, b) in _enumerate(tiles):
        if x[t] >= 1 and spins_row[i] != spins_row[j]:
            return False
        if x[t] < 2 and spins_row[a] != spins_row[b]:
            return False
    return True


def verify_spin_to_matrc(dom: DobrushinDomain | None = None, params: ModelParams | None = None,
                         samples: int = 200, seed: int = 7) -> Report:
    """Pushforward of the spin measure equals mATRC conditioned on v_L <-> v_R in omega_tau.

    Small domains are compared over the whole state space. Otherwise the
    check is pointwise on configurations drawn from the coupling and from the
    unconditioned mATRC: the ratio of the two laws must be constant on
    {v_L <-> v_R} and the pushforward must vanish off it.
    """
    dom = dom or _build_domain(1, 1)
    params = params or from_q(25.0)
    mg = MATRCGraph.of(dom)
    allowed = _matrc_allowed(mg)
    size = float(np.prod([len(a) for a in allowed]))
    if size <= 2e5:
        rows = _exact.product_states(allowed)
        lw = _matrc_rows_logw(mg, rows, params)
        conn = _lr_connected(dom, mg, rows)
        tgt, _ = _exact.log_normalize(np.where(conn, lw, -np.inf))
        free, _ = _exact.log_normalize(lw)
        push, _ = spin_matrc_law(dom, params, rows)
        swapped, _ = spin_matrc_law(dom, params, rows, c_in=params.c_b, c_bd=params.c)
        r = _report("spin_to_matrc", _tv_arrays(push, tgt), domain=[dom.n, dom.m], mode="total variation",
                    states=int(size))
        r.controls.append(_report("spin_to_matrc/unconditioned", _tv_arrays(push, free)))
        r.controls.append(_report("spin_to_matrc/thresholds_swapped", _tv_arrays(swapped / swapped.sum(), tgt)))
        return r
    rng = np.random.default_rng(seed)
    _, (spins, slw, tiles) = spin_matrc_law(dom, params, np.zeros((1, len(dom.E_bar)), dtype=np.int8))
    idx, xs = _coupling_sample(spins, slw, tiles, len(dom.E), params, rng, samples)
    support = all(coupling_support_ok(dom, spins[k], x, tiles) for k, x in zip(idx, xs))
    from .atrc import ATRCChain

    ch = ATRCChain(mg, params, seed)
    extra = []
    for _ in range(samples // 2):
        extra.append(ch.run(2).copy())
    xs = np.vstack([xs, np.array(extra, dtype=np.int8)])
    lw = _matrc_rows_logw(mg, xs, params)
    conn = _lr_connected(dom, mg, xs)

    def ratio_dev(P, use_conn=True):
        on = conn if use_conn else np.ones(len(xs), dtype=bool)
        rat = P[on] / np.exp(lw[on] - lw[on].max())
        ref = np.median(rat)
        d = float(np.max(np.abs(rat / ref - 1))) if ref > 0 else 1.0
        if use_conn:
            off = P[~conn]
            d = max(d, float(np.max(off)) / ref if off.size and ref > 0 else 0.0)
        return d

    push, _ = spin_matrc_law(dom, params, xs)
    swapped, _ = spin_matrc_law(dom, params, xs, c_in=params.c_b, c_bd=params.c)
    dev = ratio_dev(push)
    r = _report("spin_to_matrc", dev if support else max(dev, 1.0), domain=[dom.n, dom.m],
                mode="pointwise ratio", configurations=int(len(xs)), connected=int(conn.sum()),
                support_consistent=bool(support))
    r.controls.append(_report("spin_to_matrc/unconditioned", ratio_dev(push, use_conn=False),
                              disconnected_configurations=int((~conn).sum())))
    r.controls.append(_report("spin_to_matrc/thresholds_swapped", ratio_dev(swapped)))
    return r


# ---------------------------------------------------------------- heights


def _window_of(D: LDomain) -> Window:
    if D.parity == "even":
        return even_window(D)
    if D.parity == "odd":
        return odd_window(D)
    raise ValueError("domain is neither even nor odd")


def bkw_height_law(D: LDomain, params: ModelParams, flip: bool = False) -> dict:
    """Exact law of the heights on D from percolation plus loop orientations.

    Even domains use wired percolation on the edges dual to D's dual edges,
    odd domains free percolation on the primal edges of D. ``flip`` reverses
    the favoured direction (the corrupted control).
    """
    win = _window_of(D)
    if flip:
        win.step = -win.step
    if D.parity == "even":
        g = FKGraph.from_edges(win.fk_edges, wired_verts=[v for e in win.fk_edges for v in e if v not in D.verts])
    else:
        g = FKGraph.from_edges(win.fk_edges)
    fk = enumerate("fk", g, params)
    pf = math.exp(params.lam) / params.sqrt_q
    keys = sorted(D.verts)
    kidx = [win.index[v] for v in keys]
    out: dict = {}
    for omega, pw in zip(fk.configs, fk.probs):
        if pw == 0:
            continue
        loops: LoopConfig = loops_of(omega.astype(bool), win)
        L = loops.n_loops
        for bits in itertools.product((True, False), repeat=L):
            sign = np.full(loops.n_clusters, win.step, dtype=np.int64)
            sign[loops.free] = np.where(np.array(bits, dtype=bool), win.step, -win.step) if L else sign[loops.free]
            h = cluster_heights(OrientedLoops(loops, sign > 0))[loops.label]
            nf = sum(bits)
            w = pw * pf**nf * (1 - pf) ** (L - nf)
            k = tuple(int(h[i]) for i in kidx)
            out[k] = out.get(k, 0.0) + w
    return out


def xc_law(hlaw: dict, keys, edges, c: float, thresholds=None) -> np.ndarray:
    """Law of the ATRC configuration sampled from heights by the local tile rule.

    Dense over base-3 codes, edge k being digit k (least significant first).
    """
    lo, hi = (1 / c, 2 / c) if thresholds is None else thresholds
    pos = {v: k for k, v in _enumerate(keys)}
    _guard(3.0 ** len(edges), "xc")
    total = np.zeros(3 ** len(edges))

    def hv(h, v):
        if v in pos:
            return h[pos[v]]
        return 0 if is_primal(v) else 1

    for h, ph in hlaw.items():
        vec = np.array([ph])
        # kron puts its first factor in the most significant digit
        for e in reversed(edges):
            i, j = e
            a, b = dual(e)
            if hv(h, a) != hv(h, b):
                f = np.array([0.0, 0.0, 1.0])
            elif hv(h, i) != hv(h, j):
                f = np.array([1.0, 0.0, 0.0])
            else:
                f = np.array([hi - lo, 1 - hi, lo])
            vec = np.kron(vec, f)
        total += vec
    return total


def atrc01_law(D: LDomain, params: ModelParams) -> tuple[np.ndarray, list]:
    """Dense ATRC law with (0,1) boundary on the tile edges of D, in :func:`xc_law` order."""
    edges = sorted(D.tile_edges)
    g = ATRCGraph.from_edges(edges, eta=(0, 1))
    return enumerate("atrc", g, params).probs, edges


def verify_height_sampling(D: LDomain | None = None, params: ModelParams | None = None) -> Report:
    """Percolation -> heights equals the height measure (c inside, c_b on boundary tiles).

    On even domains also checks that the height measure with c on every tile,
    sampled down to an ATRC configuration, equals ATRC with (0,1) boundary.
    """
    D = D or l_domain(EVEN_2X2)
    params = params or from_q(25.0)
    target, keys = _height_measure(D, params)
    push = bkw_height_law(D, params)
    dev = total_variation(push, target)
    det = {"parity": D.parity, "vertices": len(D.verts)}
    controls = [_report("height_sampling/printed_direction", total_variation(bkw_height_law(D, params, flip=True), target))]
    if D.parity == "even" and 3.0 ** len(D.tile_edges) <= MAX_STATES:
        hc, keys_c = _height_measure(D, params, c_b=params.c)
        at, edges = atrc01_law(D, params)
        xc = xc_law(hc, keys_c, edges, params.c)
        d2 = _tv_arrays(xc, at)
        det["heights_to_atrc01_tv"] = d2
        det["percolation_route_to_atrc01_tv"] = _tv_arrays(xc_law(push, keys, edges, params.c), at)
        dev = max(dev, d2)
        controls.append(_report("height_sampling/uniform_thresholds",
                                _tv_arrays(xc_law(hc, keys_c, edges, params.c, (1 / 3, 2 / 3)), at)))
    r = _report("height_sampling", dev, **det)
    r.controls = controls
    return r


# ---------------------------------------------------------------- Edwards-Sokal


def es_law(dom: DobrushinDomain, q: int, exterior_colour: int = 0) -> np.ndarray:
    g = FKGraph.dobrushin(dom)
    p = math.sqrt(q) / (1 + math.sqrt(q))
    lw = fk_code_logw(g, p, q)
    lam = sorted(dom.Lam)
    pos = {v: k for k, v in _enumerate(lam)}
    pidx = np.array([pos.get(v, -1) if not g.wired[k] else -1 for k, v in _enumerate(g.verts)], dtype=np.int64)
    _guard(float(q) ** len(lam) + 2.0**g.ne, "es")
    S = _exact.es_pushforward(g.ne, g.ends, g.nv, g.wired, lw, pidx, len(lam), q, exterior_colour, float(lw.max()))
    return S / _exact.neumaier_sum(S)


def verify_es(dom: DobrushinDomain | None = None, q: int = 3) -> Report:
    """Colouring FK 1/0 clusters gives the Potts measure with colour 1 on the upper exterior."""
    dom = dom or _build_domain(1, 1)
    p = math.sqrt(q) / (1 + math.sqrt(q))
    T = -1.0 / math.log(1 - p)
    pg = PottsGraph.box(dom.n, dom.m, "1f")
    potts = enumerate("potts", pg, (T, q))
    # potts rows are colour digits, least significant first, colours 1..q
    target = np.zeros(q ** pg.nv)
    idx = ((potts.configs - 1) * (q ** np.arange(pg.nv))).sum(axis=1)
    target[idx] = potts.probs
    r = _report("edwards_sokal", _tv_arrays(es_law(dom, q), target), domain=[dom.n, dom.m], q=q)
    r.controls.append(_report("edwards_sokal/exterior_colour_2", _tv_arrays(es_law(dom, q, 1), target)))
    return r


# ---------------------------------------------------------------- duality


def dual_graph(edges, eta):
    """Planar dual of an edge set: dual edges, and the ATRC graph with the dual boundary condition.

    Dual vertices that are not enclosed faces (all four surrounding edges
    present) are exterior and carry the dual condition.
    """
    E = set(edges)
    dedges = sorted(dual(e) for e in edges)
    faces = {x for f in dedges for x in f}
    inner = set()
    for f in faces:
        sq = [tuple(sorted(((f[0] + dx, f[1] + dy), (f[0] + dx2, f[1] + dy2))))
              for (dx, dy), (dx2, dy2) in (((-1, -1), (1, -1)), ((1, -1), (1, 1)), ((1, 1), (-1, 1)), ((-1, 1), (-1, -1)))]
        if all(e in E for e in sq):
            inner.add(f)
    eta_d = (1 - eta[1], 1 - eta[0])
    return dedges, ATRCGraph.from_edges(dedges, eta=eta_d, boundary=sorted(faces - inner))


def _primal_graph(edges, eta):
    E = set(edges)
    verts = {x for e in E for x in e}
    inner = {v for v in verts if all(e in E for e in edges_of(v))}
    return ATRCGraph.from_edges(sorted(E), eta=eta, boundary=sorted(verts - inner))


def duality_tv(edges, eta, J, U) -> float:
    edges = sorted(edges)
    g = _primal_graph(edges, eta)
    dedges, gd = dual_graph(edges, eta)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mu = enumerate("atrc", g, (J, U))
        nu = enumerate("atrc", gd, (J, U))
    pos = {e: k for k, e in _enumerate(gd.edges)}
    push: dict = {}
    for x, p in mu.items():
        de, s = atrc_dual(edges, x)
        y = np.empty(len(s), dtype=np.int8)
        for e, v in zip(de, s):
            y[pos[e]] = v
        k = tuple(y.tolist())
        push[k] = push.get(k, 0.0) + p
    return total_variation(push, nu.as_dict())


def fk_duality_tv(edges, q: float, p: float, p_dual: float) -> float:
    edges = sorted(edges)
    verts = {x for e in edges for x in e}
    g = FKGraph.from_edges(edges)
    dedges, gd = dual_graph(edges, (0, 0))
    gfk = FKGraph.from_edges(gd.edges, wired_verts=[v for k, v in _enumerate(gd.verts) if gd.wired_tt[k]])
    mu = enumerate("fk", g, (p, q))
    nu = enumerate("fk", gfk, (p_dual, q))
    pos = {e: k for k, e in _enumerate(gfk.edges)}
    order = [pos[dual(e)] for e in edges]
    push: dict = {}
    for x, w in mu.items():
        y = [0] * len(edges)
        for k, v in _enumerate(x):
            y[order[k]] = 1 - v
        push[tuple(y)] = push.get(tuple(y), 0.0) + w
    del verts
    return total_variation(push, nu.as_dict())


LADDER = sorted(induced_edges([(x, y) for x in (0, 2, 4) for y in (0, 2)]))
SINGLE = [((0, 0), (2, 0))]


def verify_duality(edges=None, params: ModelParams | None = None) -> Report:
    """ATRC on E with condition eta maps to ATRC on the dual edges with (1-eta_tt', 1-eta_t)."""
    params = params or from_q(25.0)
    sets = {"single": SINGLE, "ladder": LADDER} if edges is None else {"given": sorted(edges)}
    devs = {}
    for name, E in sets.items():
        for eta in ((0, 0), (0, 1), (1, 1)):
            devs[f"{name}{eta}"] = duality_tv(E, eta, params.J, params.U)
        devs[f"{name}/fk"] = fk_duality_tv(E, params.q, params.p_c, params.p_c)
    r = _report("duality", max(devs.values()), **{k: float(v) for k, v in devs.items()})
    bad = max(duality_tv(E, (0, 0), params.J + 0.1, params.U) for E in sets.values())
    r.controls.append(_report("duality/off_selfdual", bad))
    return r


# ---------------------------------------------------------------- FKG


def fkg_deviation(dist: ExactDistribution) -> float:
    """max over all pairs of mu(a)mu(b) - mu(a v b)mu(a ^ b), relative to max mu^2 (<= 0 means FKG)."""
    X = np.asarray(dist.configs, dtype=np.int64)
    base = int(X.max()) + 1 if X.size else 2
    w = base ** np.arange(X.shape[1])
    code = X @ w
    lookup = dict(zip(code.tolist(), dist.probs.tolist()))
    P = dist.probs
    worst = -np.inf
    for a in range(len(X)):
        hi = np.maximum(X[a], X) @ w
        lo = np.minimum(X[a], X) @ w
        ph = np.array([lookup.get(k, 0.0) for k in hi.tolist()])
        pl = np.array([lookup.get(k, 0.0) for k in lo.tolist()])
        worst = max(worst, float(np.max(P[a] * P - ph * pl)))
    return worst / float(P.max() ** 2)


def verify_fkg(dist: ExactDistribution | None = None) -> Report:
    if dist is not None:
        dev = fkg_deviation(dist)
        return _report(f"fkg/{dist.model}", max(dev, 0.0), 1e-12, raw=dev)
    params = from_q(25.0)
    m = enumerate("matrc", _build_domain(0, 0), params)
    a = enumerate("atrc", _primal_graph(SINGLE, (0, 0)), params)
    a11 = enumerate("atrc", ATRCGraph.box(0, (1, 1)), params)
    devs = {"matrc(0,0)": fkg_deviation(m), "atrc_single": fkg_deviation(a), "atrc_star(1,1)": fkg_deviation(a11)}
    r = _report("fkg", max(max(devs.values()), 0.0), 1e-12, **devs)
    anti = ExactDistribution("counterexample", np.array([[0, 0], [1, 0], [0, 1], [1, 1]]),
                             np.array([0.05, 0.45, 0.45, 0.05]), 0.0)
    r.controls.append(_report("fkg/anti-correlated", max(fkg_deviation(anti), 0.0), 1e-12))
    return r


# ---------------------------------------------------------------- Euler


def euler_sides(dom: DobrushinDomain, state) -> tuple[int, int]:
    """(kappa_{K*}(omega_tau*) - 1, kappa_K(omega_tau) + |omega_tau| - |V_bar|)."""
    t, _ = layers(state)
    ends, _ = dom.k_arrays()
    nv = len(dom.V_bar)
    z = np.zeros(nv, dtype=np.bool_)
    kK = int(_uf.count_clusters(nv, ends, t, z))
    E = set(dom.E_bar)
    dedges = [dual(e) for e in dom.E_bar]
    faces = sorted({x for f in dedges for x in f})
    inner = [f for f in faces
             if all(tuple(sorted(((f[0] + a, f[1] + b), (f[0] + c, f[1] + d)))) in E
                    for (a, b), (c, d) in (((-1, -1), (1, -1)), ((1, -1), (1, 1)), ((1, 1), (-1, 1)), ((-1, 1), (-1, -1))))]
    if len(inner) != len(dom.E_bar) - nv + 1:
        raise AssertionError("K has a face that is not a unit square")
    fid = {f: k for k, f in _enumerate(inner)}
    outer = len(inner)
    dends = np.array([[fid.get(a, outer), fid.get(b, outer)] for a, b in dedges], dtype=np.int64)
    kD = int(_uf.count_clusters(outer + 1, dends, ~t, np.zeros(outer + 1, dtype=np.bool_)))
    return kD - 1, kK + int(t.sum()) - nv


def verify_euler(x, dom: DobrushinDomain) -> bool:
    a, b = euler_sides(dom, x)
    return a == b


def verify_euler_suite(dom: DobrushinDomain | None = None, trials: int = 1000, seed: int = 3) -> Report:
    dom = dom or _build_domain(2, 2)
    rng = np.random.default_rng(seed)
    ne = len(dom.E_bar)
    cases = [np.zeros(ne, dtype=np.int8), np.full(ne, 2, dtype=np.int8)]
    cases += [rng.integers(0, 3, ne).astype(np.int8) for _ in range(trials)]
    bad = sum(not verify_euler(x, dom) for x in cases)
    r = _report("euler", float(bad), 0.0, configurations=len(cases))

    # corrupted: count the dual without the outer face merged
    def broken(x):
        a, b = euler_sides(dom, x)
        return a + 1 == b

    r.controls.append(_report("euler/outer_face_dropped", float(sum(not broken(x) for x in cases[:50])), 0.0))
    return r


# ---------------------------------------------------------------- decoupling


def annulus_conditioning(dom: DobrushinDomain):
    """Smallest annulus in the n = m = 1 domain around the edge (0,0)-(0,1).

    Returns (inner edges F1, {edge: state} on F2 \\ F1). The six edges around
    F1 are tau-closed (a dual circuit), the rectangle x = +-1, -1 <= y <= 2 is
    tau-tau'-open (a primal circuit).
    """
    F1 = [((0, 0), (0, 2))]
    ring_dual = [((-2, 0), (0, 0)), ((0, 0), (2, 0)), ((0, -2), (0, 0)),
                 ((-2, 2), (0, 2)), ((0, 2), (2, 2)), ((0, 2), (0, 4))]
    circuit = []
    for x in (-2, 2):
        circuit += [((x, -2), (x, 0)), ((x, 0), (x, 2)), ((x, 2), (x, 4))]
    circuit += [((-2, -2), (0, -2)), ((0, -2), (2, -2)), ((-2, 4), (0, 4)), ((0, 4), (2, 4))]
    nE = len(dom.E)
    cond = {e: 0 for e in ring_dual}
    for e in circuit:
        cond[e] = 2 if dom.keindex[e] >= nE else 1
    return F1, cond


def decoupling_deviation(dom: DobrushinDomain, params: ModelParams, F1, cond: dict) -> tuple[float, int]:
    mg = MATRCGraph.of(dom)
    allowed = _matrc_allowed(mg)
    k1 = [dom.keindex[e] for e in F1]
    fixed = {dom.keindex[e]: s for e, s in cond.items()}
    k2 = [k for k in range(mg.ne) if k not in fixed and k not in k1]
    A1 = _exact.product_states([allowed[k] for k in k1]) if k1 else np.zeros((1, 0), dtype=np.int8)
    A2 = _exact.product_states([allowed[k] for k in k2])
    _guard(len(A1) * len(A2), "decoupling")
    rows = np.empty((len(A1) * len(A2), mg.ne), dtype=np.int8)
    for k, s in fixed.items():
        rows[:, k] = s
    rows[:, k1] = np.repeat(A1, len(A2), axis=0)
    rows[:, k2] = np.tile(A2, (len(A1), 1))
    P, _ = _exact.log_normalize(_matrc_rows_logw(mg, rows, params))
    P = P.reshape(len(A1), len(A2))
    dev = float(np.max(np.abs(P - np.outer(P.sum(axis=1), P.sum(axis=0)))))
    return dev, int(P.size)


def verify_decoupling(dom: DobrushinDomain | None = None, params: ModelParams | None = None, annulus=None) -> Report:
    dom = dom or _build_domain(1, 1)
    params = params or from_q(25.0)
    F1, cond = annulus or annulus_conditioning(dom)
    dev, n = decoupling_deviation(dom, params, F1, cond)
    vac, _ = decoupling_deviation(dom, params, [], cond)
    r = _report("decoupling", max(dev, vac), states=n, empty_inner=vac)
    # two tau-open edges through the dual circuit let the outside decide whether
    # the inner edge merges tau-clusters
    leaky = dict(cond)
    leaky[((0, 0), (2, 0))] = 2
    leaky[((0, 2), (0, 4))] = 2
    r.controls.append(_report("decoupling/no_dual_circuit", decoupling_deviation(dom, params, F1, leaky)[0]))
    return r


# ---------------------------------------------------------------- Ashkin-Teller


def at_correlations(g: ATRCGraph, J: float, U: float, i, j):
    """Exact <tau_i tau_j> and <tau_i tau'_i tau_j tau'_j>; boundary vertices fixed to + when wired."""
    vid = g.vindex()
    frozen = g.wired_tau & g.wired_tt
    free = [k for k in range(g.nv) if not frozen[k]]
    _guard(4.0 ** len(free), "ashkin-teller")
    n = len(free)
    codes = np.arange(4**n)
    t = np.ones((codes.size, g.nv), dtype=np.int64)
    tp = np.ones((codes.size, g.nv), dtype=np.int64)
    for k, v in _enumerate(free):
        t[:, v] = 1 - 2 * ((codes >> (2 * k)) & 1)
        tp[:, v] = 1 - 2 * ((codes >> (2 * k + 1)) & 1)
    a, b = g.ends[:, 0], g.ends[:, 1]
    h = (J * (t[:, a] * t[:, b] + tp[:, a] * tp[:, b]) + U * t[:, a] * t[:, b] * tp[:, a] * tp[:, b]).sum(axis=1)
    p, _ = _exact.log_normalize(h)
    ii, jj = vid[i], vid[j]
    two = _exact.neumaier_sum(p * t[:, ii] * t[:, jj])
    four = _exact.neumaier_sum(p * t[:, ii] * tp[:, ii] * t[:, jj] * tp[:, jj])
    return two, four


def atrc_connections(g: ATRCGraph, J: float, U: float, i, j):
    d = enumerate("atrc", g, (J, U))
    vid = g.vindex()
    rows = np.ascontiguousarray(d.configs, dtype=np.int8)
    c2 = _exact.connected_rows(rows, g.ends, g.nv, g.wired_tau, 2, vid[i], vid[j])
    c4 = _exact.connected_rows(rows, g.ends, g.nv, g.wired_tt, 1, vid[i], vid[j])
    return _exact.neumaier_sum(d.probs * c2), _exact.neumaier_sum(d.probs * c4)


def _at_instances():
    sq = [(0, 0), (2, 0), (0, 2), (2, 2)]
    star = sorted({e for v in sq for e in edges_of(v)})
    outside = sorted({x for e in star for x in e} - set(sq))
    return {
        "single(1,1)": (ATRCGraph.from_edges(SINGLE, (1, 1), boundary=[(2, 0)]), (0, 0), (2, 0)),
        "2x2(1,1)": (ATRCGraph.from_edges(star, (1, 1), boundary=outside), (0, 0), (2, 2)),
        "2x2(0,0)": (ATRCGraph.from_edges(sorted(induced_edges(sq)), (0, 0), boundary=[]), (0, 0), (2, 2)),
    }


def at_identity_deviation(J, U, J_rc=None, U_rc=None, names=None) -> dict:
    out = {}
    for name, (g, i, j) in _at_instances().items():
        if names is not None and name not in names:
            continue
        two, four = at_correlations(g, J, U, i, j)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            c2, c4 = atrc_connections(g, J if J_rc is None else J_rc, U if U_rc is None else U_rc, i, j)
        out[name] = max(abs(two - c2), abs(four - c4))
    return out


def verify_at_identity(params: ModelParams | None = None) -> Report:
    params = params or from_q(25.0)
    devs = at_identity_deviation(params.J, params.U)
    r = _report("at_identity", max(devs.values()), **devs)
    bad = at_identity_deviation(params.J, params.U, J_rc=params.J * 1.2, names=("single(1,1)", "2x2(0,0)"))
    r.controls.append(_report("at_identity/mismatched_coupling", max(bad.values())))
    return r


# ---------------------------------------------------------------- suite


def run_suite(log=None) -> list[Report]:
    """All verifiers on their standard tiny instances."""
    p25 = from_q(25.0)
    jobs = [
        ("loop_weight q=25", lambda: verify_loop_weight(_build_domain(1, 1), 25.0)),
        ("loop_weight q=6.5", lambda: verify_loop_weight(_build_domain(1, 1), 6.5)),
        ("bkw_spin q=25", lambda: verify_bkw_spin(_build_domain(1, 1), p25)),
        ("bkw_spin q=30", lambda: verify_bkw_spin(_build_domain(1, 1), from_q(30.0))),
        ("spin_to_matrc (1,1)", lambda: verify_spin_to_matrc(_build_domain(1, 1), p25)),
        ("spin_to_matrc (1,0)", lambda: verify_spin_to_matrc(_build_domain(1, 0), p25)),
        ("spin_to_matrc (0,1)", lambda: verify_spin_to_matrc(_build_domain(0, 1), p25)),
        ("spin_to_matrc (0,0)", lambda: verify_spin_to_matrc(_build_domain(0, 0), p25)),
        ("height_sampling even 2x2", lambda: verify_height_sampling(l_domain(EVEN_2X2), p25)),
        ("height_sampling even twin", lambda: verify_height_sampling(l_domain(EVEN_TWIN), p25)),
        ("height_sampling odd", lambda: verify_height_sampling(l_domain(ODD_PLUS), p25)),
        ("edwards_sokal q=3 (1,1)", lambda: verify_es(_build_domain(1, 1), 3)),
        ("edwards_sokal q=2 (1,1)", lambda: verify_es(_build_domain(1, 1), 2)),
        ("edwards_sokal q=25 (1,0)", lambda: verify_es(_build_domain(1, 0), 25)),
        ("duality", lambda: verify_duality(None, p25)),
        ("fkg", lambda: verify_fkg()),
        ("euler", lambda: verify_euler_suite()),
        ("decoupling", lambda: verify_decoupling()),
        ("at_identity", lambda: verify_at_identity(p25)),
    ]
    out = []
    for label, fn in jobs:
        t0 = time.time()
        r = fn()
        r.details["instance"] = label
        r.details["seconds"] = round(time.time() - t0, 3)
        out.append(r)
        if log:
            log(f"{'PASS' if r.ok else 'FAIL'} {label}: deviation {r.max_deviation:.2e}, "
                f"controls {'fail as expected' if r.controls_fail else 'DID NOT FAIL'}")
    return out


# ---------------------------------------------------------------- samplers against exact laws


def sampler_agreement(rows, exact: ExactDistribution, thin: int = 10, batches: int = 50,
                      z_max: float = 3.0, p_min: float = 0.01) -> Report:
    """Compare per-sweep chain states with an exact law.

    Single-coordinate marginals get batch-means standard errors (pass if every
    |z| <= ``z_max``); the full histogram of states thinned by ``thin`` sweeps
    gets a chi-square test with bins of expected count < 5 pooled (pass if
    p > ``p_min``).
    """
    from scipy import stats as sps

    rows = np.asarray(rows, dtype=np.int64)
    cfg = np.asarray(exact.configs, dtype=np.int64)
    base = int(max(rows.max(), cfg.max())) + 1
    weights = base ** np.arange(cfg.shape[1], dtype=np.int64)
    lookup = {int(k): i for i, k in _enumerate(cfg @ weights)}
    idx = np.array([lookup.get(int(k), -1) for k in rows @ weights])
    if np.any(idx < 0):
        return _report("sampler", math.inf, z_max, reason="chain visited a state outside the support")
    zs = []
    nb = rows.shape[0] // batches
    for col in range(cfg.shape[1]):
        for val in np.unique(cfg[:, col]):
            exact_p = float(exact.probs[cfg[:, col] == val].sum())
            hits = (rows[: nb * batches, col] == val).reshape(batches, nb).mean(axis=1)
            se = hits.std(ddof=1) / math.sqrt(batches)
            zs.append(abs(hits.mean() - exact_p) / se if se > 0 else (0.0 if hits.mean() == exact_p else math.inf))
    sub = idx[::thin]
    obs = np.bincount(sub, minlength=cfg.shape[0]).astype(float)
    exp = exact.probs * sub.size
    big = exp >= 5
    o = np.r_[obs[big], obs[~big].sum()]
    e = np.r_[exp[big], exp[~big].sum()]
    if e[-1] < 5:
        o, e = np.r_[o[:-2], o[-2:].sum()], np.r_[e[:-2], e[-2:].sum()]
    chi2 = float(((o - e) ** 2 / e).sum())
    pval = float(sps.chi2.sf(chi2, len(e) - 1))
    zmax = float(max(zs))
    return Report("sampler", bool(zmax <= z_max and pval > p_min), zmax, z_max,
                  {"chi2": chi2, "dof": len(e) - 1, "p_value": pval, "samples": int(rows.shape[0]), "thin": thin})


# ---------------------------------------------------------------- empirical coupling routes


def percolation_route_samples(D: LDomain, params: ModelParams, samples: int, seed: int, burnin: int = 200) -> np.ndarray:
    """ATRC states on D's tile edges via FK chain -> oriented loops -> heights -> local tile rule."""
    from .atrc import atrc_from_height
    from .fk_potts import FKChain
    from .sixvertex import loops_of, orient_loops

    win = _window_of(D)
    if D.parity == "even":
        g = FKGraph.from_edges(win.fk_edges, wired_verts=[v for e in win.fk_edges for v in e if v not in D.verts])
    else:
        g = FKGraph.from_edges(win.fk_edges)
    ch = FKChain(g, params.p_c, params.q, seed)
    ch.run(burnin)
    rng = np.random.Generator(np.random.Philox(seed + 1))
    edges = sorted(D.tile_edges)
    inside = [win.index[v] for v in sorted(D.verts)]
    out = np.empty((samples, len(edges)), dtype=np.int8)
    cache: dict = {}
    for s in range(samples):
        ch.run(1)
        key = ch.omega.tobytes()
        if key not in cache:
            cache[key] = loops_of(ch.omega.copy(), win)
        loops = cache[key]
        o = orient_loops(loops, params, rng.random(loops.n_loops))
        h = cluster_heights(o)[loops.label]
        hv = {v: int(h[k]) for v, k in zip(sorted(D.verts), inside)}
        full = _DefaultHeights(hv)
        out[s] = atrc_from_height(full, edges, rng.random(len(edges)), params.c)
    return out


class _DefaultHeights(dict):
    """Heights on D with the exterior values 0 (primal) and 1 (dual)."""

    def __missing__(self, v):
        return 0 if is_primal(v) else 1


def direct_atrc01_samples(D: LDomain, params: ModelParams, samples: int, seed: int, burnin: int = 200) -> np.ndarray:
    from .atrc import ATRCChain

    g = ATRCGraph.from_edges(sorted(D.tile_edges), eta=(0, 1))
    ch = ATRCChain(g, params, seed)
    ch.run(burnin)
    out = np.empty((samples, g.ne), dtype=np.int8)
    for s in range(samples):
        out[s] = ch.run(1)
    return out


def empirical_tv(a, b) -> float:
    """Total variation between the empirical laws of two sets of rows."""
    a, b = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
    w = 3 ** np.arange(a.shape[1], dtype=np.int64)
    ka, kb = a @ w, b @ w
    n = int(max(ka.max(), kb.max())) + 1
    pa = np.bincount(ka, minlength=n) / ka.size
    pb = np.bincount(kb, minlength=n) / kb.size
    return 0.5 * float(np.abs(pa - pb).sum())


def route_goodness_of_fit(rows, law: np.ndarray) -> tuple[float, float]:
    """Pooled chi-square (statistic, p-value) of sampled rows against a dense base-3 law."""
    from scipy import stats as sps

    rows = np.asarray(rows, dtype=np.int64)
    w = 3 ** np.arange(rows.shape[1], dtype=np.int64)
    obs = np.bincount(rows @ w, minlength=law.size).astype(float)
    exp = law * rows.shape[0]
    big = exp >= 5
    o = np.r_[obs[big], obs[~big].sum()]
    e = np.r_[exp[big], exp[~big].sum()]
    keep = e > 0
    o, e = o[keep], e[keep]
    with np.errstate(divide="ignore"):
        chi2 = float(((o - e) ** 2 / e).sum()) if np.all(obs[law == 0] == 0) else math.inf
    return chi2, float(sps.chi2.sf(chi2, len(e) - 1))
