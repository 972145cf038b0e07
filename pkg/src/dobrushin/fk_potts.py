"""FK percolation and Potts model: weights, heat-bath dynamics, Edwards-Sokal colouring.

An :class:`FKGraph` is a finite edge set with its vertex set; vertices marked
``wired`` touch frozen open edges and are joined through the exterior. The
three boundary conditions used here are free, wired and the Dobrushin 1/0
condition (open above the horizontal axis, closed below).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import _uf
from .lattice import (
    DobrushinDomain,
    Vertex,
    box,
    boundary_sets,
    build_domain,
    induced_edges,
    neighbours,
)

BCS = ("free", "wired", "10", "1f")


@dataclass
class FKGraph:
    verts: list
    ends: np.ndarray
    wired: np.ndarray
    edges: list = field(default_factory=list)
    bc: str = "free"
    ptr: np.ndarray = field(init=False, repr=False)
    inc: np.ndarray = field(init=False, repr=False)
    nbr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.ends = np.ascontiguousarray(self.ends, dtype=np.int64).reshape(-1, 2)
        self.wired = np.ascontiguousarray(self.wired, dtype=np.bool_)
        self.ptr, self.inc, self.nbr = _uf.csr(len(self.verts), self.ends)

    @property
    def nv(self) -> int:
        return len(self.verts)

    @property
    def ne(self) -> int:
        return self.ends.shape[0]

    @classmethod
    def from_edges(cls, edges, wired_verts=(), verts=None, bc="free"):
        edges = sorted(edges)
        if verts is None:
            verts = sorted({x for e in edges for x in e})
        vidx = {v: k for k, v in enumerate(verts)}
        ends = np.array([[vidx[a], vidx[b]] for a, b in edges], dtype=np.int64).reshape(-1, 2)
        wset = set(wired_verts)
        wired = np.array([v in wset for v in verts], dtype=np.bool_)
        return cls(verts, ends, wired, edges, bc)

    @classmethod
    def box(cls, n: int, m: int | None = None, bc: str = "free"):
        """FK graph of the box {-n..n} x {-m..m} under free, wired or 1/0 conditions."""
        m = n if m is None else m
        if bc == "free":
            lam = box(n, m)
            return cls.from_edges(induced_edges(lam), verts=sorted(lam), bc=bc)
        if bc == "wired":
            lam = box(n, m)
            inner, _, _ = boundary_sets(lam, "vertex")
            return cls.from_edges(induced_edges(lam), inner, verts=sorted(lam), bc=bc)
        if bc in ("10", "1f"):
            return cls.dobrushin(build_domain(n, m))
        raise ValueError(f"unknown boundary condition {bc!r}")

    @classmethod
    def dobrushin(cls, dom: DobrushinDomain):
        ends, wired = dom.fk_arrays()
        return cls(list(dom.V), ends, wired, list(dom.E), "10")

    def vindex(self) -> dict:
        return {v: k for k, v in enumerate(self.verts)}


def cluster_count(g: FKGraph, omega) -> int:
    """Clusters of the open edges (plus frozen exterior) meeting the vertex set."""
    return int(_uf.count_clusters(g.nv, g.ends, np.asarray(omega, dtype=np.bool_), g.wired))


def fk_log_weight(g: FKGraph, omega, p: float, q: float) -> float:
    omega = np.asarray(omega, dtype=np.bool_)
    k = int(omega.sum())
    return k * math.log(p) + (g.ne - k) * math.log1p(-p) + cluster_count(g, omega) * math.log(q)


def _scratch(g: FKGraph):
    return (
        np.zeros(g.nv, dtype=np.int64),
        np.zeros(g.nv, dtype=np.int64),
        np.zeros(g.nv, dtype=np.int64),
        np.zeros(g.nv, dtype=np.int64),
    )


def p_open_given(connected: bool, p: float, q: float) -> float:
    return p if connected else p / (p + q * (1 - p))


def heat_bath_step(g: FKGraph, omega, e: int, p: float, q: float, u: float) -> np.ndarray:
    """Resample edge ``e`` from its conditional law given the rest; returns a new array."""
    if not 0 <= e < g.ne:
        raise IndexError(f"edge {e} is frozen or outside the graph")
    omega = np.array(omega, dtype=np.bool_)
    mA, mB, qA, qB = _scratch(g)
    a, b = g.ends[e]
    conn = _uf.connected_without(a, b, e, omega, g.wired, g.ptr, g.inc, g.nbr, mA, mB, 1, qA, qB)
    omega[e] = u < p_open_given(conn, p, q)
    return omega


def plaquette_paths(g: FKGraph) -> np.ndarray:
    """For each edge, the (up to two) three-edge detours around its adjacent faces."""
    vidx = g.vindex()
    eidx = {(int(a), int(b)): k for k, (a, b) in enumerate(g.ends)}
    eidx.update({(b, a): k for (a, b), k in list(eidx.items())})
    out = -np.ones((g.ne, 2, 3), dtype=np.int64)
    for k, (a, b) in enumerate(g.ends):
        va, vb = g.verts[a], g.verts[b]
        dx, dy = vb[0] - va[0], vb[1] - va[1]
        for s, (ox, oy) in enumerate(((-dy, dx), (dy, -dx))):
            a2 = vidx.get((va[0] + ox, va[1] + oy))
            b2 = vidx.get((vb[0] + ox, vb[1] + oy))
            if a2 is None or b2 is None:
                continue
            path = (eidx.get((a, a2)), eidx.get((a2, b2)), eidx.get((b2, b)))
            if None not in path:
                out[k, s] = path
    return out


@njit(cache=True)
def _local_connected(k, omega, alt):
    for s in range(2):
        if alt[k, s, 0] >= 0 and omega[alt[k, s, 0]] and omega[alt[k, s, 1]] and omega[alt[k, s, 2]]:
            return True
    return False


@njit(cache=True)
def _sweeps(ends, omega, wired, ptr, inc, nbr, alt, p_conn, p_disc, order, uniforms, mA, mB, qA, qB, stamp0):
    stamp = stamp0
    nsweep, ne = uniforms.shape
    for s in range(nsweep):
        for r in range(ne):
            k = order[s % order.shape[0], r]
            u = uniforms[s, r]
            if u < p_disc:
                omega[k] = True
                continue
            if u >= p_conn:
                omega[k] = False
                continue
            if _local_connected(k, omega, alt):
                omega[k] = True
                continue
            stamp += 1
            omega[k] = _uf.connected_without(
                ends[k, 0], ends[k, 1], k, omega, wired, ptr, inc, nbr, mA, mB, stamp, qA, qB
            )
    return stamp


class FKChain:
    """Single-edge heat-bath chain with a deterministic Philox stream."""

    def __init__(self, g: FKGraph, p: float, q: float, seed: int, omega0=None, randomized: bool = False):
        self.g, self.p, self.q, self.seed = g, p, q, seed
        self.rng = np.random.Generator(np.random.Philox(seed))
        if omega0 is None:
            omega0 = np.full(g.ne, g.bc == "wired", dtype=np.bool_)
        self.omega = np.array(omega0, dtype=np.bool_)
        self.randomized = randomized
        self.sweeps_done = 0
        self._scr = _scratch(g)
        self._alt = plaquette_paths(g)
        self._scan = np.arange(g.ne, dtype=np.int64).reshape(1, -1)
        self._stamp = 0

    def run(self, sweeps: int, block: int = 64):
        g = self.g
        p_conn = self.p
        p_disc = p_open_given(False, self.p, self.q)
        done = 0
        while done < sweeps:
            k = min(block, sweeps - done)
            u = self.rng.random((k, g.ne))
            if self.randomized:
                order = self.rng.integers(0, g.ne, size=(k, g.ne))
            else:
                order = self._scan
            self._stamp = _sweeps(
                g.ends, self.omega, g.wired, g.ptr, g.inc, g.nbr, self._alt, p_conn, p_disc, order, u,
                *self._scr[:2], *self._scr[2:], self._stamp,
            )
            done += k
        self.sweeps_done += sweeps
        return self.omega


def sample_fk(g: FKGraph, p: float, q: float, sweeps: int, seed: int, omega0=None) -> np.ndarray:
    """Run ``sweeps`` lexicographic heat-bath sweeps from the monotone start."""
    if sweeps < 0:
        raise ValueError("sweeps must be nonnegative")
    ch = FKChain(g, p, q, seed, omega0)
    return ch.run(sweeps).copy()


# ---------------------------------------------------------------- Potts


@dataclass
class PottsGraph:
    """Potts model on a vertex set with a boundary field towards colour 1.

    ``field1[i]`` counts the exterior neighbours of ``i`` carrying colour 1;
    free exterior neighbours contribute nothing.
    """

    verts: list
    ends: np.ndarray
    field1: np.ndarray

    @classmethod
    def box(cls, n: int, m: int | None = None, bc: str = "1f"):
        m = n if m is None else m
        lam = sorted(box(n, m))
        idx = {v: k for k, v in enumerate(lam)}
        ends = np.array([[idx[a], idx[b]] for a, b in sorted(induced_edges(lam))], dtype=np.int64)
        lamset = set(lam)
        f = np.zeros(len(lam), dtype=np.int64)
        for v in lam:
            for w in neighbours(v):
                if w not in lamset and (bc == "wired" or (bc in ("1f", "10") and w[1] >= 0)):
                    f[idx[v]] += 1
        return cls(lam, ends, f)

    @property
    def nv(self) -> int:
        return len(self.verts)


def potts_log_weight(g: PottsGraph, sigma, T: float) -> float:
    sigma = np.asarray(sigma)
    same = (sigma[g.ends[:, 0]] == sigma[g.ends[:, 1]]).sum()
    return (float(same) + float(g.field1[sigma == 1].sum())) / T


def _nbr_lists(g: PottsGraph):
    nb = [[] for _ in range(g.nv)]
    for a, b in g.ends:
        nb[a].append(b)
        nb[b].append(a)
    return nb


def glauber_probs(g: PottsGraph, sigma, i: int, T: float, q: int) -> np.ndarray:
    counts = np.zeros(q)
    for j in _nbr_lists(g)[i]:
        counts[sigma[j] - 1] += 1
    counts[0] += g.field1[i]
    w = np.exp((counts - counts.max()) / T)
    return w / w.sum()


def potts_glauber_step(g: PottsGraph, sigma, i: int, T: float, u: float, q: int) -> np.ndarray:
    """Heat-bath update of site ``i``; colours are 1..q."""
    pr = glauber_probs(g, sigma, i, T, q)
    out = np.array(sigma)
    out[i] = min(int(np.searchsorted(np.cumsum(pr), u, side="right")), q - 1) + 1
    return out


def edwards_sokal_color(g: FKGraph, omega, q, seed: int, potts_verts=None) -> np.ndarray:
    """Colour FK clusters: exterior-touching clusters get 1, others uniform in 1..q.

    Returns colours for ``potts_verts`` (default: the non-wired vertices of g).
    """
    if int(q) != q:
        raise ValueError("Edwards-Sokal colouring needs an integer q")
    q = int(q)
    rng = np.random.Generator(np.random.Philox(seed))
    lab = _uf.components(g.nv, g.ends, np.asarray(omega, dtype=np.bool_), g.wired)
    ghost = lab[g.nv]
    roots = np.unique(lab[: g.nv])
    colours = dict(zip(roots.tolist(), (rng.integers(0, q, size=len(roots)) + 1).tolist()))
    colours[int(ghost)] = 1
    if potts_verts is None:
        potts_verts = [v for k, v in enumerate(g.verts) if not g.wired[k]]
    vidx = g.vindex()
    return np.array([colours[int(lab[vidx[v]])] for v in potts_verts], dtype=np.int64)


def config_header(g: FKGraph, seed: int, sweeps: int) -> dict:
    return {"bc": g.bc, "nv": g.nv, "ne": g.ne, "seed": seed, "sweeps": sweeps}


def encode_config(omega, header: dict) -> str:
    """Run-length encoding of a bit configuration with a JSON header line."""
    bits = np.asarray(omega, dtype=np.int8)
    runs = []
    if bits.size:
        change = np.flatnonzero(np.diff(bits)) + 1
        starts = np.concatenate([[0], change])
        lens = np.diff(np.concatenate([starts, [bits.size]]))
        runs = lens.tolist()
        first = int(bits[0])
    else:
        first = 0
    return json.dumps(header, sort_keys=True) + "\n" + json.dumps({"first": first, "runs": runs})


def decode_config(text: str):
    head, body = text.split("\n", 1)
    d = json.loads(body)
    bit, out = d["first"], []
    for r in d["runs"]:
        out.extend([bit] * r)
        bit ^= 1
    return json.loads(head), np.array(out, dtype=np.bool_)


@njit(cache=True)
def _potts_sweeps(sigma, ptr, nbr, field1, beta, q, order, uniforms):
    w = np.empty(q)
    for s in range(order.shape[0]):
        for t in range(order.shape[1]):
            i = order[s, t]
            for a in range(q):
                w[a] = 0.0
            for k in range(ptr[i], ptr[i + 1]):
                w[sigma[nbr[k]] - 1] += 1.0
            w[0] += field1[i]
            top = w.max()
            tot = 0.0
            for a in range(q):
                w[a] = math.exp(beta * (w[a] - top))
                tot += w[a]
            u = uniforms[s, t] * tot
            acc = 0.0
            new = q
            for a in range(q):
                acc += w[a]
                if u < acc:
                    new = a + 1
                    break
            sigma[i] = new


class PottsChain:
    """Single-site heat-bath (Glauber) chain at temperature T with a Philox stream."""

    def __init__(self, g: PottsGraph, T: float, q: int, seed: int, sigma0=None, randomized: bool = False):
        self.g, self.T, self.q = g, T, int(q)
        self.rng = np.random.Generator(np.random.Philox(seed))
        self.sigma = np.ones(g.nv, dtype=np.int64) if sigma0 is None else np.array(sigma0, dtype=np.int64)
        self.ptr, _, self.nbr = _uf.csr(g.nv, g.ends)
        self.randomized = randomized
        self.sweeps_done = 0
        self._scan = np.arange(g.nv, dtype=np.int64).reshape(1, -1)

    def run(self, sweeps: int, block: int = 256) -> np.ndarray:
        n = self.g.nv
        done = 0
        while done < sweeps:
            k = min(block, sweeps - done)
            u = self.rng.random((k, n))
            order = self.rng.integers(0, n, size=(k, n)) if self.randomized else np.repeat(self._scan, k, axis=0)
            _potts_sweeps(self.sigma, self.ptr, self.nbr, self.g.field1.astype(np.float64), 1.0 / self.T, self.q, order, u)
            done += k
        self.sweeps_done += sweeps
        return self.sigma
