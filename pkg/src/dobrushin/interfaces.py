"""Interfaces forced by the Dobrushin boundary: envelopes, the ATRC interface, rescaling.

Envelopes are integer arrays indexed by the column k = -n..n (array position
k + n). Connectivity is computed on small padded grids around the box, with
the frozen exterior folded into a single root vertex.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _uf
from .lattice import DobrushinDomain, _build_domain, primal

_CROSS = ndimage.generate_binary_structure(2, 1)
_DIAG = ndimage.generate_binary_structure(2, 2)


@dataclass
class InterfacePath:
    values: np.ndarray
    n: int
    model: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        if self.values.shape != (2 * self.n + 1,):
            raise ValueError("an envelope needs one value per column -n..n")

    def __call__(self, k: int) -> int:
        return int(self.values[k + self.n])

    def to_csv_rows(self):
        return [(k, int(v)) for k, v in zip(range(-self.n, self.n + 1), self.values)]


@dataclass
class RescaledPath:
    """Piecewise-linear interpolation of an envelope in diffusive units."""

    values: np.ndarray
    n: int

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        s = 2 * t * self.n - self.n
        lo = np.floor(s)
        frac = s - lo
        hi = np.ceil(s)
        a = self.values[(lo + self.n).astype(np.int64)]
        b = self.values[(hi + self.n).astype(np.int64)]
        return ((1 - frac) * a + frac * b) / math.sqrt(self.n)

    def on_grid(self, grid) -> np.ndarray:
        return self(np.asarray(grid, dtype=float))


def rescale(gamma: InterfacePath | np.ndarray, n: int | None = None) -> RescaledPath:
    if isinstance(gamma, InterfacePath):
        return RescaledPath(gamma.values.astype(float), gamma.n)
    vals = np.asarray(gamma, dtype=float)
    n = (len(vals) - 1) // 2 if n is None else n
    return RescaledPath(vals, n)


def envelope_gap(upper, lower) -> int:
    u = upper.values if isinstance(upper, InterfacePath) else np.asarray(upper)
    w = lower.values if isinstance(lower, InterfacePath) else np.asarray(lower)
    if u.shape != w.shape:
        raise ValueError("envelopes belong to different column ranges")
    return int(np.max(np.abs(u - w))) if u.size else 0


# ---------------------------------------------------------------- Potts


def extend_potts(sigma_grid: np.ndarray, n: int, m: int) -> np.ndarray:
    """Pad a (2n+1, 2m+1) colour grid (axis 0 = x) with the 1/free exterior: 1 above, 0 below."""
    ext = np.zeros((2 * n + 3, 2 * m + 3), dtype=np.int64)
    ys = np.arange(-m - 1, m + 2)
    ext[:, ys >= 0] = 1
    ext[1:-1, 1:-1] = sigma_grid
    return ext


def potts_grid(sigma, verts, n: int, m: int) -> np.ndarray:
    """Arrange colours given on doubled-coordinate vertices into a (2n+1, 2m+1) grid."""
    g = np.zeros((2 * n + 1, 2 * m + 1), dtype=np.int64)
    for s, (X, Y) in zip(np.asarray(sigma), verts):
        g[X // 2 + n, Y // 2 + m] = s
    return g


def potts_envelopes(sigma_grid: np.ndarray, n: int, m: int | None = None):
    """(upper, lower) envelopes of a Potts configuration on the box under 1/free conditions.

    The upper envelope uses nearest-neighbour connectivity of sites not coloured
    1 to the lower exterior; the lower envelope uses connectivity with diagonal
    steps of sites coloured 1 to the upper exterior.
    """
    m = n if m is None else m
    ext = extend_potts(sigma_grid, n, m)
    ys = np.arange(-m - 1, m + 2)
    frame = np.ones_like(ext, dtype=bool)
    frame[1:-1, 1:-1] = False

    lab, _ = ndimage.label(ext != 1, structure=_CROSS)
    roots = np.unique(lab[frame & (ys[None, :] < 0) & (ext != 1)])
    low = np.isin(lab, roots[roots > 0])
    lab1, _ = ndimage.label(ext == 1, structure=_DIAG)
    roots1 = np.unique(lab1[frame & (ys[None, :] >= 0)])
    up = np.isin(lab1, roots1[roots1 > 0])

    cols = slice(1, 2 * n + 2)
    upper = np.array([ys[np.flatnonzero(c)].max() + 1 for c in low[cols]], dtype=np.int64)
    lower = np.array([ys[np.flatnonzero(c)].min() - 1 for c in up[cols]], dtype=np.int64)
    return InterfacePath(upper, n, "potts+"), InterfacePath(lower, n, "potts-")


# ---------------------------------------------------------------- FK


@dataclass
class _FKEnvelopeGeometry:
    n: int
    m: int
    nx: int
    ny: int
    dual_ends: np.ndarray
    dual_src: np.ndarray
    dual_fixed: np.ndarray
    root: np.ndarray
    lam_cols: np.ndarray
    vcol: np.ndarray
    vrow: np.ndarray


@lru_cache(maxsize=16)
def _fk_geometry(n: int, m: int) -> _FKEnvelopeGeometry:
    dom = _build_domain(n, m)
    xs = np.arange(-n - 2, n + 2)
    ys = np.arange(-m - 2, m + 2)
    nx, ny = len(xs), len(ys)

    def idx(a, b):
        return a * ny + b

    ends, src, fixed = [], [], []
    for a in range(nx):
        for b in range(ny):
            x, y = xs[a], ys[b]
            # dual vertex (x+1/2, y+1/2); right and upper neighbours
            if a + 1 < nx:
                pe = ((2 * x + 2, 2 * y), (2 * x + 2, 2 * y + 2))
                ends.append((idx(a, b), idx(a + 1, b)))
                src.append(dom.eindex.get(pe, -1))
                fixed.append(pe[0][1] >= 0)
            if b + 1 < ny:
                pe = ((2 * x, 2 * y + 2), (2 * x + 2, 2 * y + 2))
                ends.append((idx(a, b), idx(a, b + 1)))
                src.append(dom.eindex.get(pe, -1))
                fixed.append(pe[0][1] >= 0)
    X = xs[:, None] + 0.5
    Y = ys[None, :] + 0.5
    outside = (np.abs(X) > n) | (np.abs(Y) > m)
    root = ((Y < 0) & outside).ravel()
    vcol = np.array([v[0] // 2 + n for v in dom.V], dtype=np.int64)
    vrow = np.array([v[1] // 2 for v in dom.V], dtype=np.int64)
    return _FKEnvelopeGeometry(
        n, m, nx, ny, np.array(ends, dtype=np.int64), np.array(src, dtype=np.int64),
        np.array(fixed, dtype=bool), root, xs, vcol, vrow,
    )


def fk_envelopes(dom: DobrushinDomain, omega):
    """(upper, lower) envelopes of an FK configuration under 1/0 conditions.

    The lower envelope sits just below the lowest point of each column joined to
    the wired upper exterior; the upper envelope sits just above the highest
    dual vertex of the two adjacent dual columns joined to the free lower exterior.
    """
    n, m = dom.n, dom.m
    omega = np.asarray(omega, dtype=np.bool_)
    geo = _fk_geometry(n, m)

    primal_open = np.where(geo.dual_src >= 0, omega[np.maximum(geo.dual_src, 0)], geo.dual_fixed)
    de = geo.dual_ends[~primal_open]
    N = geo.nx * geo.ny
    rootnode = N
    rv = np.flatnonzero(geo.root)
    rows = np.concatenate([de[:, 0], rv])
    cols = np.concatenate([de[:, 1], np.full(rv.size, rootnode)])
    adj = coo_matrix((np.ones(rows.size), (rows, cols)), shape=(N + 1, N + 1))
    _, lab = connected_components(adj, directed=False)
    inF = (lab[:N] == lab[rootnode]).reshape(geo.nx, geo.ny)
    ys = np.arange(-m - 2, m + 2)
    upper = np.empty(2 * n + 1, dtype=np.int64)
    for k in range(-n, n + 1):
        a = k - 1 + n + 2  # dual column x = k - 1, i.e. abscissa k - 1/2
        both = inF[a] | inF[a + 1]
        upper[k + n] = ys[np.flatnonzero(both)].max() + 1

    ends, wired = dom.fk_arrays()
    lab2 = _uf.components(len(dom.V), ends, omega, wired)
    inW = lab2[: len(dom.V)] == lab2[len(dom.V)]
    lowest = np.full(2 * n + 1, m + 1, dtype=np.int64)
    sel = inW & (geo.vcol >= 0) & (geo.vcol <= 2 * n)
    np.minimum.at(lowest, geo.vcol[sel], geo.vrow[sel])
    lower = lowest - 1
    return InterfacePath(upper, n, "fk+"), InterfacePath(lower, n, "fk-")


# ---------------------------------------------------------------- ATRC


@dataclass
class ATRCInterface:
    cluster: set
    polygon: set
    upper: np.ndarray
    lower: np.ndarray
    columns: np.ndarray


def atrc_interface(dom: DobrushinDomain, tau_open) -> ATRCInterface:
    """Cluster of v_L in the first layer, its hole-filled hull and column envelopes.

    ``tau_open`` is the first-layer configuration on the augmented edge set.
    Raises ValueError if v_L and v_R are not joined.
    """
    tau_open = np.asarray(tau_open, dtype=np.bool_)
    ends, _ = dom.k_arrays()
    nv = len(dom.V_bar)
    lab = _uf.components(nv, ends, tau_open, np.zeros(nv, dtype=np.bool_))
    a, b = dom.kindex[dom.vL], dom.kindex[dom.vR]
    if lab[a] != lab[b]:
        raise ValueError("v_L and v_R are not connected in the first layer")
    C = {dom.V_bar[k] for k in range(nv) if lab[k] == lab[a]}
    xs = [v[0] // 2 for v in C]
    ys = [v[1] // 2 for v in C]
    x0, y0 = min(xs) - 1, min(ys) - 1
    grid = np.zeros((max(xs) - x0 + 2, max(ys) - y0 + 2), dtype=bool)
    for x, y in zip(xs, ys):
        grid[x - x0, y - y0] = True
    filled = ndimage.binary_fill_holes(grid, structure=_CROSS)
    P = {primal(int(i) + x0, int(j) + y0) for i, j in zip(*np.nonzero(filled))}
    cols = np.arange(dom.vL[0] // 2, dom.vR[0] // 2 + 1)
    up = np.full(len(cols), np.iinfo(np.int64).min, dtype=np.int64)
    lo = np.full(len(cols), np.iinfo(np.int64).max, dtype=np.int64)
    for X, Y in P:
        c = X // 2 - cols[0]
        if 0 <= c < len(cols):
            up[c] = max(up[c], Y // 2)
            lo[c] = min(lo[c], Y // 2)
    return ATRCInterface(C, P, up, lo, cols)
