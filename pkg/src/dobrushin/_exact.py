"""Compiled kernels behind the exact enumerations of :mod:`dobrushin.oracle`.

Weights are accumulated as exp(log w - shift) with Neumaier compensation, the
shift being an upper bound on the log-weights of the enumeration.
"""
import numpy as np
from numba import njit

from ._uf import find, union


@njit(cache=True)
def neumaier_add(s, comp, k, x):
    t = s[k] + x
    if abs(s[k]) >= abs(x):
        comp[k] += (s[k] - t) + x
    else:
        comp[k] += (x - t) + s[k]
    s[k] = t


@njit(cache=True)
def _neumaier(x):
    s = 0.0
    comp = 0.0
    for k in range(x.size):
        t = s + x[k]
        if abs(s) >= abs(x[k]):
            comp += (s - t) + x[k]
        else:
            comp += (x[k] - t) + s
        s = t
    return s + comp


def neumaier_sum(values) -> float:
    return float(_neumaier(np.ascontiguousarray(values, dtype=np.float64).ravel()))


def log_normalize(logw):
    """Probabilities and log partition function from log-weights (compensated)."""
    logw = np.asarray(logw, dtype=float)
    m = logw[np.isfinite(logw)].max()
    w = np.exp(logw - m)
    z = neumaier_sum(w)
    return w / z, m + np.log(z)


def mixed_radix(codes, radices):
    """Rows of digits (least significant first) for integer codes."""
    codes = np.asarray(codes, dtype=np.int64)
    out = np.empty((codes.size, len(radices)), dtype=np.int8)
    rest = codes.copy()
    for k, r in enumerate(radices):
        out[:, k] = rest % r
        rest //= r
    return out


def product_states(allowed):
    """All state rows whose k-th entry ranges over ``allowed[k]``."""
    radices = [len(a) for a in allowed]
    total = int(np.prod(radices, dtype=np.int64)) if radices else 1
    digits = mixed_radix(np.arange(total), radices)
    out = np.empty_like(digits)
    for k, a in enumerate(allowed):
        out[:, k] = np.asarray(a, dtype=np.int8)[digits[:, k]]
    return out


# ---------------------------------------------------------------- ATRC / mATRC rows


@njit(cache=True)
def _count(nv, ends, row, level, wired):
    parent = np.arange(nv + 1)
    n = nv
    anyw = False
    for v in range(nv):
        if wired[v]:
            anyw = True
            if union(parent, v, nv):
                n -= 1
    if anyw:
        n += 1
    for k in range(ends.shape[0]):
        if row[k] >= level:
            if union(parent, ends[k, 0], ends[k, 1]):
                n -= 1
    return n


@njit(cache=True)
def atrc_logw_rows(states, ends, nv, wired_t, wired_tt, lf, modified, cb, in_lam, bminus):
    """Log-weights of ATRC (or, if ``modified``, mATRC) configurations given as rows."""
    N = states.shape[0]
    ne = ends.shape[0]
    out = np.empty(N)
    lab = np.empty(nv + 1, dtype=np.int64)
    meets = np.zeros(nv + 1, dtype=np.bool_)
    sub = np.zeros(nv + 1, dtype=np.bool_)
    I = np.zeros(nv + 1, dtype=np.int64)
    ln2 = np.log(2.0)
    for r in range(N):
        row = states[r]
        w = 0.0
        for e in range(ne):
            w += lf[e, row[e]]
        if w == -np.inf:
            out[r] = w
            continue
        w += _count(nv, ends, row, 2, wired_t) * ln2
        if not modified:
            w += _count(nv, ends, row, 1, wired_tt) * ln2
        else:
            parent = np.arange(nv + 1)
            for k in range(ne):
                if row[k] >= 1:
                    union(parent, ends[k, 0], ends[k, 1])
            for v in range(nv):
                lab[v] = find(parent, v)
                meets[v] = False
                sub[v] = True
                I[v] = 0
            for v in range(nv):
                x = lab[v]
                if in_lam[v]:
                    meets[x] = True
                else:
                    sub[x] = False
                I[x] += bminus[v]
            for v in range(nv):
                if lab[v] == v and meets[v]:
                    w += np.log((1.0 if sub[v] else 0.0) + cb ** I[v])
        out[r] = w
    return out


@njit(cache=True)
def connected_rows(states, ends, nv, wired, level, a, b):
    """Whether vertices a and b (b = nv for the exterior) are joined by edges of state >= level."""
    N = states.shape[0]
    out = np.empty(N, dtype=np.bool_)
    for r in range(N):
        parent = np.arange(nv + 1)
        for v in range(nv):
            if wired[v]:
                union(parent, v, nv)
        for k in range(ends.shape[0]):
            if states[r, k] >= level:
                union(parent, ends[k, 0], ends[k, 1])
        out[r] = find(parent, a) == find(parent, b)
    return out


# ---------------------------------------------------------------- FK and loops


@njit(cache=True)
def _corner_clusters(code, corners, src, fixed, N, root, par):
    """Union-find of the window corners for FK code ``code``; F anchor N, W ghost N + 1."""
    for x in range(N + 2):
        par[x] = x
    for v in range(N):
        if root[v] == 0:
            union(par, v, N + 1)
        elif root[v] == 1:
            union(par, v, N)
    for t in range(corners.shape[0]):
        st = fixed[t] if src[t] < 0 else ((code >> src[t]) & 1) == 1
        if st:
            union(par, corners[t, 0], corners[t, 1])
        else:
            union(par, corners[t, 2], corners[t, 3])


@njit(cache=True)
def fk_loop_table(ne, fk_ends, nvfk, fk_wired, corners, src, fixed, N, root, inside):
    """Per FK code: open edges, FK clusters (ghost included) and free loops."""
    M = 1 << ne
    opened = np.empty(M, dtype=np.int64)
    kfk = np.empty(M, dtype=np.int64)
    loops = np.empty(M, dtype=np.int64)
    par = np.empty(N + 2, dtype=np.int64)
    mask = np.empty(ne, dtype=np.bool_)
    seen = np.zeros(N + 2, dtype=np.bool_)
    for code in range(M):
        o = 0
        for e in range(ne):
            mask[e] = ((code >> e) & 1) == 1
            o += mask[e]
        opened[code] = o
        p2 = np.arange(nvfk + 1)
        n = nvfk
        anyw = False
        for v in range(nvfk):
            if fk_wired[v]:
                anyw = True
                if union(p2, v, nvfk):
                    n -= 1
        if anyw:
            n += 1
        for e in range(ne):
            if mask[e]:
                if union(p2, fk_ends[e, 0], fk_ends[e, 1]):
                    n -= 1
        kfk[code] = n
        _corner_clusters(code, corners, src, fixed, N, root, par)
        for x in range(N + 2):
            seen[x] = False
        # roots and forced (exterior, non-root) corners are excluded
        for x in (N, N + 1):
            seen[find(par, x)] = True
        for v in range(N):
            if not inside[v]:
                seen[find(par, v)] = True
        L = 0
        for v in range(N):
            r = find(par, v)
            if not seen[r]:
                seen[r] = True
                L += 1
        loops[code] = L
    return opened, kfk, loops


@njit(cache=True)
def bkw_pushforward(ne, fk_logw, corners, src, fixed, N, root, inside, hw, hf, step, lpf, lpu, dbit, nD, shift):
    """Law of the spin code of D obtained by orienting the loops of every FK configuration.

    Bit k of the code is 1 when node ``dbit == k`` carries spin -1; heights
    are 0 or 1 mod 4 for spin +1 on primal or dual nodes respectively.
    """
    S = np.zeros(1 << nD)
    C = np.zeros(1 << nD)
    par = np.empty(N + 2, dtype=np.int64)
    cid = np.empty(N + 2, dtype=np.int64)
    adj = np.zeros((N + 2, N + 2), dtype=np.bool_)
    parent = np.empty(N + 2, dtype=np.int64)
    order = np.empty(N + 2, dtype=np.int64)
    kind = np.empty(N + 2, dtype=np.int64)  # 0 W, 1 F, 2 forced, 3 free
    fidx = np.empty(N + 2, dtype=np.int64)
    h = np.empty(N + 2, dtype=np.int64)
    lab = np.empty(N, dtype=np.int64)
    for code in range(1 << ne):
        lw0 = fk_logw[code]
        if lw0 == -np.inf:
            continue
        _corner_clusters(code, corners, src, fixed, N, root, par)
        for x in range(N + 2):
            cid[x] = -1
        K = 0
        for x in range(N + 2):
            r = find(par, x)
            if cid[r] < 0:
                cid[r] = K
                kind[K] = 3
                K += 1
        for v in range(N):
            lab[v] = cid[find(par, v)]
            if not inside[v] and root[v] < 0:
                kind[lab[v]] = 2
        wcl = cid[find(par, N + 1)]
        fcl = cid[find(par, N)]
        kind[wcl] = 0
        if fcl != wcl:
            kind[fcl] = 1
        for a in range(K):
            for b in range(K):
                adj[a, b] = False
        for t in range(corners.shape[0]):
            for pr in range(4):
                a = lab[corners[t, pr % 2]]
                b = lab[corners[t, 2 + pr // 2]]
                if a != b:
                    adj[a, b] = True
                    adj[b, a] = True
        # breadth-first from W; the F cluster (when separate) is itself a root
        for a in range(K):
            parent[a] = -2
        head, tail = 0, 0
        start = wcl
        hasw = False
        for v in range(N):
            if root[v] == 0:
                hasw = True
        if not hasw:
            start = fcl
        order[tail] = start
        parent[start] = -1
        tail += 1
        while head < tail:
            a = order[head]
            head += 1
            for b in range(K):
                if adj[a, b] and parent[b] == -2:
                    parent[b] = a
                    order[tail] = b
                    tail += 1
        L = 0
        for a in range(K):
            if kind[a] == 3 and parent[a] != -2:
                fidx[a] = L
                L += 1
        for mask in range(1 << L):
            nfav = 0
            for k in range(tail):
                a = order[k]
                if kind[a] == 0:
                    h[a] = hw
                elif kind[a] == 1:
                    h[a] = hf
                elif kind[a] == 2:
                    h[a] = h[parent[a]] + step
                else:
                    if (mask >> fidx[a]) & 1:
                        h[a] = h[parent[a]] + step
                        nfav += 1
                    else:
                        h[a] = h[parent[a]] - step
            spin = 0
            for v in range(N):
                if dbit[v] >= 0:
                    hv = h[lab[v]] % 4
                    if hv != 0 and hv != 1:
                        spin |= 1 << dbit[v]
            x = lw0 + nfav * lpf + (L - nfav) * lpu - shift
            neumaier_add(S, C, spin, np.exp(x))
    return S + C


# ---------------------------------------------------------------- six-vertex spins


@njit(cache=True)
def spin_table(nD, dbit, base, corners, boundary, lc, lcb):
    """Spin codes of D obeying the ice rule on every tile, their node spins and log-weights."""
    N = base.shape[0]
    M = 1 << nD
    keep = np.zeros(M, dtype=np.bool_)
    logw = np.full(M, -np.inf)
    sig = np.empty(N, dtype=np.int8)
    for code in range(M):
        for v in range(N):
            sig[v] = base[v] if dbit[v] < 0 else (1 - 2 * ((code >> dbit[v]) & 1))
        w = 0.0
        ok = True
        for t in range(corners.shape[0]):
            si, sj, su, sv = sig[corners[t, 0]], sig[corners[t, 1]], sig[corners[t, 2]], sig[corners[t, 3]]
            if si != sj and su != sv:
                ok = False
                break
            # types 5 and 6: both pairs agree and the primal and dual spins alternate the height
            if si == sj and su == sv:
                w += lcb if boundary[t] else lc
        if ok:
            keep[code] = True
            logw[code] = w
    return keep, logw


@njit(cache=True)
def spin_rows(codes, dbit, base):
    out = np.empty((codes.shape[0], base.shape[0]), dtype=np.int8)
    for r in range(codes.shape[0]):
        for v in range(base.shape[0]):
            out[r, v] = base[v] if dbit[v] < 0 else (1 - 2 * ((codes[r] >> dbit[v]) & 1))
    return out


@njit(cache=True)
def matrc_pushforward(xs, spins, slogw, tiles, isb, c_in, c_bd):
    """P(x) for mATRC rows ``xs`` under spins weighted by ``slogw`` and the tile rules."""
    X = xs.shape[0]
    out = np.zeros(X)
    shift = slogw.max()
    for r in range(X):
        s = 0.0
        comp = 0.0
        for k in range(spins.shape[0]):
            p = np.exp(slogw[k] - shift)
            for t in range(tiles.shape[0]):
                sg = spins[k]
                sd = sg[tiles[t, 2]] != sg[tiles[t, 3]]
                sp = sg[tiles[t, 0]] != sg[tiles[t, 1]]
                x = xs[r, t]
                if sd:
                    f = 1.0 if x == 2 else 0.0
                elif sp:
                    f = 1.0 if x == 0 else 0.0
                elif isb[t]:
                    f = 1.0 / c_bd if x == 2 else (1.0 - 1.0 / c_bd if x == 0 else 0.0)
                else:
                    f = 1.0 / c_in if x != 1 else 1.0 - 2.0 / c_in
                p *= f
                if p == 0.0:
                    break
            t2 = s + p
            if abs(s) >= abs(p):
                comp += (s - t2) + p
            else:
                comp += (p - t2) + s
            s = t2
        out[r] = s + comp
    return out


@njit(cache=True)
def fk_stats(ne, ends, nv, wired):
    """Open-edge and cluster counts (ghost included) for every FK code."""
    M = 1 << ne
    opened = np.empty(M, dtype=np.int64)
    k = np.empty(M, dtype=np.int64)
    for code in range(M):
        parent = np.arange(nv + 1)
        n = nv
        anyw = False
        for v in range(nv):
            if wired[v]:
                anyw = True
                if union(parent, v, nv):
                    n -= 1
        if anyw:
            n += 1
        o = 0
        for e in range(ne):
            if (code >> e) & 1:
                o += 1
                if union(parent, ends[e, 0], ends[e, 1]):
                    n -= 1
        opened[code] = o
        k[code] = n
    return opened, k


@njit(cache=True)
def es_pushforward(ne, ends, nv, wired, fk_logw, pidx, npotts, q, exterior_colour, shift):
    """Law of the Potts colouring obtained by colouring FK clusters (Edwards-Sokal).

    Clusters joined to the exterior take ``exterior_colour``; the others are
    uniform among 0..q-1. ``pidx[v]`` is the Potts position of vertex v (-1 if frozen).
    """
    M = q ** npotts
    S = np.zeros(M)
    C = np.zeros(M)
    cl = np.empty(nv + 1, dtype=np.int64)
    col = np.empty(nv + 1, dtype=np.int64)
    powq = np.empty(npotts, dtype=np.int64)
    for a in range(npotts):
        powq[a] = q ** a
    for code in range(1 << ne):
        lw = fk_logw[code]
        if lw == -np.inf:
            continue
        parent = np.arange(nv + 1)
        for v in range(nv):
            if wired[v]:
                union(parent, v, nv)
        for e in range(ne):
            if (code >> e) & 1:
                union(parent, ends[e, 0], ends[e, 1])
        for v in range(nv + 1):
            cl[v] = -1
        g = find(parent, nv)
        K = 0
        for v in range(nv):
            r = find(parent, v)
            if r != g and cl[r] < 0:
                cl[r] = K
                K += 1
        x = np.exp(lw - shift - K * np.log(q))
        for a in range(q ** K):
            rest = a
            for k in range(K):
                col[k] = rest % q
                rest //= q
            idx = 0
            for v in range(nv):
                if pidx[v] >= 0:
                    r = find(parent, v)
                    cv = exterior_colour if r == g else col[cl[r]]
                    idx += cv * powq[pidx[v]]
            neumaier_add(S, C, idx, x)
    return S + C
