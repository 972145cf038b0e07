"""Compiled union-find and bounded-BFS helpers shared by the samplers.

Graphs are given as an (E, 2) endpoint array over vertices 0..nv-1. A vertex
flagged as wired is attached to a ghost vertex (index nv) standing for the
frozen exterior, so clusters meeting the boundary merge through it.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True)
def union(parent, a, b):
    ra = find(parent, a)
    rb = find(parent, b)
    if ra != rb:
        parent[ra] = rb
        return True
    return False


@njit(cache=True)
def components(nv, ends, mask, wired):
    """Root label for every vertex (plus ghost at index nv)."""
    parent = np.arange(nv + 1)
    for v in range(nv):
        if wired[v]:
            union(parent, v, nv)
    for k in range(ends.shape[0]):
        if mask[k]:
            union(parent, ends[k, 0], ends[k, 1])
    for v in range(nv + 1):
        parent[v] = find(parent, v)
    return parent


@njit(cache=True)
def count_clusters(nv, ends, mask, wired):
    """Number of clusters meeting the vertex set (ghost counted once if used)."""
    parent = np.arange(nv + 1)
    n = nv
    anywired = False
    for v in range(nv):
        if wired[v]:
            anywired = True
            if union(parent, v, nv):
                n -= 1
    if anywired:
        n += 1
    for k in range(ends.shape[0]):
        if mask[k]:
            if union(parent, ends[k, 0], ends[k, 1]):
                n -= 1
    return n


def csr(nv, ends):
    """Incidence lists: for vertex v, edges inc[ptr[v]:ptr[v+1]] and their other endpoints."""
    ne = ends.shape[0]
    deg = np.zeros(nv, dtype=np.int64)
    for a, b in ends:
        deg[a] += 1
        deg[b] += 1
    ptr = np.zeros(nv + 1, dtype=np.int64)
    ptr[1:] = np.cumsum(deg)
    inc = np.empty(2 * ne, dtype=np.int64)
    nbr = np.empty(2 * ne, dtype=np.int64)
    fill = ptr[:-1].copy()
    for k in range(ne):
        a, b = ends[k]
        inc[fill[a]] = k
        nbr[fill[a]] = b
        fill[a] += 1
        inc[fill[b]] = k
        nbr[fill[b]] = a
        fill[b] += 1
    return ptr, inc, nbr


@njit(cache=True)
def connected_without(a, b, skip, mask, wired, ptr, inc, nbr, markA, markB, stamp, qA, qB):
    """Whether a and b are joined by open edges other than ``skip``.

    Two breadth-first searches are interleaved so the cost is bounded by the
    smaller of the two clusters, or by the distance when they meet early.
    The exterior counts as a single vertex reachable from every wired vertex.
    """
    if a == b:
        return True
    ghostA = wired[a]
    ghostB = wired[b]
    if ghostA and ghostB:
        return True
    markA[a] = stamp
    markB[b] = stamp
    hA, tA, hB, tB = 0, 1, 0, 1
    qA[0] = a
    qB[0] = b
    while True:
        doneA = hA >= tA
        doneB = hB >= tB
        if doneA and not ghostA:
            return False
        if doneB and not ghostB:
            return False
        if doneA and doneB:
            return ghostA and ghostB
        if not doneA:
            x = qA[hA]
            hA += 1
            for s in range(ptr[x], ptr[x + 1]):
                k = inc[s]
                if k == skip or not mask[k]:
                    continue
                y = nbr[s]
                if markA[y] == stamp:
                    continue
                if markB[y] == stamp:
                    return True
                markA[y] = stamp
                if wired[y]:
                    ghostA = True
                    if ghostB:
                        return True
                qA[tA] = y
                tA += 1
        if not doneB:
            x = qB[hB]
            hB += 1
            for s in range(ptr[x], ptr[x + 1]):
                k = inc[s]
                if k == skip or not mask[k]:
                    continue
                y = nbr[s]
                if markB[y] == stamp:
                    continue
                if markA[y] == stamp:
                    return True
                markB[y] = stamp
                if wired[y]:
                    ghostB = True
                    if ghostA:
                        return True
                qB[tB] = y
                tB += 1
