"""Resumable interface ensembles: FK 1/0 chains, Edwards-Sokal colouring, envelopes.

Each run directory holds a manifest, one CSV of envelopes per box size and a
checkpoint per chain (configuration plus generator state), so an interrupted
run continues bit-exactly where it stopped.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from dataclasses import dataclass

import numpy as np

from .fk_potts import FKChain, FKGraph, edwards_sokal_color
from .interfaces import fk_envelopes, potts_envelopes, potts_grid
from .lattice import build_domain
from .params import from_q

KINDS = ("potts+", "potts-", "fk+", "fk-")


@dataclass
class EnsembleConfig:
    q: float
    n: int
    m: int
    replicas: int
    seed: int
    burnin: int
    thin: int
    chains: int = 1

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def default_schedule(n: int) -> tuple[int, int]:
    """Burn-in and thinning in sweeps: 10 n and n, the documented starting point."""
    return 10 * n, n


def chain_seed(seed: int, n: int, chain: int) -> int:
    return int(np.random.SeedSequence([seed, n, chain]).generate_state(1, dtype=np.uint64)[0])


def flat_start(dom) -> np.ndarray:
    """Open exactly the edges lying in the closed upper half-plane."""
    return np.array([a[1] >= 0 and b[1] >= 0 for a, b in dom.E], dtype=np.bool_)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return {"__array__": obj.tolist(), "dtype": str(obj.dtype)}
    return obj


def _unplain(obj):
    if isinstance(obj, dict):
        if "__array__" in obj:
            return np.array(obj["__array__"], dtype=obj["dtype"])
        return {k: _unplain(v) for k, v in obj.items()}
    return obj


def _checkpoint_paths(out: str, chain: int):
    return os.path.join(out, f"chain{chain}.npz"), os.path.join(out, f"chain{chain}.json")


def _save_chain(out: str, c: int, ch: FKChain, produced: int):
    npz, js = _checkpoint_paths(out, c)
    np.savez_compressed(npz + ".tmp.npz", omega=ch.omega)
    os.replace(npz + ".tmp.npz", npz)
    with open(js + ".tmp", "w") as f:
        json.dump({"rng": _plain(ch.rng.bit_generator.state), "sweeps": ch.sweeps_done, "produced": produced}, f)
    os.replace(js + ".tmp", js)


def _load_chain(out: str, c: int, ch: FKChain) -> int:
    npz, js = _checkpoint_paths(out, c)
    if not (os.path.exists(npz) and os.path.exists(js)):
        return 0
    with open(js) as f:
        st = json.load(f)
    ch.omega[:] = np.load(npz)["omega"]
    ch.rng.bit_generator.state = _unplain(st["rng"])
    ch.sweeps_done = st["sweeps"]
    return st["produced"]


def read_envelopes(path: str) -> dict:
    """{replica: {kind: array}} from an ensemble CSV."""
    out: dict = {}
    if not os.path.exists(path):
        return out
    with open(path) as f:
        for row in csv.DictReader(f):
            r = int(row["replica"])
            vals = np.array([int(v) for v in row["values"].split()], dtype=np.int64)
            out.setdefault(r, {})[row["kind"]] = vals
    return out


def run_ensemble(cfg: EnsembleConfig, out: str, log=None) -> dict:
    """Produce (or finish producing) ``cfg.replicas`` envelope samples in ``out``.

    Chain c yields replicas c, c + chains, ...; replica j of a chain is taken
    after ``burnin + j * thin`` sweeps from the flat-interface start.
    """
    os.makedirs(out, exist_ok=True)
    man_path = os.path.join(out, "manifest.json")
    if os.path.exists(man_path):
        with open(man_path) as f:
            old = json.load(f)
        if old["config"] != cfg.to_dict():
            raise ValueError(f"{out} holds a run with a different configuration")
    params = from_q(cfg.q)
    dom = build_domain(cfg.n, cfg.m)
    g = FKGraph.dobrushin(dom)
    potts_verts = [v for k, v in enumerate(g.verts) if not g.wired[k]]
    csv_path = os.path.join(out, "envelopes.csv")
    have = read_envelopes(csv_path)
    new_file = not os.path.exists(csv_path)
    t0 = time.time()
    with open(csv_path, "a", newline="") as fh:
        w = csv.writer(fh)
        if new_file:
            w.writerow(["replica", "chain", "sweeps", "kind", "values"])
        for c in range(cfg.chains):
            mine = list(range(c, cfg.replicas, cfg.chains))
            ch = FKChain(g, params.p_c, cfg.q, chain_seed(cfg.seed, cfg.n, c), flat_start(dom))
            produced = _load_chain(out, c, ch)
            while produced < len(mine):
                r = mine[produced]
                target = cfg.burnin + produced * cfg.thin
                ch.run(target - ch.sweeps_done)
                if r not in have:
                    fkp, fkm = fk_envelopes(dom, ch.omega)
                    sig = edwards_sokal_color(g, ch.omega, int(cfg.q), chain_seed(cfg.seed, cfg.n, 10_000 + r), potts_verts)
                    pp, pm = potts_envelopes(potts_grid(sig, potts_verts, cfg.n, cfg.m), cfg.n, cfg.m)
                    for kind, path in zip(KINDS, (pp, pm, fkp, fkm)):
                        w.writerow([r, c, ch.sweeps_done, kind, " ".join(map(str, path.values))])
                    fh.flush()
                produced += 1
                _save_chain(out, c, ch, produced)
                if log:
                    log(f"n={cfg.n} replica {r} (chain {c}, {ch.sweeps_done} sweeps, {time.time() - t0:.0f}s)")
    with open(csv_path, "rb") as f:
        digest = hashlib.sha256(f.read()).hexdigest()
    manifest = {
        "command": "interface",
        "config": cfg.to_dict(),
        "params": params.to_dict(),
        "start": "flat interface (edges in the closed upper half-plane open)",
        "scan": "lexicographic heat-bath sweeps",
        "artifacts": {"envelopes.csv": digest},
        "wall_clock_s_last_session": time.time() - t0,
    }
    with open(man_path, "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
    return manifest


# ---------------------------------------------------------------- ATRC connection profiles


@dataclass
class ConnectionConfig:
    q: float
    n: int
    samples: int
    seed: int
    burnin: int
    thin: int = 1

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def run_connections(cfg: ConnectionConfig, out: str, log=None) -> dict:
    """Frequencies of 0 <-> boundary of the k-box and of 0 <-> (k, 0) in the first layer of ATRC(1,1) on the n-box.

    Results and manifest go to ``out``; an existing result with the same
    configuration is returned without resampling.
    """
    from . import _uf
    from .atrc import ATRCChain, ATRCGraph

    os.makedirs(out, exist_ok=True)
    res_path = os.path.join(out, "connections.json")
    if os.path.exists(res_path):
        with open(res_path) as f:
            old = json.load(f)
        if old["config"] == cfg.to_dict():
            return old
    params = from_q(cfg.q)
    g = ATRCGraph.box(cfg.n, (1, 1))
    vidx = g.vindex()
    o = vidx[(0, 0)]
    dist = np.array([max(abs(x), abs(y)) // 2 for x, y in g.verts], dtype=np.int64)
    axis = np.array([vidx[(2 * k, 0)] for k in range(1, cfg.n + 1)], dtype=np.int64)
    reach = np.zeros(cfg.n + 2, dtype=np.int64)
    two = np.zeros(cfg.n, dtype=np.int64)
    ch = ATRCChain(g, params, chain_seed(cfg.seed, cfg.n, 0))
    t0 = time.time()
    ch.run(cfg.burnin)
    for s in range(cfg.samples):
        ch.run(cfg.thin)
        lab = _uf.components(g.nv, g.ends, ch.state == 2, g.wired_tau)[: g.nv]
        mine = lab == lab[o]
        reach[: int(dist[mine].max()) + 1] += 1
        two += lab[axis] == lab[o]
        if log and (s + 1) % 10_000 == 0:
            log(f"atrc connections {s + 1}/{cfg.samples} ({time.time() - t0:.0f}s)")
    result = {
        "command": "ozfit",
        "config": cfg.to_dict(),
        "params": params.to_dict(),
        "model": "ATRC(1,1) on the n-box, heat-bath sweeps from the empty configuration",
        "k": list(range(cfg.n + 2)),
        "boundary_counts": reach.tolist(),
        "distances": list(range(1, cfg.n + 1)),
        "two_point_counts": two.tolist(),
        "samples": cfg.samples,
        "wall_clock_s": time.time() - t0,
    }
    with open(res_path, "w") as f:
        json.dump(result, f, indent=1, sort_keys=True)
    return result


# ---------------------------------------------------------------- interface summaries


def envelope_paths(path: str, kind: str) -> list:
    """Envelopes of one kind from an ensemble CSV, ordered by replica."""
    env = read_envelopes(path)
    return [env[r][kind] for r in sorted(env) if kind in env[r]]


def summarize_interfaces(root: str, ns, kind: str = "potts+", lower: str = "potts-", grid=None) -> dict:
    """Bridge statistics per box size, midpoint-variance ratios and the gap-scaling fit.

    ``root`` holds one ``n{n}`` directory per box size as written by run_ensemble.
    """
    from .interfaces import envelope_gap, rescale
    from .stats import DEFAULT_GRID, bridge_stats, gap_scaling

    grid = DEFAULT_GRID if grid is None else grid
    per_n, gaps = {}, {}
    for n in ns:
        csv_path = os.path.join(root, f"n{n}", "envelopes.csv")
        env = read_envelopes(csv_path)
        reps = sorted(r for r in env if kind in env[r] and lower in env[r])
        if not reps:
            raise ValueError(f"no {kind} envelopes in {csv_path}")
        paths = [rescale(env[r][kind], n) for r in reps]
        bs = bridge_stats(paths, grid)
        gaps[n] = [envelope_gap(env[r][kind], env[r][lower]) for r in reps]
        per_n[n] = {"bridge": bs, "replicas": len(reps), "midpoint_var": float(np.interp(0.5, bs.grid, bs.var)),
                    "median_gap": float(np.median(gaps[n]))}
    ns = sorted(per_n)
    ratios = {f"{a}->{b}": per_n[b]["midpoint_var"] / per_n[a]["midpoint_var"] for a, b in zip(ns[:-1], ns[1:])}
    fit = gap_scaling(gaps) if len(ns) >= 3 else None
    return {"per_n": per_n, "variance_ratios": ratios, "gap_fit": fit, "gaps": gaps}
