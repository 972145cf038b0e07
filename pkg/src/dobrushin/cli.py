"""Command-line front-end: oracle suite, sampling, interface ensembles and decay fits.

Every command writes a JSON manifest next to its outputs. A JSON config file
(``--config``) supplies defaults; explicit flags override it.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor

import click
import numpy as np

from . import __version__

BC_CHOICES = ("free", "wired", "10", "1f")


def _sha(path: str) -> str:
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def _write_manifest(out: str, command: str, config: dict, artifacts, **extra) -> dict:
    man = {
        "command": command,
        "version": __version__,
        "config": config,
        "artifacts": {os.path.basename(a): _sha(a) for a in artifacts},
        **extra,
    }
    with open(os.path.join(out, "manifest.json"), "w") as f:
        json.dump(man, f, indent=1, sort_keys=True, default=float)
    return man


def _load_config(ctx, param, value):
    if value:
        with open(value) as f:
            raw = json.load(f)
        # config keys may use flag names (n, m) or parameter names (ns, m_factor)
        alias = {}
        for p in ctx.command.params:
            for opt in getattr(p, "opts", []):
                alias[opt.lstrip("-").replace("-", "_")] = p.name
        cfg = {alias.get(k, k): v for k, v in raw.items()}
        ctx.default_map = {**(ctx.default_map or {}), **cfg}
    return value


config_option = click.option("--config", type=click.Path(exists=True, dir_okay=False), callback=_load_config,
                             is_eager=True, expose_value=False, help="JSON file of default flag values.")


@click.group()
@click.version_option(__version__)
def main():
    """Dobrushin interfaces for the Potts, FK and Ashkin-Teller random-cluster models."""


# ---------------------------------------------------------------- verify


@main.command()
@config_option
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Directory for report.json.")
@click.option("--corrupt", is_flag=True, help="Report the negative controls (deliberately corrupted rules).")
@click.option("--n", "n", type=int, default=None, help="Also check the loop weight on the n x m Dobrushin domain.")
@click.option("--m", "m", type=int, default=None)
@click.option("--q", type=float, default=25.0)
def verify(out, corrupt, n, m, q):
    """Run the exact-enumeration oracle suite; exit code 0 iff every check holds."""
    from .lattice import _build_domain
    from .oracle import StateSpaceTooLarge, run_suite, verify_loop_weight

    t0 = time.time()
    try:
        extra = []
        if n is not None:
            extra.append(verify_loop_weight(_build_domain(n, n if m is None else m), q))
    except StateSpaceTooLarge as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    reports = run_suite(log=lambda s: click.echo(s, err=True)) + extra
    if corrupt:
        rows = [{"name": f"{r.details.get('instance', r.name)} / {c.name}", "passed": c.passed,
                 "max_deviation": c.max_deviation} for r in reports for c in r.controls]
        status = all(x["passed"] for x in rows)
    else:
        rows = [r.to_dict() | {"ok": r.ok} for r in reports]
        status = all(r.ok for r in reports)
    doc = {"mode": "controls" if corrupt else "suite", "all_passed": status, "seconds": time.time() - t0,
           "reports": rows}
    text = json.dumps(doc, indent=1, default=float)
    if out:
        os.makedirs(out, exist_ok=True)
        path = os.path.join(out, "report.json")
        with open(path, "w") as f:
            f.write(text)
        _write_manifest(out, "verify", {"corrupt": corrupt, "n": n, "m": m, "q": q}, [path])
    else:
        click.echo(text)
    sys.exit(0 if status else 1)


# ---------------------------------------------------------------- sample


def _critical_fk(q: float):
    """(p_c, params or None); q <= 4 gets the self-dual point with a warning."""
    from .params import from_q

    if q > 4:
        prm = from_q(q)
        return prm.p_c, prm
    warnings.warn(f"q={q} <= 4: outside the first-order regime covered by the theory", stacklevel=2)
    sq = math.sqrt(q)
    return sq / (sq + 1), None


@main.command()
@config_option
@click.option("--model", type=click.Choice(["potts", "fk", "atrc"]), default="potts")
@click.option("--q", type=float, default=25.0)
@click.option("--n", "n", type=int, default=16)
@click.option("--m", "m", type=int, default=None, help="Half-height of the box (default n).")
@click.option("--bc", type=click.Choice(BC_CHOICES), default="1f")
@click.option("--sweeps", type=int, default=1000)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def sample(model, q, n, m, bc, sweeps, seed, out):
    """Sample one configuration at criticality and write it with a manifest."""
    from .atrc import ATRCChain, ATRCGraph, encode_state
    from .fk_potts import FKChain, FKGraph, config_header, edwards_sokal_color, encode_config
    from .interfaces import potts_grid

    m = n if m is None else m
    os.makedirs(out, exist_ok=True)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        p, prm = _critical_fk(q)
    for w in caught:
        click.echo(f"warning: {w.message}; interface analysis is refused for this q", err=True)
    t0 = time.time()
    if model == "atrc":
        if prm is None:
            raise click.UsageError("the ATRC parameters are defined for q > 4 only")
        if bc not in ("free", "wired") or m != n:
            raise click.UsageError("atrc sampling supports square boxes with free or wired conditions")
        g = ATRCGraph.box(n, (1, 1) if bc == "wired" else (0, 0))
        ch = ATRCChain(g, prm, seed)
        ch.run(sweeps)
        path = os.path.join(out, "atrc.txt")
        with open(path, "w") as f:
            f.write(encode_state(ch.state, {"n": n, "bc": bc, "seed": seed, "sweeps": sweeps}))
    else:
        g = FKGraph.box(n, m, bc)
        ch = FKChain(g, p, q, seed)
        ch.run(sweeps)
        if model == "fk":
            path = os.path.join(out, "fk.txt")
            with open(path, "w") as f:
                f.write(encode_config(ch.omega, config_header(g, seed, sweeps)))
        else:
            if int(q) != q:
                raise click.UsageError("Potts sampling needs an integer q")
            verts = [v for v in g.verts if abs(v[0]) <= 2 * n and abs(v[1]) <= 2 * m]
            sig = edwards_sokal_color(g, ch.omega, int(q), seed + 1, verts)
            grid = potts_grid(sig, verts, n, m)
            path = os.path.join(out, "spins.csv")
            with open(path, "w", newline="") as f:
                w = csv.writer(f)
                for row in grid.T[::-1]:  # top row first
                    w.writerow(row.tolist())
    cfg = {"model": model, "q": q, "n": n, "m": m, "bc": bc, "sweeps": sweeps, "seed": seed}
    _write_manifest(out, "sample", cfg, [path], p=p, wall_clock_s=time.time() - t0)
    click.echo(path)


# ---------------------------------------------------------------- interface


def _parse_ints(text) -> list:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).replace(",", " ").split()]


def _one_ensemble(args):
    from .runs import EnsembleConfig, run_ensemble

    cfg, out = args
    return run_ensemble(EnsembleConfig(**cfg), out)


def write_interface_outputs(root: str, ns) -> dict:
    """Bridge statistics, plot data and gap fit for finished ensembles under ``root``."""
    from .runs import summarize_interfaces

    summary = {}
    for kind, lower in (("potts+", "potts-"), ("fk+", "fk-")):
        s = summarize_interfaces(root, ns, kind, lower)
        for n, d in s["per_n"].items():
            tag = kind.rstrip("+")
            with open(os.path.join(root, f"n{n}", f"bridge_{tag}.json"), "w") as f:
                json.dump(d["bridge"].to_dict(), f, indent=1)
            with open(os.path.join(root, f"n{n}", f"plot_{tag}.csv"), "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(["t", "mean", "var", "reference_var"])
                w.writerows(d["bridge"].plot_rows())
        summary[kind] = {
            "variance_ratios": s["variance_ratios"],
            "profile_corr": {str(n): d["bridge"].profile_corr for n, d in s["per_n"].items()},
            "c_q": {str(n): d["bridge"].c_q for n, d in s["per_n"].items()},
            "median_gap": {str(n): d["median_gap"] for n, d in s["per_n"].items()},
            "gap_fit": s["gap_fit"].to_dict() if s["gap_fit"] else None,
        }
    with open(os.path.join(root, "summary.json"), "w") as f:
        json.dump(summary, f, indent=1, default=float)
    return summary


@main.command()
@config_option
@click.option("--q", type=float, default=25.0)
@click.option("--n", "ns", type=click.UNPROCESSED, default="16,32,64", help="Comma-separated box half-widths.")
@click.option("--m", "m_factor", type=float, default=2.0, help="Box half-height as a multiple of n.")
@click.option("--replicas", type=int, default=200)
@click.option("--burnin", type=int, default=None, help="Burn-in sweeps (default 10 n, or the config schedule).")
@click.option("--thin", type=int, default=None, help="Sweeps between replicas (default n).")
@click.option("--chains", type=int, default=1, help="Independent chains per box size.")
@click.option("--schedule", type=click.UNPROCESSED, default=None, hidden=True,
              help="Per-size {n: [burnin, thin]} mapping (config file only).")
@click.option("--seed", type=int, default=2024)
@click.option("--workers", type=int, default=1, help="Box sizes run in parallel.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def interface(q, ns, m_factor, replicas, burnin, thin, chains, schedule, seed, workers, out):
    """Envelope ensembles under 1/0 conditions, bridge statistics and the gap fit (resumable)."""
    from .params import from_q
    from .runs import default_schedule

    if replicas <= 0:
        raise click.UsageError("replicas must be positive")
    try:
        from_q(q)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    ns = _parse_ints(ns)
    schedule = json.loads(schedule) if isinstance(schedule, str) else (schedule or {})
    jobs = []
    for n in ns:
        b, t = default_schedule(n)
        b, t = schedule.get(str(n), (b, t))
        b = burnin if burnin is not None else b
        t = thin if thin is not None else t
        cfg = {"q": q, "n": n, "m": int(round(m_factor * n)), "replicas": replicas, "seed": seed,
               "burnin": b, "thin": t, "chains": chains}
        jobs.append((cfg, os.path.join(out, f"n{n}")))
    os.makedirs(out, exist_ok=True)
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            list(ex.map(_one_ensemble, jobs))
    else:
        for job in jobs:
            click.echo(f"ensemble n={job[0]['n']}", err=True)
            _one_ensemble(job)
    summary = write_interface_outputs(out, ns) if len(ns) >= 3 else {}
    arts = [os.path.join(out, "summary.json")] if summary else []
    _write_manifest(out, "interface", {"jobs": [j[0] for j in jobs]}, arts)
    click.echo(json.dumps(summary, indent=1, default=float))


# ---------------------------------------------------------------- ozfit


def fit_connections(result: dict, ks=range(2, 7), distances=None, seed: int = 0) -> dict:
    """Decay-rate and prefactor fits for the output of run_connections."""
    from .stats import estimate_nu, oz_fit

    N = result["samples"]
    bc = np.array(result["boundary_counts"], dtype=float)
    ks = [k for k in ks if k < len(bc)]
    pk = bc[ks] / N
    d = np.array(result["distances"] if distances is None else distances)
    tp = np.array(result["two_point_counts"], dtype=float)[d - 1] / N
    nu_b = estimate_nu(ks, pk, samples=N, seed=seed)
    oz = oz_fit(d, tp, samples=N, seed=seed)
    return {
        "boundary": {"k": ks, "p": pk.tolist(), "ratios": (pk[:-1] / pk[1:]).tolist(), "nu": nu_b.to_dict()},
        "two_point": {"distances": d.tolist(), "p": tp.tolist(), "oz": oz.to_dict()},
    }


@main.command()
@config_option
@click.option("--q", type=float, default=25.0)
@click.option("--n", "n", type=int, default=8, help="Box half-width of the ATRC(1,1) run.")
@click.option("--distances", default="1,2,3,4,5", help="Distances for the two-point fit.")
@click.option("--replicas", type=int, default=100_000, help="Number of samples.")
@click.option("--burnin", type=int, default=1000)
@click.option("--thin", type=int, default=1)
@click.option("--seed", type=int, default=2024)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def ozfit(q, n, distances, replicas, burnin, thin, seed, out):
    """ATRC(1,1) connection frequencies, decay rate and Ornstein-Zernike fit."""
    from .runs import ConnectionConfig, run_connections

    if replicas <= 0:
        raise click.UsageError("replicas must be positive")
    res = run_connections(ConnectionConfig(q, n, replicas, seed, burnin, thin), out,
                          log=lambda s: click.echo(s, err=True))
    fit = fit_connections(res, distances=_parse_ints(distances), seed=seed)
    path = os.path.join(out, "fit.json")
    with open(path, "w") as f:
        json.dump(fit, f, indent=1, default=float)
    _write_manifest(out, "ozfit", res["config"], [path, os.path.join(out, "connections.json")])
    click.echo(json.dumps(fit, indent=1, default=float))


if __name__ == "__main__":
    main()
