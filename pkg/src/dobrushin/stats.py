"""Estimators for decay rates, Ornstein-Zernike prefactors, bridge fluctuations and envelope gaps.

Every estimator returns effect sizes with bootstrap intervals; pass/fail
thresholds live in the acceptance tests, not here.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats as sps

from .geometry import Cone, Graph, regular_cone_points


def _clean(x, p, samples):
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    if x.shape != p.shape or x.ndim != 1:
        raise ValueError("distances and probabilities must be 1-d arrays of equal length")
    order = np.argsort(x)
    x, p = x[order], p[order]
    if samples is not None:
        samples = np.broadcast_to(np.asarray(samples, dtype=float), x.shape)[order]
    if np.any(p < 0):
        raise ValueError("frequencies must be non-negative")
    zero = np.flatnonzero(p <= 0)
    if zero.size:
        k = zero[0]
        warnings.warn(f"zero frequency at distance {x[k]:g}; truncating the data there", stacklevel=3)
        x, p = x[:k], p[:k]
        samples = None if samples is None else samples[:k]
    if x.size < 3:
        raise ValueError("at least three distances with positive frequency are needed")
    return x, p, samples


def _weights(p, samples):
    if samples is None:
        return np.ones_like(p)
    # delta-method inverse variance of -ln(p_hat) for binomial counts
    return samples * p / np.maximum(1 - p, 1e-12)


def _wls(X, y, w):
    sw = np.sqrt(w)
    beta, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    r = y - X @ beta
    return beta, float(np.sum(w * r * r))


def _resample(x, p, samples, rng, fitted_y, resid):
    """Parametric bootstrap with binomial counts, else residual bootstrap."""
    if samples is not None:
        s = samples.astype(np.int64)
        pb = rng.binomial(s, p) / s
        return -np.log(np.maximum(pb, 0.5 / s))
    return fitted_y + rng.choice(resid, size=resid.size, replace=True)


@dataclass
class NuEstimate:
    nu: float
    ci: tuple
    intercept: float
    distances: list
    rss: float

    def to_dict(self) -> dict:
        return asdict(self)


def estimate_nu(distances, probs, samples=None, n_boot: int = 2000, seed: int = 0, level: float = 0.95) -> NuEstimate:
    """Slope of -ln P against distance by weighted least squares, with bootstrap CI.

    ``samples`` (scalar or per-distance) switches on binomial weights and the
    parametric bootstrap.
    """
    x, p, samples = _clean(distances, probs, samples)
    y = -np.log(p)
    w = _weights(p, samples)
    X = np.stack([x, np.ones_like(x)], axis=1)
    beta, rss = _wls(X, y, w)
    rng = np.random.default_rng(seed)
    fitted = X @ beta
    resid = y - fitted
    boot = np.empty(n_boot)
    for b in range(n_boot):
        yb = _resample(x, p, samples, rng, fitted, resid)
        boot[b] = _wls(X, yb, w)[0][0]
    a = (1 - level) / 2
    lo, hi = np.quantile(boot, [a, 1 - a])
    return NuEstimate(float(beta[0]), (float(lo), float(hi)), float(beta[1]), x.tolist(), rss)


@dataclass
class OZFit:
    nu: float
    nu_ci: tuple
    log_g: float
    nu_exp: float
    kappa: float
    kappa_ci: tuple
    rss_oz: float
    rss_exp: float
    aic_diff: float
    preferred: str
    degenerate: bool
    n_points: int

    def to_dict(self) -> dict:
        return asdict(self)


def _aic(rss: float, n: int, k: int, scale: float) -> float:
    floor = max(1e-24 * scale * n, 1e-300)
    return n * math.log(max(rss, floor) / n) + 2 * k


def oz_fit(distances, probs, samples=None, n_boot: int = 2000, seed: int = 0, level: float = 0.95) -> OZFit:
    """Compare -ln P = nu x + (1/2) ln x - ln g with the pure exponential -ln P = nu x + a.

    ``aic_diff`` = AIC(exponential) - AIC(OZ); positive favours the square-root
    prefactor. ``kappa`` is the free coefficient of ln x in the three-parameter
    fit, with a bootstrap interval.
    """
    x, p, samples = _clean(distances, probs, samples)
    y = -np.log(p)
    w = _weights(p, samples)
    one = np.ones_like(x)
    X_oz = np.stack([x, one], axis=1)
    X_exp = X_oz
    X_free = np.stack([x, np.log(x), one], axis=1)
    b_oz, rss_oz = _wls(X_oz, y - 0.5 * np.log(x), w)
    b_exp, rss_exp = _wls(X_exp, y, w)
    b_free, _ = _wls(X_free, y, w)
    scale = float(np.sum(w * (y - np.average(y, weights=w)) ** 2))
    n = x.size
    aic_diff = _aic(rss_exp, n, 2, scale) - _aic(rss_oz, n, 2, scale)

    rng = np.random.default_rng(seed)
    fitted = X_free @ b_free
    resid = y - fitted
    nus, kappas = np.empty(n_boot), np.empty(n_boot)
    for b in range(n_boot):
        yb = _resample(x, p, samples, rng, fitted, resid)
        nus[b] = _wls(X_oz, yb - 0.5 * np.log(x), w)[0][0]
        kappas[b] = _wls(X_free, yb, w)[0][1]
    a = (1 - level) / 2
    nu_ci = tuple(float(v) for v in np.quantile(nus, [a, 1 - a]))
    kappa_ci = tuple(float(v) for v in np.quantile(kappas, [a, 1 - a]))
    degenerate = bool(np.ptp(y) < 1e-12 or b_oz[0] <= 0 or nu_ci[0] <= 0 < nu_ci[1])
    return OZFit(
        nu=float(b_oz[0]), nu_ci=nu_ci, log_g=float(-b_oz[1]), nu_exp=float(b_exp[0]),
        kappa=float(b_free[1]), kappa_ci=kappa_ci, rss_oz=rss_oz, rss_exp=rss_exp,
        aic_diff=float(aic_diff), preferred="oz" if aic_diff > 0 else "exponential",
        degenerate=degenerate, n_points=n,
    )


# ---------------------------------------------------------------- bridges

DEFAULT_GRID = np.linspace(0.0, 1.0, 33)


def brownian_bridge_paths(count: int, grid=DEFAULT_GRID, seed: int = 0, scale: float = 1.0) -> np.ndarray:
    """Exact standard Brownian bridges (times ``scale``) sampled on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    rng = np.random.default_rng(seed)
    dt = np.diff(grid)
    inc = rng.standard_normal((count, dt.size)) * np.sqrt(dt)
    W = np.concatenate([np.zeros((count, 1)), np.cumsum(inc, axis=1)], axis=1)
    span = grid[-1] - grid[0]
    return scale * (W - (grid - grid[0])[None, :] / span * W[:, -1:])


def _on_grid(paths, grid) -> np.ndarray:
    if isinstance(paths, np.ndarray) and paths.ndim == 2:
        if paths.shape[1] != len(grid):
            raise ValueError("path array does not match the grid")
        return paths.astype(float)
    return np.array([p.on_grid(grid) if hasattr(p, "on_grid") else np.asarray(p(grid)) for p in paths], dtype=float)


@dataclass
class BridgeStats:
    grid: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    cov: np.ndarray
    count: int
    c_q: float
    profile_corr: float
    degenerate: bool
    tests: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.tolist(), "mean": self.mean.tolist(), "var": self.var.tolist(),
            "count": self.count, "c_q": self.c_q, "profile_corr": self.profile_corr,
            "degenerate": self.degenerate, "tests": self.tests,
        }

    def plot_rows(self):
        """(t, mean, var, reference var c_q^2 t(1-t)) rows."""
        ref = self.c_q ** 2 * self.grid * (1 - self.grid)
        return list(zip(self.grid.tolist(), self.mean.tolist(), self.var.tolist(), ref.tolist()))


def bridge_stats(paths, grid=DEFAULT_GRID, reference=None, seed: int = 0, min_paths: int = 30) -> BridgeStats:
    """Empirical mean and covariance of rescaled paths on ``grid``.

    c_q is read off the midpoint variance. The variance profile is correlated
    with t(1-t), and midpoint and sup-norm laws are compared with a reference
    ensemble (exact bridges scaled by c_q unless ``reference`` is given) by
    two-sample Epps-Singleton tests.
    """
    grid = np.asarray(grid, dtype=float)
    Y = _on_grid(paths, grid)
    if Y.shape[0] < min_paths:
        raise ValueError(f"need at least {min_paths} paths, got {Y.shape[0]}")
    mean = Y.mean(axis=0)
    cov = np.cov(Y, rowvar=False)
    cov = (cov + cov.T) / 2
    var = np.diag(cov).copy()
    half = float(np.interp(0.5, grid, var))
    c_q = math.sqrt(max(half, 0.0) / 0.25)
    shape = grid * (1 - grid)
    inner = (grid > 0) & (grid < 1)
    degenerate = c_q < 1e-12
    if degenerate or np.ptp(var[inner]) == 0:
        corr = float("nan")
    else:
        corr = float(np.corrcoef(var[inner], shape[inner])[0, 1])
    tests: dict = {}
    if not degenerate:
        R = _on_grid(reference, grid) if reference is not None else brownian_bridge_paths(Y.shape[0], grid, seed + 1, c_q)
        mid = int(np.argmin(np.abs(grid - 0.5)))
        # characteristic-function tests tolerate the lattice structure of discrete paths
        tests["midpoint_es_p"] = float(sps.epps_singleton_2samp(Y[:, mid], R[:, mid]).pvalue)
        tests["sup_es_p"] = float(sps.epps_singleton_2samp(np.abs(Y).max(axis=1), np.abs(R).max(axis=1)).pvalue)
        ref_var = c_q ** 2 * shape
        tests["max_rel_var_err"] = float(np.max(np.abs(var[inner] - ref_var[inner]) / ref_var[inner]))
    return BridgeStats(grid, mean, var, cov, Y.shape[0], c_q, corr, degenerate, tests)


# ---------------------------------------------------------------- random-walk bridge


@dataclass
class RWStepLaw:
    steps: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        self.steps = np.asarray(self.steps, dtype=np.int64).reshape(-1, 2)
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != (self.steps.shape[0],) or np.any(self.probs < 0):
            raise ValueError("one non-negative probability per step")
        if abs(self.probs.sum() - 1) > 1e-12:
            raise ValueError("step probabilities must sum to 1")
        if np.any(self.steps[:, 0] <= 0) or not Cone().forward(self.steps).all():
            raise ValueError("steps must lie in the forward cone with positive first coordinate")
        if abs(self.mean[1]) > 1e-12:
            raise ValueError("step law must have zero mean second coordinate")

    @classmethod
    def symmetric(cls, steps, probs) -> "RWStepLaw":
        """Symmetrise a law under (x, y) -> (x, -y)."""
        s = np.asarray(steps, dtype=np.int64).reshape(-1, 2)
        p = np.asarray(probs, dtype=float)
        table: dict = {}
        for (a, b), w in zip(map(tuple, s), p):
            table[(a, b)] = table.get((a, b), 0.0) + w / 2
            table[(a, -b)] = table.get((a, -b), 0.0) + w / 2
        keys = sorted(table)
        tot = sum(table.values())
        return cls(np.array(keys), np.array([table[k] / tot for k in keys]))

    @property
    def mean(self) -> np.ndarray:
        return self.probs @ self.steps

    @property
    def alpha(self) -> float:
        return float(self.mean[0])

    @property
    def sigma2(self) -> tuple:
        d = self.steps - self.mean
        return float(self.probs @ d[:, 0] ** 2), float(self.probs @ d[:, 1] ** 2)

    @property
    def chi(self) -> float:
        return self.sigma2[1] / self.alpha


@dataclass
class RWBridgePath:
    """Linear interpolation of the knots Z_k, rescaled diffusively."""

    knots: np.ndarray
    n: int
    chi: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        s = t * (2 * self.n + 2)
        x, keep = np.unique(self.knots[:, 0], return_index=True)
        y = self.knots[keep, 1].astype(float)
        if self.chi == 0:
            return np.zeros_like(s)
        return np.interp(s, x, y) / math.sqrt(2 * self.n * self.chi)

    def on_grid(self, grid) -> np.ndarray:
        return self(grid)

    @property
    def max_step(self) -> float:
        return float(np.max(np.linalg.norm(np.diff(self.knots, axis=0), axis=1))) if len(self.knots) > 1 else 0.0


def _zero_boundary(rng):
    return (0, 0), (0, 0)


def _reachable(law: RWStepLaw, goal) -> bool:
    gx = int(np.gcd.reduce(law.steps[:, 0]))
    ys = law.steps[:, 1]
    gy = int(np.gcd.reduce(np.abs(ys))) if np.any(ys) else 0
    if goal[0] < 0 or goal[0] % gx:
        return False
    return goal[1] == 0 if gy == 0 else goal[1] % gy == 0


def _hitting_walks(law: RWStepLaw, goal, rng, need: int, batch: int, max_tries: int) -> list:
    """Partial sums of i.i.d. steps stopped at the first visit to ``goal``, ``need`` of them."""
    if goal[0] == 0:
        return [np.zeros((0, 2), dtype=np.int64)] * need if goal[1] == 0 else []
    L = -(-int(goal[0]) // int(law.steps[:, 0].min()))
    out: list = []
    tries = 0
    while len(out) < need and tries < max_tries:
        idx = rng.choice(law.steps.shape[0], size=(batch, L), p=law.probs)
        S = np.cumsum(law.steps[idx], axis=1)
        hit = (S[:, :, 0] == goal[0]) & (S[:, :, 1] == goal[1])
        rows = np.flatnonzero(hit.any(axis=1))
        k = hit[rows].argmax(axis=1)
        out.extend(S[r, : j + 1] for r, j in zip(rows, k))
        tries += batch
    return out[:need]


def _knots(V, walk, total):
    V = np.asarray(V, dtype=np.int64)
    return np.concatenate([np.zeros((1, 2), np.int64), V[None], V[None] + walk, total[None]])


def rw_bridge_sample(law: RWStepLaw, n: int, boundary=None, seed: int | np.random.Generator = 0,
                     batch: int = 512, max_tries: int = 10**7) -> RWBridgePath:
    """Directed walk bridge from the origin to (2n+2, 0) built from boundary pieces V, W.

    ``boundary(rng)`` returns (V, W); the default is V = W = 0. Walks that do
    not hit the target exactly are restarted (conditioning on T_n finite).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    boundary = boundary or _zero_boundary
    total = np.array([2 * n + 2, 0], dtype=np.int64)
    tries = 0
    while tries < max_tries:
        V, W = boundary(rng)
        goal = total - np.asarray(V) - np.asarray(W)
        if not _reachable(law, goal):
            tries += 1
            if boundary is _zero_boundary:
                break
            continue
        got = _hitting_walks(law, goal, rng, 1, batch, batch)
        tries += batch
        if got:
            return RWBridgePath(_knots(V, got[0], total), n, law.chi)
    raise ValueError("target displacement is unreachable for this step law")


def rw_bridge_ensemble(law: RWStepLaw, n: int, count: int, seed: int = 0, boundary=None) -> list:
    rng = np.random.default_rng(seed)
    if boundary is None:
        total = np.array([2 * n + 2, 0], dtype=np.int64)
        if not _reachable(law, total):
            raise ValueError("target displacement is unreachable for this step law")
        walks = _hitting_walks(law, total, rng, count, 4096, 10**9)
        return [RWBridgePath(_knots((0, 0), w, total), n, law.chi) for w in walks]
    return [rw_bridge_sample(law, n, boundary, rng) for _ in range(count)]


# ---------------------------------------------------------------- envelope gaps


@dataclass
class GapFit:
    ns: list
    medians: list
    coef_log2: tuple
    coef_sqrt: tuple
    rss_log2: float
    rss_sqrt: float
    ic_diff: float
    preferred: str | None
    flat: bool

    def to_dict(self) -> dict:
        return asdict(self)


def gap_scaling(gaps_by_n: dict) -> GapFit:
    """Regress median maximal gap on a + b ln(n)^2 and on a + b sqrt(n).

    ``ic_diff`` = AIC(sqrt) - AIC(ln^2); positive favours ln(n)^2. A flat
    median profile rejects both models.
    """
    ns = np.array(sorted(gaps_by_n), dtype=float)
    if ns.size < 3:
        raise ValueError("need at least three box sizes")
    if np.unique(ns).size != ns.size or np.any(ns <= 1):
        raise ValueError("degenerate grid of box sizes")
    med = np.array([float(np.median(gaps_by_n[int(n)] if int(n) in gaps_by_n else gaps_by_n[n])) for n in ns])
    one = np.ones_like(ns)
    fits = {}
    for name, f in (("log2", np.log(ns) ** 2), ("sqrt", np.sqrt(ns))):
        beta, rss = _wls(np.stack([one, f], axis=1), med, one)
        fits[name] = (tuple(map(float, beta)), rss)
    scale = float(np.sum((med - med.mean()) ** 2))
    flat = bool(np.ptp(med) == 0)
    ic = _aic(fits["sqrt"][1], ns.size, 2, scale) - _aic(fits["log2"][1], ns.size, 2, scale)
    preferred = None if flat else ("log2" if ic > 0 else "sqrt")
    return GapFit(ns.astype(int).tolist(), med.tolist(), fits["log2"][0], fits["sqrt"][0],
                  fits["log2"][1], fits["sqrt"][1], float(ic), preferred, flat)


# ---------------------------------------------------------------- cone-points


@dataclass
class ConePointDensity:
    per_cluster: list
    mean: float
    ci: tuple
    column_profile: dict

    def to_dict(self) -> dict:
        d = asdict(self)
        d["column_profile"] = {str(k): v for k, v in self.column_profile.items()}
        return d


def cone_point_density(clusters, theta: float = math.pi / 4, n_boot: int = 2000, seed: int = 0) -> ConePointDensity:
    """Regular cone-points per interior column, averaged over clusters with a bootstrap CI.

    A cluster spanning columns a..b has b - a - 1 interior columns.
    """
    cone = Cone(theta=theta)
    dens, profile, seen = [], {}, {}
    for C in clusters:
        G = C if isinstance(C, Graph) else Graph.of(C)
        xs = [v[0] for v in G.vertices]
        lo, hi = min(xs), max(xs)
        interior = hi - lo - 1
        cps = regular_cone_points(G, cone=cone)
        dens.append(len(cps) / interior if interior > 0 else 0.0)
        cols = {v[0] - lo for v in cps}
        for k in range(1, hi - lo):
            seen[k] = seen.get(k, 0) + 1
            profile[k] = profile.get(k, 0) + (k in cols)
    d = np.array(dens, dtype=float)
    if d.size == 0:
        return ConePointDensity([], float("nan"), (float("nan"), float("nan")), {})
    rng = np.random.default_rng(seed)
    boot = d[rng.integers(0, d.size, size=(n_boot, d.size))].mean(axis=1)
    ci = tuple(float(v) for v in np.quantile(boot, [0.025, 0.975]))
    return ConePointDensity(d.tolist(), float(d.mean()), ci, {k: profile[k] / seen[k] for k in sorted(seen)})
