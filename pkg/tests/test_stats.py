import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dobrushin.geometry import Graph
from dobrushin.stats import (
    DEFAULT_GRID,
    RWStepLaw,
    bridge_stats,
    brownian_bridge_paths,
    cone_point_density,
    estimate_nu,
    gap_scaling,
    oz_fit,
    rw_bridge_ensemble,
    rw_bridge_sample,
)

SYM = RWStepLaw(np.array([[1, 1], [1, -1]]), np.array([0.5, 0.5]))


def test_nu_pure_exponential():
    x = np.arange(1, 8)
    est = estimate_nu(x, np.exp(-x), n_boot=200)
    assert est.nu == pytest.approx(1.0, abs=1e-12)
    assert est.ci[0] == pytest.approx(1.0, abs=1e-9) and est.ci[1] == pytest.approx(1.0, abs=1e-9)


def test_nu_with_prefactor_approaches_rate():
    slopes = []
    for lo in (2, 20, 200):
        x = np.arange(lo, lo + 10, dtype=float)
        slopes.append(estimate_nu(x, np.exp(-2 * x) / np.sqrt(x), n_boot=50).nu)
    assert slopes[0] > slopes[1] > slopes[2] > 2
    assert slopes[2] - 2 < 0.003


def test_nu_errors_and_truncation():
    with pytest.raises(ValueError):
        estimate_nu([1], [0.5])
    with pytest.raises(ValueError):
        estimate_nu([1, 2, 3], [0.5, -0.1, 0.2])
    with pytest.warns(UserWarning):
        est = estimate_nu([1, 2, 3, 4, 5], [0.5, 0.25, 0.125, 0.0625, 0.0], n_boot=50)
    assert est.distances == [1, 2, 3, 4]
    assert est.nu == pytest.approx(math.log(2))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 3), st.floats(-2, 2), st.floats(0.01, 100))
def test_nu_rescaling_invariance(nu, a, scale):
    x = np.arange(1, 7, dtype=float)
    p = np.exp(-nu * x + a)
    e1 = estimate_nu(x, p, n_boot=20)
    e2 = estimate_nu(x, p * scale, n_boot=20)
    assert e1.nu == pytest.approx(nu, abs=1e-9)
    assert e2.nu == pytest.approx(e1.nu, abs=1e-9)


def test_oz_synthetic_recovery():
    x = np.arange(1, 16, dtype=float)
    nu, g = 0.5, 0.8
    p = g * np.exp(-nu * x) / np.sqrt(x)
    fit = oz_fit(x, p, n_boot=200)
    assert fit.nu == pytest.approx(nu, rel=1e-10)
    assert fit.log_g == pytest.approx(math.log(g), abs=1e-10)
    assert fit.preferred == "oz" and fit.aic_diff > 0
    assert fit.kappa == pytest.approx(0.5, abs=1e-9)


def test_oz_noisy_recovery():
    rng = np.random.default_rng(4)
    x = np.arange(1, 13, dtype=float)
    p = 0.9 * np.exp(-0.5 * x) / np.sqrt(x)
    N = 10**6
    obs = rng.binomial(N, p) / N
    fit = oz_fit(x, obs, samples=N, n_boot=500)
    assert abs(fit.nu - 0.5) / 0.5 < 0.02
    assert fit.nu_ci[0] < 0.5 < fit.nu_ci[1]
    assert fit.preferred == "oz"


def test_oz_pure_exponential():
    x = np.arange(1, 12, dtype=float)
    rng = np.random.default_rng(0)
    N = 10**6
    p = 0.7 * np.exp(-0.4 * x)
    fit = oz_fit(x, rng.binomial(N, p) / N, samples=N, n_boot=500)
    assert fit.kappa_ci[0] < 0 < fit.kappa_ci[1]
    assert fit.preferred == "exponential"


def test_oz_constant_degenerate():
    fit = oz_fit([1, 2, 3, 4], [0.3] * 4, n_boot=50)
    assert fit.degenerate


def test_bridge_brownian_reference():
    paths = brownian_bridge_paths(4000, DEFAULT_GRID, seed=1, scale=1.3)
    bs = bridge_stats(paths)
    assert bs.profile_corr >= 0.99
    assert bs.c_q == pytest.approx(1.3, rel=0.1)
    assert bs.tests["midpoint_es_p"] > 0.001
    assert len(bs.plot_rows()) == len(DEFAULT_GRID)
    assert set(bs.to_dict()) >= {"c_q", "profile_corr", "tests"}


def test_bridge_flat_paths_degenerate():
    bs = bridge_stats(np.zeros((50, len(DEFAULT_GRID))))
    assert bs.c_q == 0 and bs.degenerate and math.isnan(bs.profile_corr)


def test_bridge_needs_paths():
    with pytest.raises(ValueError):
        bridge_stats(np.zeros((5, len(DEFAULT_GRID))))


def test_step_law_validation():
    with pytest.raises(ValueError):
        RWStepLaw(np.array([[1, 0]]), np.array([0.5]))
    with pytest.raises(ValueError):
        RWStepLaw(np.array([[1, 2]]), np.array([1.0]))
    with pytest.raises(ValueError):
        RWStepLaw(np.array([[1, 1]]), np.array([1.0]))
    with pytest.raises(ValueError):
        RWStepLaw(np.array([[0, 0]]), np.array([1.0]))
    law = RWStepLaw.symmetric([[1, 1], [2, 0]], [0.5, 0.5])
    assert law.mean[1] == pytest.approx(0)
    assert SYM.alpha == 1 and SYM.sigma2 == (0.0, 1.0) and SYM.chi == 1.0


def test_deterministic_step_bridge():
    law = RWStepLaw(np.array([[1, 0]]), np.array([1.0]))
    n = 10
    path = rw_bridge_sample(law, n, seed=0)
    assert path.knots[-1].tolist() == [2 * n + 2, 0]
    assert np.all(path(np.linspace(0, 1, 21)) == 0)
    assert path.max_step == 1


def test_custom_boundary_pieces():
    n = 8
    path = rw_bridge_sample(SYM, n, boundary=lambda rng: ((1, 1), (1, -1)), seed=3)
    assert path.knots[1].tolist() == [1, 1]
    assert path.knots[-1].tolist() == [2 * n + 2, 0]
    assert np.all(np.abs(np.diff(path.knots[1:-1, 1])) <= 1)


def test_unreachable_target():
    law = RWStepLaw(np.array([[2, 2], [2, -2]]), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        rw_bridge_sample(law, 3, boundary=lambda rng: ((1, 0), (0, 0)), max_tries=10)


def test_rw_bridge_shape_small():
    paths = rw_bridge_ensemble(SYM, 32, 1500, seed=2)
    assert all(p.knots[-1].tolist() == [66, 0] for p in paths)
    bs = bridge_stats(paths)
    assert bs.profile_corr >= 0.95
    assert bs.c_q == pytest.approx(1.0, rel=0.1)


def test_gap_models():
    ns = [16, 32, 64, 128]
    g = gap_scaling({n: [3 * math.log(n) ** 2] * 5 for n in ns})
    assert g.preferred == "log2" and g.ic_diff > 0
    g = gap_scaling({n: [2 * math.sqrt(n)] * 5 for n in ns})
    assert g.preferred == "sqrt" and g.ic_diff < 0
    g = gap_scaling({n: [4] * 5 for n in ns})
    assert g.flat and g.preferred is None
    with pytest.raises(ValueError):
        gap_scaling({16: [1], 32: [2]})


def test_cone_point_density_examples():
    straight = Graph.of([(x, 0) for x in range(12)])
    d = cone_point_density([straight], n_boot=20)
    assert d.mean == pytest.approx(1.0)
    blob = Graph.of([(x, y) for x in range(6) for y in range(6)])
    assert cone_point_density([blob], n_boot=20).mean == 0.0
    assert math.isnan(cone_point_density([], n_boot=20).mean)
