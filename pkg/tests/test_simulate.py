import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boolcov.analytic import ModelParams, mean_value
from boolcov.disks import DiskScene, functionals_exact
from boolcov.geometry import GrainSpec, Window
from boolcov.simulate import (
    ConfigInvalid,
    SimulationConfig,
    _germs,
    _rng,
    config_from_dict,
    normality_report,
    replicate_functionals,
    run,
    sample_scene,
    union_of_intervals,
)


def cfg2(L=6.0, gamma=0.3, reps=20, seed=1, **kw):
    return SimulationConfig(ModelParams.unit_ball(2, gamma), Window.box(L, L), reps, master_seed=seed, **kw)


def test_union_of_intervals_cases():
    assert union_of_intervals(np.array([]), np.array([]), 10.0) == (0, 0.0)
    assert union_of_intervals(np.array([2.0, 3.0]), np.array([1.0, 1.0]), 10.0) == (1, 3.0)
    assert union_of_intervals(np.array([2.0, 6.0]), np.array([1.0, 1.0]), 10.0) == (2, 4.0)
    # clipped at both ends
    k, length = union_of_intervals(np.array([-0.5, 10.2]), np.array([1.0, 1.0]), 10.0)
    assert k == 2 and length == pytest.approx(1.3)


@given(st.lists(st.tuples(st.floats(-2, 12), st.floats(0.1, 2)), max_size=12))
def test_union_of_intervals_against_grid(items):
    c = np.array([x for x, _ in items])
    r = np.array([y for _, y in items])
    k, length = union_of_intervals(c, r, 10.0)
    xs = (np.arange(200000) + 0.5) * (10.0 / 200000)
    cov = np.zeros_like(xs, dtype=bool)
    for ci, ri in zip(c, r):
        cov |= np.abs(xs - ci) < ri
    assert length == pytest.approx(cov.mean() * 10.0, abs=1e-3)
    runs = int(np.sum(cov[1:] & ~cov[:-1]) + cov[0])
    assert k == runs


def test_config_validation():
    with pytest.raises(ConfigInvalid) as e:
        cfg2(reps=0)
    assert e.value.field == "replicates"
    with pytest.raises(ConfigInvalid):
        cfg2(seed=-1)
    with pytest.raises(ConfigInvalid) as e:
        cfg2(edge_dilation=0.5)
    assert e.value.field == "edge_dilation"
    with pytest.raises(ConfigInvalid):
        SimulationConfig(ModelParams.unit_ball(2, 0.3), Window.ball(4.0, 2), 10)
    with pytest.raises(ConfigInvalid):
        SimulationConfig(ModelParams.unit_ball(3, 0.3), Window.box(4.0, 4.0), 10)


@pytest.mark.parametrize(
    "obj,field",
    [
        ({"d": 2, "gamma": 0.3, "window": {"side": 5}, "replicates": 0}, "replicates"),
        ({"d": 2, "gamma": -0.3, "window": {"side": 5}, "replicates": 5}, "gamma"),
        ({"d": 2, "gamma": 0.3, "replicates": 5}, "window"),
        ({"d": 2, "gamma": 0.3, "window": {"side": 5}, "replicates": 5, "colour": 1}, "colour"),
        ({"d": 2, "gamma": "x", "window": {"side": 5}, "replicates": 5}, "gamma"),
        ({"d": 2, "gamma": 0.3, "window": {"side": 5}, "replicates": 2.5}, "replicates"),
        ({"d": 2, "gamma": 0.3, "radii": [1, 2], "probs": [0.5, 0.6], "window": {"side": 5}, "replicates": 5}, "radii"),
        ([1, 2], "<root>"),
    ],
)
def test_config_from_dict_errors(obj, field):
    with pytest.raises(ConfigInvalid) as e:
        config_from_dict(obj)
    assert e.value.field == field


def test_config_from_dict_forms():
    c = config_from_dict({"d": 3, "gamma": 0.2, "window": {"shape": "ball", "radius": 4}, "replicates": 3}, seed=9)
    assert c.window.shape == "ball" and c.master_seed == 9 and c.labels == ["V3"]
    c = config_from_dict({"d": 2, "gamma": 0.2, "radii": [0.5, 1.0], "window": {"sides": [3, 4]}, "replicates": 3})
    assert c.params.grain.probs == (0.5, 0.5)
    assert c.edge_dilation == 2.0


def test_germ_count_is_poisson():
    cfg = cfg2(L=5.0, gamma=0.4, reps=2000)
    counts = np.array([len(_germs(cfg, _rng(cfg, i))[0]) for i in range(2000)])
    expected = 0.4 * cfg.window.dilated_volume(cfg.edge_dilation)
    se = math.sqrt(expected / 2000)
    assert abs(counts.mean() - expected) < 4 * se
    assert counts.var(ddof=1) == pytest.approx(expected, rel=0.12)


def test_germs_lie_in_dilated_window():
    cfg = cfg2(L=5.0, gamma=1.0)
    pts, radii = _germs(cfg, _rng(cfg, 0))
    gap = np.maximum(np.maximum(-pts, pts - 5.0), 0.0)
    assert np.all(np.hypot(*gap.T) < cfg.edge_dilation)
    assert np.all(radii == 1.0)


@given(st.integers(0, 200))
@settings(max_examples=10, deadline=None)
def test_edge_dilation_does_not_matter(idx):
    # germs farther than the grain radius from W never touch Z cap W
    a = cfg2(edge_dilation=1.0 + 1e-9)
    b = cfg2(edge_dilation=3.0)
    sa, sb = sample_scene(a, idx), sample_scene(b, idx)
    # different draws, but each is a valid stationary sample; compare after dropping far germs
    for sc, cfg in ((sa, a), (sb, b)):
        pts = sc.centers
        gap = np.maximum(np.maximum(-pts, pts - 6.0), 0.0)
        near = np.hypot(*gap.T) < 1.0
        trimmed = DiskScene(pts[near], sc.radii[near], sc.window)
        np.testing.assert_allclose(functionals_exact(trimmed).as_array(), replicate_functionals(cfg, idx), rtol=1e-12)


def test_determinism_across_worker_counts():
    cfg = cfg2(reps=24, seed=5)
    a = run(cfg, workers=1).values
    b = run(cfg, workers=2).values
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(run(cfg, workers=1).values, a)


def test_different_seeds_differ():
    assert not np.array_equal(run(cfg2(seed=1)).values, run(cfg2(seed=2)).values)


def test_saturation():
    sim = run(cfg2(L=4.0, gamma=30.0, reps=5))
    np.testing.assert_allclose(sim.values[:, 2], 16.0, rtol=1e-12)
    np.testing.assert_array_equal(sim.values[:, 0], 1.0)
    np.testing.assert_allclose(sim.values[:, 1], 8.0, rtol=1e-12)


def test_means_near_analytic():
    cfg = cfg2(L=8.0, gamma=0.3, reps=600, seed=3)
    sim = run(cfg)
    se = sim.mean_se()
    for i in range(3):
        exp = mean_value(i, cfg.params, cfg.window)
        assert abs(sim.means[i] - exp) < 4 * se[i]


def test_covariance_symmetric_psd():
    sim = run(cfg2(reps=100))
    np.testing.assert_allclose(sim.covariance, sim.covariance.T)
    assert np.linalg.eigvalsh(sim.covariance)[0] > -1e-9
    assert np.all(sim.covariance_se() > 0)
    s = sim.summary()
    assert s["labels"] == ["V0", "V1", "V2"] and s["replicates"] == 100


def test_one_dimensional_fraction():
    cfg = SimulationConfig(ModelParams.unit_ball(1, 0.5), Window.box(100.0), 400, master_seed=4)
    sim = run(cfg)
    frac, se = sim.means[1] / 100, sim.mean_se()[1] / 100
    assert abs(frac - (1 - math.exp(-1))) < 4 * se


def test_three_dimensional_volume():
    cfg = SimulationConfig(
        ModelParams.unit_ball(3, 0.2), Window.cube(3.0, 3), 40, master_seed=2, volume_points=20000
    )
    sim = run(cfg)
    p = cfg.params.p
    assert abs(sim.means[0] / 27 - p) < 4 * sim.mean_se()[0] / 27 + 0.01


def test_random_radii_run():
    params = ModelParams(GrainSpec(2, (0.5, 1.0), (0.5, 0.5)), 0.5)
    sim = run(SimulationConfig(params, Window.box(5.0, 5.0), 10))
    assert sim.values.shape == (10, 3)


def test_normality_report_synthetic():
    z = np.random.default_rng(0).standard_normal((10000, 2))
    rep = normality_report(z, sigma=np.eye(2))
    assert rep.passes(0.08, 0.16, 0.02).all()
    assert abs(rep.correlation_z[0, 1]) < 4
    d = rep.as_dict()
    assert d["n"] == 10000 and "correlation_expected" in d


def test_normality_flags_skewed_input():
    x = np.random.default_rng(1).exponential(size=(5000, 1))
    assert not normality_report(x).passes().any()
