import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from boolcov.disks import (
    DegenerateConfiguration,
    Disk,
    DiskScene,
    boundary_loops,
    functionals_exact,
    functionals_grid_oracle,
    lens_area,
    perturb_scene,
)

BIG = (-10.0, -10.0, 10.0, 10.0)


def scene(disks, window=BIG):
    return DiskScene.from_disks([Disk(c, r) for c, r in disks], window)


def test_single_disk():
    f = functionals_exact(scene([((0.0, 0.0), 1.0)]))
    assert (f.v0, f.v1, f.v2) == pytest.approx((1, math.pi, math.pi), rel=1e-14)


def test_empty_scene():
    f = functionals_exact(DiskScene(np.zeros((0, 2)), np.zeros(0), (0, 0, 1, 1)))
    assert (f.v0, f.v1, f.v2) == (0.0, 0.0, 0.0)


def test_disjoint_disks():
    f = functionals_exact(scene([((0.0, 0.0), 1.0), ((5.0, 0.0), 2.0)]))
    assert f.v0 == 2
    assert f.v1 == pytest.approx(3 * math.pi)
    assert f.v2 == pytest.approx(5 * math.pi)


def test_lens_closed_form():
    for r1, r2, dist in [(1.0, 1.0, 1.0), (1.0, 0.6, 1.3), (2.0, 0.5, 1.8)]:
        f = functionals_exact(scene([((0.0, 0.0), r1), ((dist, 0.0), r2)]))
        assert f.v2 == pytest.approx(math.pi * (r1 * r1 + r2 * r2) - lens_area(r1, r2, dist), rel=1e-12)
        assert f.v0 == 1
    assert lens_area(1.0, 1.0, 1.0) == pytest.approx(2 * math.pi / 3 - math.sqrt(3) / 2, rel=1e-14)
    assert lens_area(1, 1, 3) == 0.0
    assert lens_area(2, 0.5, 0.2) == pytest.approx(math.pi * 0.25)


def test_lens_perimeter():
    # two unit disks at distance 1: each keeps an arc of angle 2 pi - 2 pi / 3
    f = functionals_exact(scene([((0.0, 0.0), 1.0), ((1.0, 0.0), 1.0)]))
    assert f.v1 == pytest.approx(0.5 * 2 * (2 * math.pi - 2 * math.pi / 3), rel=1e-13)


def test_triangle_hole():
    s = 1.9
    hs = scene([((0.0, 0.0), 1.0), ((s, 0.0), 1.0), ((0.5 * s, 0.5 * math.sqrt(3) * s), 1.0)])
    assert functionals_exact(hs).v0 == 0
    assert functionals_grid_oracle(hs, 256).v0 == 0
    signs = sorted(lp.orientation for lp in boundary_loops(hs))
    assert signs == [-1, 1]


def test_ring_of_disks_has_hole():
    n, R = 12, 3.0
    ring = [((R * math.cos(2 * math.pi * k / n), R * math.sin(2 * math.pi * k / n)), 1.0) for k in range(n)]
    assert functionals_exact(scene(ring)).v0 == 0
    assert functionals_exact(scene(ring + [((0.0, 0.0), 0.5)])).v0 == 1


def test_half_disk_clipped_by_window():
    f = functionals_exact(scene([((0.0, 0.0), 1.0)], (0.0, -5.0, 5.0, 5.0)))
    assert f.v2 == pytest.approx(math.pi / 2, rel=1e-13)
    assert f.v1 == pytest.approx(0.5 * (math.pi + 2.0), rel=1e-13)
    assert f.v0 == 1


def test_covering_disk():
    f = functionals_exact(scene([((5.0, 5.0), 10.0)], (0.0, 0.0, 10.0, 10.0)))
    assert (f.v0, f.v1, f.v2) == pytest.approx((1, 20, 100))


def test_disk_outside_window_ignored():
    f = functionals_exact(scene([((20.0, 0.0), 1.0), ((0.0, 0.0), 1.0)]))
    assert f.v0 == 1


def test_tangent_disks_are_degenerate():
    with pytest.raises(DegenerateConfiguration) as exc:
        functionals_exact(scene([((0.0, 0.0), 1.0), ((2.0, 0.0), 1.0)]))
    assert set(exc.value.indices) <= {0, 1} and exc.value.indices


def test_disk_tangent_to_window_is_degenerate():
    with pytest.raises(DegenerateConfiguration):
        functionals_exact(scene([((1.0, 1.0), 1.0)], (0.0, 0.0, 5.0, 5.0)))


def test_perturbation_resolves_tangency():
    sc = scene([((0.0, 0.0), 1.0), ((2.0, 0.0), 1.0)])
    moved = perturb_scene(sc, seed=3, index=1)
    assert np.linalg.norm(moved.centers[1] - sc.centers[1]) == pytest.approx(1e-7)
    f = functionals_exact(moved)
    assert f.v2 == pytest.approx(2 * math.pi, rel=1e-6)


def _random_scene(seed, n=10, L=6.0):
    rng = np.random.default_rng(seed)
    return DiskScene(rng.uniform(-1, L + 1, (n, 2)), rng.uniform(0.3, 1.4, n), (0.0, 0.0, L, L))


@given(st.integers(0, 10**6), st.floats(-50, 50), st.floats(-50, 50))
@settings(max_examples=40, deadline=None)
def test_translation_invariance(seed, dx, dy):
    sc = _random_scene(seed)
    a = functionals_exact(sc).as_array()
    b = functionals_exact(sc.translated([dx, dy])).as_array()
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-9)


@given(st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_permutation_invariance(seed):
    sc = _random_scene(seed)
    perm = np.random.default_rng(seed + 1).permutation(len(sc))
    other = DiskScene(sc.centers[perm], sc.radii[perm], sc.window)
    np.testing.assert_allclose(functionals_exact(sc).as_array(), functionals_exact(other).as_array(), rtol=1e-11, atol=1e-11)


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_additivity_over_separated_groups(seed):
    # two groups far apart in one wide window: the functionals add
    a = _random_scene(seed, n=6, L=4.0)
    b = _random_scene(seed + 7, n=6, L=4.0)
    keep_a = a.centers[:, 0] + a.radii < 3.9
    keep_b = (b.centers[:, 0] + b.radii < 3.9) & (b.centers[:, 0] - b.radii > 0.1)
    assume(keep_a.any() and keep_b.any())
    wa = DiskScene(a.centers[keep_a], a.radii[keep_a], (0.0, 0.0, 4.0, 4.0))
    wb = DiskScene(b.centers[keep_b], b.radii[keep_b], (0.0, 0.0, 4.0, 4.0))
    both = DiskScene(
        np.concatenate([wa.centers, wb.centers + [10.0, 0.0]]),
        np.concatenate([wa.radii, wb.radii]),
        (0.0, 0.0, 14.0, 4.0),
    )
    np.testing.assert_allclose(
        functionals_exact(both).as_array(),
        functionals_exact(wa).as_array() + functionals_exact(wb).as_array(),
        rtol=1e-10,
        atol=1e-10,
    )


@given(st.integers(0, 10**6))
@settings(max_examples=25, deadline=None)
def test_inclusion_exclusion_area(seed):
    rng = np.random.default_rng(seed)
    c = rng.uniform(-1.0, 1.0, (2, 2))
    r = rng.uniform(0.5, 1.5, 2)
    dist = float(np.linalg.norm(c[0] - c[1]))
    assume(abs(dist - abs(r[0] - r[1])) > 1e-6 and abs(dist - r.sum()) > 1e-6)
    f = functionals_exact(DiskScene(c, r, BIG))
    assert f.v2 == pytest.approx(math.pi * (r**2).sum() - lens_area(r[0], r[1], dist), rel=1e-12)


@given(st.integers(0, 10**6))
@settings(max_examples=15, deadline=None)
def test_grid_oracle_agreement(seed):
    sc = _random_scene(seed)
    ex = functionals_exact(sc)
    gr = functionals_grid_oracle(sc, 128)
    assert gr.v2 == pytest.approx(ex.v2, abs=2 * ex.v1 / 128)
    assert gr.v1 == pytest.approx(ex.v1, rel=2e-2)


def test_grid_oracle_euler_on_random_scenes():
    agree = sum(
        functionals_exact(_random_scene(s)).v0 == functionals_grid_oracle(_random_scene(s), 256).v0
        for s in range(30)
    )
    assert agree >= 29


def test_loops_close():
    for lp in boundary_loops(_random_scene(4)):
        assert lp.closure_gap < 1e-9


def test_json_round_trip(tmp_path):
    sc = _random_scene(11)
    back = DiskScene.from_json(sc.to_json())
    np.testing.assert_array_equal(back.centers, sc.centers)
    np.testing.assert_array_equal(back.radii, sc.radii)
    assert back.window == sc.window
    sc.dump(tmp_path / "s.json")
    assert DiskScene.load(tmp_path / "s.json").to_json() == sc.to_json()


def test_scene_validation():
    with pytest.raises(ValueError):
        DiskScene([[0, 0]], [-1.0], BIG)
    with pytest.raises(ValueError):
        DiskScene([[0, 0]], [1.0], (0, 0, -1, 1))
    with pytest.raises(ValueError):
        Disk((0.0, math.nan), 1.0)
    with pytest.raises(ValueError):
        functionals_grid_oracle(_random_scene(1), 4)
