import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from boolcov.geometry import (
    GrainSpec,
    Window,
    _kappa_recursive,
    ball_boundary_covariogram,
    ball_covariogram,
    ball_covariogram_quad,
    cap_area,
    flag_coefficient,
    intrinsic_volumes_ball,
    intrinsic_volumes_box,
    set_covariance,
    two_point_coverage,
    unit_ball_volume,
    volume_fraction,
)

dims = st.integers(min_value=1, max_value=8)


def test_unit_ball_volumes():
    assert unit_ball_volume(0) == 1.0
    assert unit_ball_volume(1) == pytest.approx(2.0, rel=1e-15)
    assert unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-15)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-15)
    with pytest.raises(ValueError):
        unit_ball_volume(-1)


@given(dims)
def test_kappa_matches_recursion(d):
    assert unit_ball_volume(d) == pytest.approx(_kappa_recursive(d), rel=1e-13)


def test_ball_intrinsic_volumes_disk():
    v = intrinsic_volumes_ball(2, 2.0)
    np.testing.assert_allclose(v, [1.0, 2 * math.pi, 4 * math.pi], rtol=1e-14)


def test_box_intrinsic_volumes():
    np.testing.assert_allclose(intrinsic_volumes_box([2.0, 3.0, 5.0]), [1, 10, 31, 30])


@given(
    st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.01, 3)
)
def test_steiner_formula_rectangle(a, b, r):
    # V_2(W + B_r) for a rectangle, written out directly
    direct = a * b + 2 * (a + b) * r + math.pi * r * r
    assert Window.box(a, b).dilated_volume(r) == pytest.approx(direct, rel=1e-12)


def test_steiner_formula_ball_window():
    w = Window.ball(1.5, 3)
    assert w.dilated_volume(0.5) == pytest.approx(4 / 3 * math.pi * 2.0**3, rel=1e-12)


def test_flag_coefficient():
    assert flag_coefficient(2, 1) == pytest.approx(math.pi)
    assert flag_coefficient(3, 3) == 1.0


def test_covariogram_closed_forms():
    t = np.linspace(0.0, 2.0, 41)
    disk = 2 * np.arccos(t / 2) - (t / 2) * np.sqrt(4 - t * t)
    np.testing.assert_allclose(ball_covariogram(2, t), disk, atol=1e-14)
    ball3 = 4 * math.pi / 3 * (1 - 3 * t / 4 + t**3 / 16)
    np.testing.assert_allclose(ball_covariogram(3, t), ball3, atol=1e-13)
    np.testing.assert_allclose(ball_covariogram(1, t), 2 - t, atol=1e-15)
    assert ball_covariogram(4, 2.5) == 0.0


@given(dims, st.floats(0.0, 1.999))
@settings(max_examples=60, deadline=None)
def test_covariogram_quadrature_route(d, t):
    assert ball_covariogram(d, t) == pytest.approx(ball_covariogram_quad(d, t), rel=1e-10, abs=1e-14)


def test_covariogram_small_shift_keeps_precision():
    # 1 - (t/2)^2 rounds to 1 for tiny t; the closed form must still see t
    for t in (1e-9, 1e-12):
        assert ball_covariogram(1, t) == pytest.approx(2 - t, rel=1e-15)
        assert ball_covariogram(3, t) == pytest.approx(4 * math.pi / 3 * (1 - 3 * t / 4), rel=1e-15)


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_covariogram_integrates_to_kappa_squared(d):
    # int_{R^d} C_d(x) dx = kappa_d^2
    k = unit_ball_volume(d)
    val = integrate.quad(lambda t: d * k * t ** (d - 1) * ball_covariogram(d, t), 0, 2, epsabs=1e-13)[0]
    assert val == pytest.approx(k * k, rel=1e-10)


def test_boundary_covariogram_values():
    t = np.linspace(0.05, 2.0, 20)
    np.testing.assert_allclose(ball_boundary_covariogram(2, t), np.arccos(t / 2), atol=1e-14)
    np.testing.assert_allclose(ball_boundary_covariogram(3, t), math.pi * (1 - t / 2), atol=1e-13)
    assert ball_boundary_covariogram(3, 1e-12) == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        ball_boundary_covariogram(2, 0.0)
    with pytest.raises(ValueError):
        ball_boundary_covariogram(2, 2.5)


@given(st.integers(2, 7))
def test_cap_at_zero_is_half_sphere(d):
    full = d * unit_ball_volume(d)
    assert cap_area(d, 0.0) == pytest.approx(full / 2, rel=1e-13)
    assert cap_area(d, 1.0) == pytest.approx(0.0, abs=1e-14)


def test_covariogram_derivative_is_boundary_covariogram():
    # d/dt barC_d(t) = -kappa_{d-1} (1 - t^2/4)^((d-1)/2); at d = 2 that is -2 sqrt(1 - t^2/4)
    h = 1e-6
    for t in (0.3, 1.0, 1.7):
        num = (ball_covariogram(2, t + h) - ball_covariogram(2, t - h)) / (2 * h)
        assert num == pytest.approx(-2 * math.sqrt(1 - t * t / 4), rel=1e-7)


def test_volume_fraction():
    assert volume_fraction(0.0, 3.0) == 0.0
    assert volume_fraction(math.inf, 1.0) == 1.0
    assert volume_fraction(0.5, 2.0) == pytest.approx(1 - math.exp(-1))
    with pytest.raises(ValueError):
        volume_fraction(-1, 1)


def test_grain_mixture_moments():
    g = GrainSpec(2, (1.0, 2.0), (0.5, 0.5))
    assert g.v(2) == pytest.approx(0.5 * math.pi + 0.5 * 4 * math.pi)
    assert not g.deterministic
    assert g.max_radius == 2.0
    with pytest.raises(ValueError):
        g.radius
    with pytest.raises(ValueError):
        GrainSpec(2, (1.0,), (0.5,))
    # mixture covariogram = weighted scaled covariograms
    assert g.covariogram(1.0) == pytest.approx(
        0.5 * ball_covariogram(2, 1.0) + 0.5 * 4 * ball_covariogram(2, 0.5)
    )


def test_two_point_coverage_limits():
    g = GrainSpec.ball(2)
    p = volume_fraction(0.4, math.pi)
    assert two_point_coverage(0.4, g, [0.0, 0.0]) == pytest.approx(p, rel=1e-13)
    assert two_point_coverage(0.4, g, [3.0, 0.0]) == pytest.approx(p * p, rel=1e-13)


@given(st.floats(0.5, 5), st.floats(0.5, 5), st.floats(-6, 6), st.floats(-6, 6))
def test_box_set_covariance(a, b, x, y):
    c = set_covariance(Window.box(a, b), [x, y])
    assert c == pytest.approx(max(0.0, a - abs(x)) * max(0.0, b - abs(y)))


def test_ball_set_covariance():
    w = Window.ball(2.0, 2)
    assert set_covariance(w, [0.0, 0.0]) == pytest.approx(4 * math.pi)
    assert set_covariance(w, [4.5, 0.0]) == 0.0


def test_window_validation():
    with pytest.raises(ValueError):
        Window.box(1.0, -2.0)
    with pytest.raises(ValueError):
        Window("hexagon")
    assert Window.cube(3.0, 3).volume == pytest.approx(27.0)
    assert Window.ball(2.0, 2).inradius == 2.0
