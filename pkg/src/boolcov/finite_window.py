"""Exact second moments on bounded windows.

For a rectangle ``[0, a] x [0, b]`` the set covariance ``C_W(t u)`` and the
boundary overlap ``Phi_1(W; W + t u)`` have closed-form averages over the
direction ``u``; every finite-window quantity below is therefore a
one-dimensional radial integral over ``[0, 2r]``.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .analytic import (
    AnalyticReport,
    ModelParams,
    _cfg,
    _circle_pair,
    polynomial_matrix,
    rho_matrix_unit_disk,
    sigma_vol_vol,
)
from .geometry import Window, _boundary_covariogram_ext, ball_covariogram, unit_ball_volume
from .quadrature import integrate_1d, integrate_2d

__all__ = [
    "UnsupportedWindow",
    "exact_volume_variance",
    "rect_angular_averages",
    "rho_window_2d",
    "remainders_2d",
    "finite_window_matrix_2d",
    "finite_window_covariance_2d",
    "variance_rate_curve",
]


class UnsupportedWindow(ValueError):
    pass


def _sphere_abs_moment(d: int, k: int) -> float:
    # E prod_{i<=k} |u_i| for u uniform on S^{d-1}
    return math.pi ** (-k / 2) * math.gamma(d / 2) / math.gamma((d + k) / 2)


def rect_angular_averages(a: float, b: float, t):
    """Direction averages of ``C_W(t u)`` and ``Phi_1(W; W + t u)`` for ``W = [0,a] x [0,b]``."""
    t = np.asarray(t, dtype=float)
    ts = np.maximum(t, 1e-300)
    lo = np.where(t > a, np.arccos(np.minimum(1.0, a / ts)), 0.0)
    hi = np.where(t > b, np.arcsin(np.minimum(1.0, b / ts)), 0.5 * math.pi)
    hi = np.maximum(hi, lo)
    dth = hi - lo
    icos = np.sin(hi) - np.sin(lo)
    isin = np.cos(lo) - np.cos(hi)
    isc = 0.5 * (np.sin(hi) ** 2 - np.sin(lo) ** 2)
    cw = a * b * dth - b * t * icos - a * t * isin + t * t * isc
    phi = 0.5 * ((a + b) * dth - t * (icos + isin))
    return cw * (2.0 / math.pi), phi * (2.0 / math.pi)


def _radial_kinks(w: Window, diam: float) -> list[float]:
    return sorted({s for s in w.sides if 0.0 < s < diam})


def exact_volume_variance(params: ModelParams, w: Window, cfg=None) -> float:
    """Var V_d(Z cap W) = (1-p)^2 int C_W(x) (exp(gamma C_d(x)) - 1) dx."""
    d, g = params.d, params.gamma
    if w.d != d:
        raise ValueError("window and grain dimensions differ")
    if g == 0:
        return 0.0
    grain = params.grain
    diam = 2.0 * grain.max_radius
    q = (1.0 - params.p) ** 2
    kinks = sorted({2.0 * r for r in grain.radii if 2.0 * r < diam})

    def excess(t):
        return np.expm1(g * grain.covariogram(t))

    if w.shape == "ball":
        R = w.radius
        c = d * unit_ball_volume(d)
        f = lambda t: excess(t) * t ** (d - 1) * R**d * ball_covariogram(d, t / R)  # noqa: E731
        return q * c * integrate_1d(f, 0.0, min(diam, 2 * R), _cfg(cfg), points=kinks)[0]

    sides = np.asarray(w.sides)
    if d == 1:
        s = sides[0]
        f = lambda t: 2.0 * excess(t) * np.maximum(s - t, 0.0)  # noqa: E731
        return q * integrate_1d(f, 0.0, min(diam, s), _cfg(cfg), points=kinks)[0]
    if d == 2:
        a, b = sides
        f = lambda t: 2 * math.pi * t * excess(t) * rect_angular_averages(a, b, t)[0]  # noqa: E731
        pts = kinks + _radial_kinks(w, diam)
        return q * integrate_1d(f, 0.0, min(diam, math.hypot(a, b)), _cfg(cfg), points=pts)[0]
    if sides.min() >= diam:
        # polar coordinates with the exact direction moments of prod (s_i - t|u_i|)
        v = w.intrinsic_volumes()
        c = d * unit_ball_volume(d)
        total = 0.0
        for k in range(d + 1):
            m = _sphere_abs_moment(d, k)
            val = integrate_1d(lambda t: t ** (k + d - 1) * excess(t), 0.0, diam, _cfg(cfg), points=kinks)[0]
            total += (-1) ** k * v[d - k] * m * val
        return q * c * total
    if d == 3:
        return q * _box3_numeric(sides, excess, diam)
    raise UnsupportedWindow("boxes with a side below the grain diameter need d <= 3")


def _box3_numeric(sides, excess, diam) -> float:
    # 8 * int over the positive octant in spherical coordinates
    a, b, c = sides

    def radial(t):
        def inner(phi, th):
            u1 = np.sin(th) * np.cos(phi)
            u2 = np.sin(th) * np.sin(phi)
            u3 = np.cos(th)
            cw = (
                np.maximum(a - t * u1, 0.0)
                * np.maximum(b - t * u2, 0.0)
                * np.maximum(c - t * u3, 0.0)
            )
            return cw * np.sin(th)

        return integrate_2d(inner, (0.0, 0.5 * math.pi), (0.0, 0.5 * math.pi), _cfg(None).tightened(100))[0]

    def f(ts):
        return np.array([8.0 * t * t * float(excess(t)) * radial(t) for t in ts])

    return integrate_1d(f, 0.0, diam, _cfg(None).tightened(100), points=[s for s in sides if s < diam])[0]


# --------------------------------------------------------------------------
# planar unit disk on a rectangle


def _rect(w: Window) -> tuple[float, float]:
    if w.shape != "box" or w.d != 2:
        raise UnsupportedWindow("finite-window covariances are implemented for rectangles")
    return w.sides


def _boundary_pair_integral(a: float, b: float, f, cfg=None) -> float:
    """int_{dW} int_{dW} f(|y - z|) dy dz for the rectangle, f supported on [0, 2]."""

    def same(L):
        return 2.0 * integrate_1d(lambda u: (L - u) * f(u), 0.0, min(L, 2.0), _cfg(cfg))[0]

    def opposite(L, h):
        if h >= 2.0:
            return 0.0
        top = min(L, math.sqrt(4.0 - h * h))
        return 2.0 * integrate_1d(lambda u: (L - u) * f(np.sqrt(u * u + h * h)), 0.0, top, _cfg(cfg))[0]

    def corner(la, lb):
        # polar angle of [0, la] x [0, lb] at radius rho
        def g(rho):
            lo = np.where(rho > la, np.arccos(np.minimum(1.0, la / rho)), 0.0)
            hi = np.where(rho > lb, np.arcsin(np.minimum(1.0, lb / rho)), 0.5 * math.pi)
            return f(rho) * rho * np.maximum(hi - lo, 0.0)

        pts = [s for s in (la, lb) if s < 2.0]
        return integrate_1d(g, 0.0, min(2.0, math.hypot(la, lb)), _cfg(cfg), points=pts)[0]

    return (
        2 * same(a) + 2 * same(b) + 2 * opposite(a, b) + 2 * opposite(b, a) + 8 * corner(a, b)
    )


def _window_radial(a: float, b: float, phi, which: int, cfg=None):
    # int_{R^2} phi(|x|) A(x) dx with A = C_W (which=0) or Phi_1(W; W+x) (which=1)
    pts = [s for s in (a, b) if s < 2.0]
    return integrate_1d(
        lambda t: 2 * math.pi * t * phi(t) * rect_angular_averages(a, b, t)[which], 0.0, 2.0, _cfg(cfg), points=pts
    )[0]


def remainders_2d(gamma: float, w: Window) -> dict:
    """Boundary corrections r_{i,j}(W) for the unit-disk model on a rectangle."""
    a, b = _rect(w)
    e = math.exp(gamma * math.pi)
    v1 = a + b
    c2 = lambda t: ball_covariogram(2, t)  # noqa: E731
    c1 = lambda t: _boundary_covariogram_ext(2, t)  # noqa: E731
    r = {(0, 2): 0.0, (2, 2): 0.0}
    r[(0, 1)] = v1 * math.expm1(gamma * math.pi)
    r[(0, 0)] = 2.0 * gamma * e * v1 + math.expm1(gamma * math.pi)
    r[(1, 2)] = _window_radial(a, b, lambda t: np.expm1(gamma * c2(t)), 1)
    r[(1, 1)] = 2.0 * gamma * _window_radial(
        a, b, lambda t: np.exp(gamma * c2(t)) * c1(t), 1
    ) + 0.25 * _boundary_pair_integral(a, b, lambda u: np.expm1(gamma * c2(u)))
    return r


def rho_window_2d(gamma: float, w: Window) -> AnalyticReport:
    """rho_{i,j}(W): C_W-weighted main terms plus remainders (unit disk, rectangle)."""
    a, b = _rect(w)
    area = a * b
    rep = AnalyticReport("rho_W", 2, gamma)
    if gamma == 0:
        for key in [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]:
            rep.set(*key, 0.0)
        return rep
    rho = rho_matrix_unit_disk(gamma)
    rem = remainders_2d(gamma, w)
    c2 = lambda t: ball_covariogram(2, t)  # noqa: E731
    c1 = lambda t: _boundary_covariogram_ext(2, t)  # noqa: E731
    main = {
        (0, 0): area * rho[0, 0],
        (0, 1): area * rho[0, 1],
        (0, 2): area * rho[0, 2],
        (2, 2): _window_radial(a, b, lambda t: np.expm1(gamma * c2(t)), 0),
        (1, 2): gamma * _window_radial(a, b, lambda t: np.exp(gamma * c2(t)) * c1(t), 0),
    }
    pair = _circle_pair(
        lambda t: np.exp(gamma * c2(t)) * rect_angular_averages(a, b, t)[0]
    )[0]
    main[(1, 1)] = gamma**2 * _window_radial(
        a, b, lambda t: np.exp(gamma * c2(t)) * c1(t) ** 2, 0
    ) + gamma * pair
    for key, val in main.items():
        rep.set(*key, val + rem[key])
    return rep


def finite_window_matrix_2d(gamma: float, w: Window) -> np.ndarray:
    """Cov(V_i(Z cap W), V_j(Z cap W)), i, j in {0, 1, 2}, unit-disk grain."""
    params = ModelParams.unit_ball(2, gamma)
    P = polynomial_matrix(params)
    rho = rho_window_2d(gamma, w).matrix()
    out = (1.0 - params.p) ** 2 * P @ rho @ P.T
    return 0.5 * (out + out.T)


def finite_window_covariance_2d(i: int, j: int, gamma: float, w: Window) -> float:
    if not (0 <= i <= 2 and 0 <= j <= 2):
        raise ValueError("indices must lie in {0, 1, 2}")
    return float(finite_window_matrix_2d(gamma, w)[i, j])


def variance_rate_curve(params: ModelParams, sides: Sequence[float]) -> list[tuple[float, float]]:
    """(L, |Var V_d(Z cap [0,L]^d) / L^d - sigma_dd| * L / 2) for each L."""
    d = params.d
    sigma = sigma_vol_vol(params)
    out = []
    for L in sides:
        if L < 2:
            raise ValueError("window sides must be >= 2")
        var = exact_volume_variance(params, Window.cube(L, d))
        out.append((float(L), abs(var / L**d - sigma) * L / 2.0))
    return out
