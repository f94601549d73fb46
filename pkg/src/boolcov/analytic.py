"""Asymptotic covariances of intrinsic volumes for Boolean models with ball grains.

The unit-ball integrals ``f_d, g_d, h_d, k_d`` are evaluated once per
intensity; all covariances are linear combinations of them. General radii
follow from the scaling ``sigma_ij(gamma, r) = r^(i+j-d) sigma_ij(gamma r^d, 1)``.
"""

from __future__ import annotations

import contextlib
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    GrainSpec,
    Window,
    _boundary_covariogram_ext,
    ball_covariogram,
    flag_coefficient,
    unit_ball_volume,
    volume_fraction,
)
from .quadrature import QuadratureConfig, integrate_1d, integrate_2d

__all__ = [
    "ModelParams",
    "AnalyticReport",
    "DegenerateVariance",
    "f_d",
    "g_d",
    "h_d",
    "k_d",
    "g_d_radial",
    "h_d_radial",
    "sigma_vol_vol",
    "sigma_surf_vol",
    "sigma_surf_surf",
    "correlation_surf_vol",
    "chi",
    "chi_tilde",
    "sigma_2d",
    "sigma_matrix_2d",
    "correlation_2d",
    "moment_polynomial",
    "moment_polynomial_P",
    "mean_value",
    "rho_unit_disk",
    "rho_matrix_unit_disk",
    "sigma_from_rho",
    "sigma_surface_volume_report",
    "polynomial_matrix",
    "tolerance",
    "quadrature_config",
    "mean_density",
]

CFG_1D = QuadratureConfig(rel_tol=1e-10, abs_tol=1e-14)
_active = [CFG_1D]


def quadrature_config() -> QuadratureConfig:
    """Configuration used when a function is called without an explicit ``cfg``."""
    return _active[-1]


@contextlib.contextmanager
def tolerance(rel_tol: float):
    """Temporarily change the relative tolerance of every analytic integral."""
    _active.append(QuadratureConfig(rel_tol=rel_tol, abs_tol=min(1e-14, rel_tol * 1e-4)))
    try:
        yield _active[-1]
    finally:
        _active.pop()


def _cfg(cfg):
    return _active[-1] if cfg is None else cfg


class DegenerateVariance(ArithmeticError):
    pass


@dataclass(frozen=True)
class ModelParams:
    grain: GrainSpec
    gamma: float

    def __post_init__(self):
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise ValueError("intensity must be finite and non-negative")

    @classmethod
    def unit_ball(cls, d: int, gamma: float) -> "ModelParams":
        return cls(GrainSpec.ball(d, 1.0), gamma)

    @property
    def d(self) -> int:
        return self.grain.d

    @property
    def p(self) -> float:
        return volume_fraction(self.gamma, self.grain.v(self.d))

    def t(self, j: int) -> np.ndarray:
        """Arguments (gamma v_j, ..., gamma v_{d-1}) of the moment polynomials."""
        return self.gamma * np.asarray(self.grain.moments[j : self.d])


@dataclass
class AnalyticReport:
    """Symmetric table of sigma or rho values with quadrature error estimates."""

    kind: str
    d: int
    gamma: float
    entries: dict = field(default_factory=dict)

    def set(self, i: int, j: int, value: float, err: float = 0.0) -> None:
        self.entries[(min(i, j), max(i, j))] = (float(value), abs(float(err)))

    def __getitem__(self, key):
        i, j = key
        return self.entries[(min(i, j), max(i, j))][0]

    def err(self, i: int, j: int) -> float:
        return self.entries[(min(i, j), max(i, j))][1]

    def matrix(self) -> np.ndarray:
        n = self.d + 1
        m = np.full((n, n), np.nan)
        for (i, j), (v, _) in self.entries.items():
            m[i, j] = m[j, i] = v
        return m


# --------------------------------------------------------------------------
# unit-ball integrals


def _f(gamma: float, d: int, cfg=None):
    if gamma == 0:
        return 0.0, 0.0
    c = d * unit_ball_volume(d)
    val, err = integrate_1d(
        lambda t: np.expm1(gamma * ball_covariogram(d, t)) * t ** (d - 1), 0.0, 2.0, _cfg(cfg)
    )
    return c * val, c * err


def _chord(theta, s):
    # sqrt((2-t)^2 + t(2-t)s^2) with t = 1 - cos(theta)
    c = math.cos(theta)
    return np.sqrt((1.0 + c) ** 2 + (1.0 - c * c) * s * s)


def _ball_kernel_2d(d: int, phi, cfg):
    """(d-1) kappa_{d-1} int_0^2 int_0^1 phi(chord) s^(d-2) sqrt(t(2-t))^(d-1) ds dt.

    The outer variable is taken as t = 1 - cos(theta), which makes the
    square-root endpoint behaviour smooth.
    """
    c = (d - 1) * unit_ball_volume(d - 1)

    def integrand(theta, s):
        return phi(_chord(theta, s)) * s ** (d - 2) * math.sin(theta) ** d

    val, err = integrate_2d(integrand, (0.0, math.pi), (0.0, 1.0), _cfg(cfg))
    return c * val, c * err


def _g(gamma: float, d: int, cfg=None):
    return _ball_kernel_2d(d, lambda r: np.exp(gamma * ball_covariogram(d, r)), cfg)


def _h(gamma: float, d: int, cfg=None):
    # h_d carries no (d-1) kappa_{d-1} prefactor
    c = (d - 1) * unit_ball_volume(d - 1)
    val, err = _ball_kernel_2d(
        d,
        lambda r: np.exp(gamma * ball_covariogram(d, r)) * _boundary_covariogram_ext(d, r),
        _cfg(cfg),
    )
    return val / c, err / c


def _k(gamma: float, d: int, cfg=None):
    # s = 1 - cos(theta): sqrt(s(2-s))^(d-3) ds = sin(theta)^(d-2) d(theta)
    def integrand(theta):
        return np.sin(theta) ** (d - 2) * np.exp(
            gamma * ball_covariogram(d, np.sqrt(2.0 * (1.0 + np.cos(theta))))
        )

    return integrate_1d(integrand, 0.0, math.pi, _cfg(cfg))


def f_d(gamma: float, d: int) -> float:
    """d kappa_d int_0^2 (exp(gamma barC_d(t)) - 1) t^(d-1) dt."""
    if gamma < 0 or d < 1:
        raise ValueError("need gamma >= 0, d >= 1")
    return _f(gamma, d)[0]


def g_d(gamma: float, d: int) -> float:
    if gamma < 0 or d < 2:
        raise ValueError("need gamma >= 0, d >= 2")
    return _g(gamma, d)[0]


def h_d(gamma: float, d: int) -> float:
    if gamma < 0 or d < 2:
        raise ValueError("need gamma >= 0, d >= 2")
    return _h(gamma, d)[0]


def k_d(gamma: float, d: int) -> float:
    if gamma < 0 or d < 2:
        raise ValueError("need gamma >= 0, d >= 2")
    return _k(gamma, d)[0]


def _radial_surface(d: int, phi, cfg=None):
    # int_{B^d} phi(|v - y|) dy = int_0^2 phi(t) t^(d-1) Cap_d(t/2) dt
    return integrate_1d(
        lambda t: phi(t) * t ** (d - 1) * 2.0 * _boundary_covariogram_ext(d, t), 0.0, 2.0, _cfg(cfg)
    )


def g_d_radial(gamma: float, d: int) -> float:
    """g_d through the one-dimensional coarea reduction (independent route)."""
    return _radial_surface(d, lambda t: np.exp(gamma * ball_covariogram(d, t)))[0]


def h_d_radial(gamma: float, d: int) -> float:
    c = (d - 1) * unit_ball_volume(d - 1)
    val = _radial_surface(
        d,
        lambda t: np.exp(gamma * ball_covariogram(d, t)) * _boundary_covariogram_ext(d, t),
    )[0]
    return val / c


# --------------------------------------------------------------------------
# general-dimension surface / volume covariances


def _scaled(params: ModelParams, i: int, j: int):
    """Unit-radius intensity and the factor r^(i+j-d)."""
    r = params.grain.radius
    d = params.d
    return params.gamma * r**d, r ** (i + j - d)


def sigma_vol_vol(params: ModelParams, cfg=None) -> float:
    """sigma_{d,d} = (1-p)^2 int (exp(gamma C_d(x)) - 1) dx (any radius law)."""
    return _sigma_vol_vol(params, cfg)[0]


def _sigma_vol_vol(params: ModelParams, cfg=None):
    g, d = params.gamma, params.d
    if g == 0:
        return 0.0, 0.0
    grain = params.grain
    c = d * unit_ball_volume(d)
    diam = 2.0 * grain.max_radius
    kinks = sorted({2.0 * r for r in grain.radii if 2.0 * r < diam})
    val, err = integrate_1d(
        lambda t: np.expm1(g * grain.covariogram(t)) * t ** (d - 1), 0.0, diam, _cfg(cfg), points=kinks
    )
    q = (1.0 - params.p) ** 2
    return q * c * val, q * c * err


def _require_ball(params: ModelParams):
    if not params.grain.deterministic:
        raise ValueError("surface covariances are implemented for deterministic radii only")
    if params.d < 2:
        raise ValueError("surface covariances need d >= 2")


def sigma_surf_vol(params: ModelParams) -> float:
    """sigma_{d-1,d} = (1-p)^2 gamma v_{d-1} (g_d - f_d) for unit balls."""
    _require_ball(params)
    d = params.d
    g, scale = _scaled(params, d - 1, d)
    if g == 0:
        return 0.0
    v = d * unit_ball_volume(d) / 2.0
    q = math.exp(-2.0 * unit_ball_volume(d) * g)
    return scale * q * g * v * (_g(g, d)[0] - _f(g, d)[0])


def _surf_surf_unit(g: float, d: int) -> float:
    dk = d * unit_ball_volume(d)
    ck = (d - 1) * unit_ball_volume(d - 1)
    q = math.exp(-2.0 * unit_ball_volume(d) * g)
    bracket = (dk / 2) ** 2 * _f(g, d)[0] - dk**2 / 2 * _g(g, d)[0] + dk * ck / 2 * _h(g, d)[0]
    # the k_d term carries 1/gamma; multiplied out so gamma -> 0 is safe
    return q * (g * g * bracket + g * dk * ck / 4 * _k(g, d)[0])


def sigma_surf_surf(params: ModelParams) -> float:
    """sigma_{d-1,d-1} for ball grains."""
    _require_ball(params)
    g, scale = _scaled(params, params.d - 1, params.d - 1)
    if g == 0:
        return 0.0
    return scale * _surf_surf_unit(g, params.d)


def sigma_surface_volume_report(params: ModelParams) -> AnalyticReport:
    """sigma_{d-1,d-1}, sigma_{d-1,d}, sigma_{d,d} with quadrature error estimates."""
    _require_ball(params)
    d = params.d
    rep = AnalyticReport("sigma", d, params.gamma)
    g = params.gamma * params.grain.radius**d
    r = params.grain.radius
    if g == 0:
        for key in [(d - 1, d - 1), (d - 1, d), (d, d)]:
            rep.set(*key, 0.0)
        return rep
    dk = d * unit_ball_volume(d)
    ck = (d - 1) * unit_ball_volume(d - 1)
    q = math.exp(-2.0 * unit_ball_volume(d) * g)
    (f, fe), (gg, ge), (h, he), (k, ke) = _f(g, d), _g(g, d), _h(g, d), _k(g, d)
    rep.set(d, d, r**d * q * f, r**d * q * fe)
    rep.set(d - 1, d, r ** (d - 1) * q * g * dk / 2 * (gg - f), r ** (d - 1) * q * g * dk / 2 * (ge + fe))
    ss = q * (g * g * ((dk / 2) ** 2 * f - dk**2 / 2 * gg + dk * ck / 2 * h) + g * dk * ck / 4 * k)
    se = q * (g * g * ((dk / 2) ** 2 * fe + dk**2 / 2 * ge + dk * ck / 2 * he) + g * dk * ck / 4 * ke)
    rep.set(d - 1, d - 1, r ** (d - 2) * ss, r ** (d - 2) * se)
    return rep


def correlation_surf_vol(params: ModelParams) -> float:
    """Asymptotic correlation of surface area and volume."""
    rep = sigma_surface_volume_report(params)
    d = params.d
    svv, sss = rep[d, d], rep[d - 1, d - 1]
    if svv <= 1e-300 or sss <= 1e-300:
        raise DegenerateVariance(f"variances {svv}, {sss} not positive")
    return rep[d - 1, d] / math.sqrt(svv * sss)


# --------------------------------------------------------------------------
# planar unit-disk model


def chi(r, gamma: float):
    """4 gamma^3 exp(gamma C_2(r)) (gamma C_1(r) - pi gamma + 1) for the unit disk."""
    r = np.asarray(r, dtype=float)
    out = (
        4.0
        * gamma**3
        * np.exp(gamma * ball_covariogram(2, r))
        * (gamma * _boundary_covariogram_ext(2, r) - math.pi * gamma + 1.0)
    )
    return out if out.ndim else float(out)


def chi_tilde(r, gamma: float):
    """gamma^2 exp(gamma C_2(r)) (3 pi gamma - 2 C_1(r) gamma - 1) for the unit disk."""
    r = np.asarray(r, dtype=float)
    out = (
        gamma**2
        * np.exp(gamma * ball_covariogram(2, r))
        * (3.0 * math.pi * gamma - 2.0 * gamma * _boundary_covariogram_ext(2, r) - 1.0)
    )
    return out if out.ndim else float(out)


def _k2_theta(gamma: float, cfg=None):
    # int_0^pi exp(gamma barC_2(sqrt(2(1 - cos t)))) dt
    return integrate_1d(
        lambda t: np.exp(gamma * ball_covariogram(2, np.sqrt(2.0 * (1.0 - np.cos(t))))),
        0.0,
        math.pi,
        _cfg(cfg),
    )


def _disk_pair_integral(phi, cfg=None):
    # int_0^2 int_0^1 phi(chord) sqrt(t(2-t)) ds dt  (= the 2D kernel / 2)
    v, e = _ball_kernel_2d(2, phi, cfg)
    return v / 2.0, e / 2.0


def _sigma_2d_entries(gamma: float) -> dict:
    """All six planar sigma_{i,j} with error estimates, from the closed unit-disk forms."""
    pi = math.pi
    p = -math.expm1(-pi * gamma)
    q = (1.0 - p) ** 2
    f, fe = _f(gamma, 2)
    g, ge = _g(gamma, 2)
    h, he = _h(gamma, 2)
    k, ke = _k(gamma, 2)
    kt, kte = _k2_theta(gamma)
    x, xe = _disk_pair_integral(lambda r: chi(r, gamma))
    xt, xte = _disk_pair_integral(lambda r: chi_tilde(r, gamma))
    a = 1.0 - pi * gamma
    out = {}
    out[(0, 0)] = (
        (1 - 2 * p) * (1 - p) * gamma
        + (1 - p) * (2 * p - 3) * gamma**2 * pi
        + q * gamma**2 * a**2 * f
        + q * 2 * pi * x
        + q * gamma**3 * 4 * pi * kt,
        q * (gamma**2 * a**2 * fe + 2 * pi * xe + 4 * pi * gamma**3 * kte),
    )
    out[(0, 1)] = (
        q * gamma * pi
        + q * gamma**2 * pi * a * f
        + q * 2 * pi * xt
        - q * gamma**2 * 2 * pi * kt,
        q * (gamma**2 * pi * abs(a) * fe + 2 * pi * xte + 2 * pi * gamma**2 * kte),
    )
    out[(0, 2)] = (
        p * (1 - p) - q * gamma * a * f - q * 2 * gamma**2 * pi * g,
        q * (gamma * abs(a) * fe + 2 * gamma**2 * pi * ge),
    )
    out[(1, 1)] = (
        q * (gamma**2 * (pi**2 * f - 2 * pi**2 * g + 2 * pi * h) + gamma * pi * k),
        q * (gamma**2 * (pi**2 * fe + 2 * pi**2 * ge + 2 * pi * he) + gamma * pi * ke),
    )
    out[(1, 2)] = (q * gamma * pi * (g - f), q * gamma * pi * (ge + fe))
    out[(2, 2)] = (q * f, q * fe)
    return out


def sigma_matrix_2d(gamma: float) -> AnalyticReport:
    """Full 3x3 asymptotic covariance table of (V_0, V_1, V_2), unit-disk grain."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    rep = AnalyticReport("sigma", 2, gamma)
    if gamma == 0:
        for i, j in itertools.combinations_with_replacement(range(3), 2):
            rep.set(i, j, 0.0)
        return rep
    for (i, j), (v, e) in _sigma_2d_entries(gamma).items():
        rep.set(i, j, v, e)
    return rep


def sigma_2d(i: int, j: int, gamma: float) -> float:
    """One entry sigma_{i,j}(gamma) of the planar unit-disk covariance matrix."""
    if gamma == 0:
        return 0.0
    return _sigma_2d_single(min(i, j), max(i, j), gamma)


def _sigma_2d_single(i: int, j: int, gamma: float) -> float:
    # cheaper paths for entries used inside root/extremum searches
    pi = math.pi
    p = -math.expm1(-pi * gamma)
    q = (1.0 - p) ** 2
    a = 1.0 - pi * gamma
    if (i, j) == (2, 2):
        return q * _f(gamma, 2)[0]
    if (i, j) == (1, 2):
        return q * gamma * pi * (_g(gamma, 2)[0] - _f(gamma, 2)[0])
    if (i, j) == (0, 2):
        return p * (1 - p) - q * gamma * a * _f(gamma, 2)[0] - q * 2 * gamma**2 * pi * _g(gamma, 2)[0]
    if (i, j) == (0, 1):
        return (
            q * gamma * pi
            + q * gamma**2 * pi * a * _f(gamma, 2)[0]
            + q * 2 * pi * _disk_pair_integral(lambda r: chi_tilde(r, gamma))[0]
            - q * gamma**2 * 2 * pi * _k2_theta(gamma)[0]
        )
    return sigma_matrix_2d(gamma)[i, j]


def correlation_2d(i: int, j: int, gamma: float) -> float:
    rep = sigma_matrix_2d(gamma)
    return rep[i, j] / math.sqrt(rep[i, i] * rep[j, j])


# --------------------------------------------------------------------------
# moment polynomials and means


def _compositions(s: int, total: int, lo: int, hi: int):
    """Tuples (m_1..m_s) with lo <= m_i <= hi and sum == total."""
    return [m for m in itertools.product(range(lo, hi + 1), repeat=s) if sum(m) == total]


def moment_polynomial(j: int, l: int, t, d: int | None = None) -> float:
    """P_{j,l}(t_j, ..., t_{d-1}); ``t`` has length d - j (d inferred if omitted)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if d is None:
        d = j + len(t)
    if not 0 <= j <= l <= d:
        raise ValueError("need 0 <= j <= l <= d")
    if j == d:
        return 1.0
    if len(t) != d - j:
        raise ValueError("t must hold (t_j, ..., t_{d-1})")
    total = 1.0 if l == j else 0.0
    acc = 0.0
    for s in range(1, l - j + 1):
        inner = 0.0
        for ms in _compositions(s, s * d + j - l, j, d - 1):
            inner += math.prod(flag_coefficient(m, d) * t[m - j] for m in ms)
        acc += (-1) ** s / math.factorial(s) * inner
    return total + flag_coefficient(l, j) * acc


def moment_polynomial_P(j: int, t, d: int | None = None) -> float:
    """P_j(t_j, ..., t_{d-1}) giving rho_{0,j} = exp(gamma v_d) P_j."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if d is None:
        d = j + len(t)
    if not 0 <= j < d or len(t) != d - j:
        raise ValueError("need 0 <= j < d and len(t) == d - j")
    acc = 0.0
    for l in range(1, d - j + 1):
        inner = 0.0
        for ms in _compositions(l, (l - 1) * d + j, j, d - 1):
            inner += math.prod(flag_coefficient(m, d) * t[m - j] for m in ms)
        acc += inner / math.factorial(l)
    return flag_coefficient(d, j) * acc


def mean_value(i: int, params: ModelParams, w: Window) -> float:
    """E V_i(Z cap W) for an isotropic Boolean model with ball grains."""
    d = params.d
    if w.d != d:
        raise ValueError("window and grain dimensions differ")
    vw = w.intrinsic_volumes()
    p = params.p
    if i == d:
        return p * vw[d]
    t = params.t(i)
    return vw[i] - (1 - p) * sum(vw[k] * moment_polynomial(i, k, t, d) for k in range(i, d + 1))


def mean_density(i: int, params: ModelParams) -> float:
    """Density of V_i, the limit of E V_i(Z cap W) / V_d(W) as W grows."""
    d = params.d
    if not 0 <= i <= d:
        raise ValueError(f"i must lie in 0..{d}")
    if i == d:
        return params.p
    return -(1 - params.p) * moment_polynomial(i, d, params.t(i), d)


# --------------------------------------------------------------------------
# rho numbers for the unit disk and the bilinear map to sigma


def _disk_radial(phi, cfg=None):
    """int_{R^2} phi(|x|) barC_1(|x|) dx, the M_{1,2} push-forward integral."""
    return integrate_1d(
        lambda t: phi(t) * _boundary_covariogram_ext(2, t) * 2.0 * math.pi * t, 0.0, 2.0, _cfg(cfg)
    )


def _circle_pair(phi, cfg=None):
    """int phi(y - z) M_{1,1}(d(y,z)) for the unit circle, phi radial.

    The difference of two uniform boundary points has radial density
    1 / (t sqrt(4 - t^2)); with t = 2 sin(u) this becomes a smooth integral.
    """
    return integrate_1d(lambda u: 2.0 * math.pi * phi(2.0 * np.sin(u)), 0.0, math.pi / 2, _cfg(cfg))


def rho_matrix_unit_disk(gamma: float) -> AnalyticReport:
    """rho_{i,j}, i, j in {0, 1, 2}, for the planar unit-disk model."""
    pi = math.pi
    rep = AnalyticReport("rho", 2, gamma)
    e = math.exp(gamma * pi)
    c2 = lambda t: ball_covariogram(2, t)  # noqa: E731
    rep.set(0, 0, e * (gamma + gamma**2 * pi))
    rep.set(0, 1, e * gamma * pi)
    rep.set(0, 2, math.expm1(gamma * pi))
    r12, e12 = _disk_radial(lambda t: np.exp(gamma * c2(t)))
    rep.set(1, 2, gamma * r12, gamma * e12)
    a, ea = _disk_radial(lambda t: np.exp(gamma * c2(t)) * _boundary_covariogram_ext(2, t))
    b, eb = _circle_pair(lambda t: np.exp(gamma * c2(t)))
    rep.set(1, 1, gamma**2 * a + gamma * b, gamma**2 * ea + gamma * eb)
    r22, e22 = integrate_1d(lambda t: np.expm1(gamma * c2(t)) * 2.0 * pi * t, 0.0, 2.0, _cfg(None))
    rep.set(2, 2, r22, e22)
    return rep


def rho_unit_disk(i: int, j: int, gamma: float) -> float:
    return rho_matrix_unit_disk(gamma)[i, j]


def sigma_from_rho(rho, params: ModelParams) -> np.ndarray:
    """Bilinear map (1-p)^2 sum_k sum_l P_{i,k} P_{j,l} rho_{k,l}.

    ``rho`` is a symmetric (d+1)x(d+1) array (or an :class:`AnalyticReport`).
    """
    if isinstance(rho, AnalyticReport):
        rho = rho.matrix()
    rho = np.asarray(rho, dtype=float)
    d = params.d
    if rho.shape != (d + 1, d + 1):
        raise ValueError("rho must be (d+1)x(d+1)")
    P = polynomial_matrix(params)
    return (1.0 - params.p) ** 2 * P @ rho @ P.T


def polynomial_matrix(params: ModelParams) -> np.ndarray:
    """Upper-triangular matrix with entries P_{i,k}(gamma v_i, ..., gamma v_{d-1})."""
    d = params.d
    P = np.zeros((d + 1, d + 1))
    for i in range(d + 1):
        t = params.t(i)
        for k in range(i, d + 1):
            P[i, k] = moment_polynomial(i, k, t, d)
    return P
