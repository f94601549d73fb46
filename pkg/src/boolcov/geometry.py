"""Closed-form geometry of balls, boxes and their covariograms.

Everything here is a pure function of its arguments. Ball quantities are
computed for the unit ball and rescaled, which is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

__all__ = [
    "GrainSpec",
    "Window",
    "unit_ball_volume",
    "intrinsic_volumes_ball",
    "intrinsic_volumes_box",
    "flag_coefficient",
    "ball_covariogram",
    "ball_covariogram_quad",
    "ball_boundary_covariogram",
    "cap_area",
    "volume_fraction",
    "two_point_coverage",
    "set_covariance",
]


def unit_ball_volume(n: int) -> float:
    """kappa_n = pi^(n/2) / Gamma(n/2 + 1)."""
    if n < 0:
        raise ValueError("dimension must be non-negative")
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _kappa_recursive(n: int) -> float:
    # Used only to cross-check the Gamma formula.
    k = 1.0
    for m in range(1, n + 1):
        k *= math.sqrt(math.pi) * math.gamma((m + 1) / 2) / math.gamma(m / 2 + 1)
    return k


def intrinsic_volumes_ball(d: int, r: float) -> np.ndarray:
    """(V_0, ..., V_d) of a d-ball of radius r: binom(d,j) kappa_d / kappa_{d-j} r^j."""
    if d < 1 or r <= 0:
        raise ValueError("need d >= 1 and r > 0")
    kd = unit_ball_volume(d)
    return np.array(
        [math.comb(d, j) * kd / unit_ball_volume(d - j) * r**j for j in range(d + 1)]
    )


def intrinsic_volumes_box(sides: Sequence[float]) -> np.ndarray:
    """Intrinsic volumes of an axis-parallel box: elementary symmetric polynomials of the sides."""
    s = np.asarray(sides, dtype=float)
    if s.ndim != 1 or s.size == 0 or np.any(s <= 0):
        raise ValueError("sides must be a non-empty vector of positive lengths")
    # coefficients of prod (1 + s_i x) are e_0, e_1, ..., e_d
    poly = np.array([1.0])
    for si in s:
        poly = np.convolve(poly, [1.0, si])
    return poly


def flag_coefficient(m: int, j: int) -> float:
    """c^m_j = m! kappa_m / (j! kappa_j)."""
    return (
        math.factorial(m)
        * unit_ball_volume(m)
        / (math.factorial(j) * unit_ball_volume(j))
    )


def _half_beta_integral(h, exponent: float):
    """int_h^1 (1 - u^2)^exponent du for h in [0, 1], exponent > -1.

    Via the regularized incomplete beta function after u^2 = w.
    """
    h = np.clip(np.asarray(h, dtype=float), 0.0, 1.0)
    a = exponent + 1.0
    # small h: complement over [0, h^2] avoids the cancellation in 1 - h^2
    tail = np.where(
        h * h < 0.5,
        1.0 - special.betainc(0.5, a, h * h),
        special.betainc(a, 0.5, (1.0 - h) * (1.0 + h)),
    )
    return 0.5 * special.beta(0.5, a) * tail


def ball_covariogram(d: int, t):
    """barC_d(t) = V_d(B^d cap (B^d + t v)) for the unit ball; 0 for t >= 2.

    Vectorised over t.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    t = np.asarray(t, dtype=float)
    out = 2.0 * unit_ball_volume(d - 1) * _half_beta_integral(t / 2.0, (d - 1) / 2.0)
    out = np.where(t >= 2.0, 0.0, out)
    return out if out.ndim else float(out)


def ball_covariogram_quad(d: int, t: float, rel_tol: float = 1e-12) -> float:
    """Same as :func:`ball_covariogram` but by adaptive quadrature (cross-check path)."""
    from .quadrature import QuadratureConfig, integrate_1d

    if t >= 2.0:
        return 0.0
    cfg = QuadratureConfig(rel_tol=rel_tol, abs_tol=1e-15)
    val, _ = integrate_1d(lambda u: (1.0 - u * u) ** ((d - 1) / 2.0), t / 2.0, 1.0, cfg)
    return 2.0 * unit_ball_volume(d - 1) * val


def cap_area(d: int, h):
    """Cap_d(h) = (d-1) kappa_{d-1} int_h^1 (1-s^2)^((d-3)/2) ds, h in [0, 1]."""
    if d < 2:
        raise ValueError("caps need d >= 2")
    return (d - 1) * unit_ball_volume(d - 1) * _half_beta_integral(h, (d - 3) / 2.0)


def ball_boundary_covariogram(d: int, t):
    """barC_{d-1}(t) = Cap_d(t/2) / 2 for 0 < t <= 2 (unit ball).

    Values outside (0, 2] are rejected; use :func:`_boundary_covariogram_ext`
    for integrands that need the zero extension beyond the diameter.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr > 2.0):
        raise ValueError("boundary covariogram is defined for 0 < t <= 2")
    out = 0.5 * cap_area(d, arr / 2.0)
    return out if np.ndim(out) else float(out)


def _boundary_covariogram_ext(d: int, t):
    # zero beyond the diameter, limit value at 0
    t = np.asarray(t, dtype=float)
    out = 0.5 * cap_area(d, np.clip(t, 0.0, 2.0) / 2.0)
    return np.where(t >= 2.0, 0.0, out)


def volume_fraction(gamma: float, v_d: float) -> float:
    """p = 1 - exp(-gamma v_d)."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if math.isinf(gamma):
        return 1.0
    return -math.expm1(-gamma * v_d)


@dataclass(frozen=True)
class GrainSpec:
    """Typical grain: a ball with deterministic radius or a finite radius mixture.

    ``radii`` and ``probs`` describe the mixture; a single radius is the
    deterministic case.
    """

    d: int
    radii: tuple[float, ...] = (1.0,)
    probs: tuple[float, ...] = (1.0,)
    moments: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        radii = tuple(float(r) for r in np.atleast_1d(self.radii))
        probs = tuple(float(q) for q in np.atleast_1d(self.probs))
        if len(radii) != len(probs) or not radii:
            raise ValueError("radii and probs must have equal non-zero length")
        if any(r <= 0 for r in radii) or any(q < 0 for q in probs):
            raise ValueError("radii must be positive, probabilities non-negative")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "probs", probs)
        v = sum(q * intrinsic_volumes_ball(self.d, r) for r, q in zip(radii, probs))
        v.setflags(write=False)
        object.__setattr__(self, "moments", v)

    @classmethod
    def ball(cls, d: int, r: float = 1.0) -> "GrainSpec":
        return cls(d, (r,), (1.0,))

    @property
    def deterministic(self) -> bool:
        return len(self.radii) == 1

    @property
    def radius(self) -> float:
        if not self.deterministic:
            raise ValueError("grain radius is random")
        return self.radii[0]

    @property
    def max_radius(self) -> float:
        return max(self.radii)

    def v(self, i: int) -> float:
        return float(self.moments[i])

    def covariogram(self, dist):
        """Mean covariogram C_d at distance |x| (mixture average of scaled unit-ball values)."""
        dist = np.asarray(dist, dtype=float)
        out = sum(
            q * r**self.d * np.asarray(ball_covariogram(self.d, dist / r))
            for r, q in zip(self.radii, self.probs)
        )
        return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class Window:
    """Observation window: an axis-parallel box ``[0, s_1] x ... x [0, s_d]`` or a centred ball."""

    shape: str
    sides: tuple[float, ...] = ()
    radius: float = 0.0
    d: int = 0

    def __post_init__(self):
        if self.shape == "box":
            sides = tuple(float(s) for s in self.sides)
            if not sides or any(s <= 0 for s in sides):
                raise ValueError("box sides must be positive")
            object.__setattr__(self, "sides", sides)
            object.__setattr__(self, "d", len(sides))
        elif self.shape == "ball":
            if self.radius <= 0 or self.d < 1:
                raise ValueError("ball window needs radius > 0 and d >= 1")
        else:
            raise ValueError(f"unknown window shape {self.shape!r}")

    @classmethod
    def box(cls, *sides: float) -> "Window":
        if len(sides) == 1 and np.ndim(sides[0]) == 1:
            sides = tuple(sides[0])
        return cls("box", sides=tuple(sides))

    @classmethod
    def cube(cls, side: float, d: int) -> "Window":
        return cls("box", sides=(side,) * d)

    @classmethod
    def ball(cls, radius: float, d: int) -> "Window":
        return cls("ball", radius=float(radius), d=d)

    @property
    def inradius(self) -> float:
        return min(self.sides) / 2.0 if self.shape == "box" else self.radius

    def intrinsic_volumes(self) -> np.ndarray:
        if self.shape == "box":
            return intrinsic_volumes_box(self.sides)
        return intrinsic_volumes_ball(self.d, self.radius)

    @property
    def volume(self) -> float:
        return float(self.intrinsic_volumes()[-1])

    def dilated_volume(self, rho: float) -> float:
        """V_d(W + B_rho) by the Steiner formula."""
        v = self.intrinsic_volumes()
        return float(
            sum(unit_ball_volume(self.d - i) * rho ** (self.d - i) * v[i] for i in range(self.d + 1))
        )


def two_point_coverage(gamma: float, grain: GrainSpec, x) -> float:
    """P(0 in Z, x in Z) = p^2 + (1-p)^2 (exp(gamma C_d(x)) - 1)."""
    p = volume_fraction(gamma, grain.v(grain.d))
    c = grain.covariogram(float(np.linalg.norm(np.atleast_1d(x))))
    return p * p + (1 - p) ** 2 * math.expm1(gamma * c)


def set_covariance(w: Window, x):
    """C_W(x) = V_d(W cap (W + x)).

    ``x`` may be a single vector or an array of vectors along the last axis.
    """
    x = np.asarray(x, dtype=float)
    if w.shape == "box":
        s = np.asarray(w.sides)
        return np.prod(np.maximum(0.0, s - np.abs(x)), axis=-1)
    dist = np.linalg.norm(np.atleast_1d(x), axis=-1) if x.ndim else abs(float(x))
    out = w.radius**w.d * np.asarray(ball_covariogram(w.d, dist / w.radius))
    return out if np.ndim(out) else float(out)

