"""Adaptive Gauss-Kronrod integration, bracketed roots and extremum scans.

The integrators are deterministic: intervals are refined one at a time in a
fixed order (largest error first, ties broken by position), so repeated
calls give bit-identical results.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

__all__ = [
    "QuadratureConfig",
    "NonConvergence",
    "BracketInvalid",
    "Bracket",
    "integrate_1d",
    "integrate_2d",
    "find_root",
    "find_extrema",
    "scan_brackets",
]

# 15-point Kronrod nodes on [-1, 1] (non-negative half) with the embedded
# 7-point Gauss weights; values from QUADPACK qk15.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
# Gauss nodes sit at odd Kronrod indices 1, 3, 5 and the centre.
for _k, _w in zip((1, 3, 5), _WG[:3]):
    _GW[_k] = _w
    _GW[14 - _k] = _w
_GW[7] = _WG[3]

_EPS = np.finfo(float).eps


class NonConvergence(RuntimeWarning):
    """Subdivision budget exhausted before the requested tolerance was met."""


class BracketInvalid(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_subdivisions: int = 2**16
    strict: bool = False  # raise instead of warn on NonConvergence

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be non-negative")
        if self.max_subdivisions < 64:
            raise ValueError("max_subdivisions must be >= 64")

    def tightened(self, factor: float = 0.1) -> "QuadratureConfig":
        return QuadratureConfig(
            self.rel_tol * factor, self.abs_tol * factor, self.max_subdivisions, self.strict
        )


DEFAULT = QuadratureConfig()


def _gk15(f, a: float, b: float):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fx = np.asarray(f(c + h * _NODES), dtype=float)
    if fx.shape != (15,):
        fx = np.broadcast_to(fx, (15,))
    k = h * float(np.dot(_KW, fx))
    g = h * float(np.dot(_GW, fx))
    mean = 0.5 * k / h if h else 0.0
    resasc = abs(h) * float(np.dot(_KW, np.abs(fx - mean)))
    resabs = abs(h) * float(np.dot(_KW, np.abs(fx)))
    err = abs(k - g)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > np.finfo(float).tiny / (50 * _EPS):
        err = max(err, 50 * _EPS * resabs)
    return k, err


def integrate_1d(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    cfg: QuadratureConfig = DEFAULT,
    *,
    points: Sequence[float] = (),
    singular_ends: bool = False,
) -> tuple[float, float]:
    """Integrate a vectorised ``f`` over ``[a, b]``.

    ``points`` seeds the subdivision with known kinks. With
    ``singular_ends`` the substitution ``x = m - h cos(theta)`` is applied,
    which removes inverse-square-root endpoint singularities.

    Returns ``(value, error_estimate)``.
    """
    if not a < b:
        if a == b:
            return 0.0, 0.0
        raise ValueError("need a < b")
    if singular_ends:
        m, h = 0.5 * (a + b), 0.5 * (b - a)

        def g(theta):
            return f(m - h * np.cos(theta)) * h * np.sin(theta)

        # kinks map to theta = arccos((m - x) / h)
        pts = [math.acos(min(1.0, max(-1.0, (m - p) / h))) for p in points]
        return integrate_1d(g, 0.0, math.pi, cfg, points=pts)

    edges = sorted({a, b, *(p for p in points if a < p < b)})
    heap = []
    total_err = 0.0
    values = {}
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = _gk15(f, lo, hi)
        values[(lo, hi)] = v
        heapq.heappush(heap, (-e, lo, hi))
        total_err += e
    n_sub = len(heap)
    while True:
        total = math.fsum(values.values())
        if total_err <= max(cfg.abs_tol, cfg.rel_tol * abs(total)):
            break
        if n_sub >= cfg.max_subdivisions:
            msg = (
                f"integration on [{a}, {b}] stopped after {n_sub} subdivisions "
                f"with error estimate {total_err:.3e}"
            )
            if cfg.strict:
                raise NonConvergence(msg)
            warnings.warn(msg, NonConvergence, stacklevel=2)
            break
        neg_e, lo, hi = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # interval cannot be split further in floating point
            warnings.warn("interval underflow in integrate_1d", NonConvergence, stacklevel=2)
            break
        del values[(lo, hi)]
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        values[(lo, mid)] = v1
        values[(mid, hi)] = v2
        heapq.heappush(heap, (-e1, lo, mid))
        heapq.heappush(heap, (-e2, mid, hi))
        total_err += e1 + e2 + neg_e
        n_sub += 1
    # recompute the error sum exactly to avoid drift from the running total
    err = math.fsum(-e for e, _, _ in heap)
    return math.fsum(v for _, v in sorted(values.items())), err


def integrate_2d(
    f: Callable[[float, np.ndarray], np.ndarray],
    x_range: tuple[float, float],
    y_range,
    cfg: QuadratureConfig = DEFAULT,
    *,
    x_points: Sequence[float] = (),
    y_points: Sequence[float] = (),
) -> tuple[float, float]:
    """Iterated integral of ``f(x, y)`` with ``y`` vectorised.

    ``y_range`` is either a fixed pair or a callable ``x -> (c, d)``. The
    inner integrals use a tolerance ten times tighter than the outer one.
    """
    inner = cfg.tightened(0.1)

    def outer(xs):
        out = np.empty(len(xs))
        for k, x in enumerate(xs):
            c, d = y_range(x) if callable(y_range) else y_range
            if d <= c:
                out[k] = 0.0
                continue
            out[k] = integrate_1d(lambda y: f(x, y), c, d, inner, points=y_points)[0]
        return out

    return integrate_1d(outer, x_range[0], x_range[1], cfg, points=x_points)


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    f_lo: float
    f_hi: float

    @classmethod
    def certify(cls, f: Callable[[float], float], lo: float, hi: float) -> "Bracket":
        if not lo < hi:
            raise BracketInvalid("need lo < hi")
        flo, fhi = f(lo), f(hi)
        if not flo * fhi < 0:
            raise BracketInvalid(f"no sign change on [{lo}, {hi}]: f = {flo}, {fhi}")
        return cls(lo, hi, flo, fhi)


def find_root(f: Callable[[float], float], bracket: Bracket, tol: float = 1e-12) -> float:
    """Brent's method inside a certified bracket."""
    if not bracket.f_lo * bracket.f_hi < 0:
        raise BracketInvalid("bracket endpoints have the same sign")
    return optimize.brentq(f, bracket.lo, bracket.hi, xtol=tol, rtol=4 * _EPS, maxiter=500)


def scan_brackets(f: Callable[[float], float], a: float, b: float, step: float) -> list[Bracket]:
    """Sign-change brackets of ``f`` on a uniform grid."""
    n = max(1, int(round((b - a) / step)))
    xs = np.linspace(a, b, n + 1)
    ys = [f(x) for x in xs]
    out = []
    for x0, x1, y0, y1 in zip(xs[:-1], xs[1:], ys[:-1], ys[1:]):
        if y0 == 0.0:
            continue
        if y0 * y1 < 0:
            out.append(Bracket(float(x0), float(x1), y0, y1))
    return out


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden(f, lo, hi, sign, tol):
    # minimise sign * f on [lo, hi]
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = sign * f(c), sign * f(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = sign * f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = sign * f(d)
    x = 0.5 * (lo + hi)
    return x, f(x)


def find_extrema(
    f: Callable[[float], float],
    a: float,
    b: float,
    grid_points: int = 200,
    refine_tol: float = 1e-8,
) -> list[tuple[float, float, str]]:
    """Interior local extrema of ``f`` on ``[a, b]``.

    Every sign change of the discrete slope on the grid is refined by
    golden-section search; extrema closer than ``refine_tol`` are merged.
    Returns ``(location, value, kind)`` with ``kind`` in ``{"min", "max"}``.
    """
    if grid_points < 16:
        raise ValueError("grid_points must be >= 16")
    xs = np.linspace(a, b, grid_points)
    ys = np.array([f(x) for x in xs])
    found: list[tuple[float, float, str]] = []
    for k in range(1, grid_points - 1):
        left, right = ys[k] - ys[k - 1], ys[k + 1] - ys[k]
        if left < 0 <= right or left <= 0 < right:
            kind, sign = "min", 1.0
        elif left > 0 >= right or left >= 0 > right:
            kind, sign = "max", -1.0
        else:
            continue
        x, v = _golden(f, xs[k - 1], xs[k + 1], sign, refine_tol)
        if found and abs(found[-1][0] - x) <= refine_tol and found[-1][2] == kind:
            if sign * v < sign * found[-1][1]:
                found[-1] = (x, v, kind)
            continue
        found.append((x, v, kind))
    return found
