"""Named intensity curves with zero and extremum location."""

from __future__ import annotations

import functools
import math
from typing import Callable

import numpy as np

from . import analytic as A
from .quadrature import find_extrema, find_root, scan_brackets

__all__ = ["UnknownQuantity", "curve", "CURVE_NAMES", "zeros", "extrema", "figure_table"]

CURVE_NAMES = (
    "sigma00",
    "sigma01",
    "sigma02",
    "sigma11",
    "sigma12",
    "sigma22",
    "sigma_surf_vol",
    "sigma_surf_surf",
    "sigma_vol_vol",
    "correlation",
    "cor01",
    "cor02",
    "cor12",
)


class UnknownQuantity(KeyError):
    pass


def curve(name: str, d: int = 2) -> Callable[[float], float]:
    """gamma -> value for a named curve (unit-ball grain in dimension ``d``)."""
    if name.startswith("sigma") and len(name) == 7 and name[5:].isdigit():
        if d != 2:
            raise UnknownQuantity(f"{name} is defined for d = 2 only")
        i, j = int(name[5]), int(name[6])
        if max(i, j) > 2:
            raise UnknownQuantity(name)
        return lambda g: A.sigma_2d(i, j, g)
    if name.startswith("cor") and len(name) == 5 and name[3:].isdigit():
        if d != 2:
            raise UnknownQuantity(f"{name} is defined for d = 2 only")
        i, j = int(name[3]), int(name[4])
        return lambda g: A.correlation_2d(i, j, g)
    table = {
        "sigma_surf_vol": lambda r: r[d - 1, d],
        "sigma_surf_surf": lambda r: r[d - 1, d - 1],
        "sigma_vol_vol": lambda r: r[d, d],
        "correlation": lambda r: r[d - 1, d] / math.sqrt(r[d, d] * r[d - 1, d - 1]),
    }
    if name not in table:
        raise UnknownQuantity(name)
    pick = table[name]
    return lambda g: pick(_report(d, float(g), A.quadrature_config()))


# figure and curve evaluations share these; the active tolerance is part of the key
@functools.lru_cache(maxsize=8192)
def _report(d: int, gamma: float, cfg) -> A.AnalyticReport:
    # cfg is the active configuration; it only keys the cache
    return A.sigma_surface_volume_report(A.ModelParams.unit_ball(d, gamma))


@functools.lru_cache(maxsize=8192)
def _matrix(gamma: float, cfg) -> A.AnalyticReport:
    return A.sigma_matrix_2d(gamma)


def zeros(f, lo: float, hi: float, step: float = 0.01, width: float = 1e-6) -> list[dict]:
    """Sign changes on a ``step`` grid, refined by Brent and re-certified on a ``width`` bracket."""
    out = []
    for br in scan_brackets(f, lo, hi, step):
        root = find_root(f, br, tol=1e-13)
        a, b = root - width / 2, root + width / 2
        fa, fb = f(a), f(b)
        out.append(
            {
                "root": root,
                "bracket": [a, b],
                "certified": bool(fa * fb < 0),
                "coarse_bracket": [br.lo, br.hi],
            }
        )
    return out


def extrema(f, lo: float, hi: float, step: float = 0.01, tol: float = 1e-8) -> list[dict]:
    n = max(16, int(round((hi - lo) / step)) + 1)
    found = find_extrema(f, lo, hi, grid_points=n, refine_tol=tol)
    if not found:
        return []
    vals = [v for _, v, _ in found]
    out = []
    for x, v, kind in found:
        is_global = (kind == "max" and v == max(vals)) or (kind == "min" and v == min(vals))
        out.append(
            {
                "location": x,
                "bracket": [x - tol, x + tol],
                "value": v,
                "kind": kind,
                "global": bool(is_global),
            }
        )
    return out


def figure_table(number: int, grid=None) -> tuple[list[str], np.ndarray]:
    """Columns for the four planar/dimensional figure curves."""
    if number in (1, 2):
        lo, hi, st = grid or (0.01, 1.2, 0.01)
        gammas = _grid(lo, hi, st)
        name = "sigma_surf_vol" if number == 1 else "correlation"
        cols = [gammas]
        for d in range(2, 7):
            f = curve(name, d)
            cols.append(np.array([f(g) for g in gammas]))
        prefix = "sigma" if number == 1 else "cor"
        return ["gamma"] + [f"{prefix}_d{d}" for d in range(2, 7)], np.column_stack(cols)
    if number == 3:
        lo, hi, st = grid or (0.01, 2.0, 0.01)
        gammas = _grid(lo, hi, st)
        rows = []
        for g in gammas:
            rep = _matrix(float(g), A.quadrature_config())
            rows.append([g] + [rep[i, j] for i, j in _PAIRS])
        return ["gamma"] + [f"s{i}{j}" for i, j in _PAIRS], np.array(rows)
    if number == 4:
        lo, hi, st = grid or (0.01, 2.0, 0.01)
        gammas = _grid(lo, hi, st)
        rows = []
        for g in gammas:
            m = _matrix(float(g), A.quadrature_config()).matrix()
            sd = np.sqrt(np.diag(m))
            c = m / np.outer(sd, sd)
            rows.append([g, c[0, 1], c[0, 2], c[1, 2]])
        return ["gamma", "cor01", "cor02", "cor12"], np.array(rows)
    raise UnknownQuantity(f"figure {number}")


_PAIRS = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 12)
