"""Acceptance checks shared by ``boolcov verify`` and the test suite.

Each criterion returns a :class:`CriterionResult` holding one
``Check(label, measured, expected, ok)`` per compared quantity.
"""

from __future__ import annotations

import functools
import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import analytic as A
from . import curves
from .disks import Disk, DiskScene, functionals_exact, functionals_grid_oracle, lens_area
from .finite_window import exact_volume_variance, finite_window_matrix_2d, variance_rate_curve
from .geometry import Window
from .simulate import SimulationConfig, normality_report, run

__all__ = [
    "Check",
    "CriterionResult",
    "CRITERIA",
    "QUICK",
    "FULL",
    "run_criteria",
    "format_report",
]

SCAN = (0.005, 4.0, 0.01)  # gamma range searched for zeros and extrema
MC_REPLICATES = 10_000
MC_SEED = 20240611


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, (tuple, list)):
        return type(v)(_plain(x) for x in v)
    return v


@dataclass
class Check:
    label: str
    measured: object
    expected: str
    ok: bool

    def __post_init__(self):
        self.measured = _plain(self.measured)
        self.ok = bool(self.ok)


@dataclass
class CriterionResult:
    number: int
    name: str
    checks: list[Check] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.ok for c in self.checks)

    def add(self, label: str, measured, expected: str, ok) -> None:
        self.checks.append(Check(label, measured, expected, bool(ok)))

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        bad = [c.label for c in self.checks if not c.ok]
        tail = f" failing: {', '.join(bad)}" if bad else ""
        return f"[{status}] criterion {self.number:2d} {self.name} ({self.seconds:.1f} s){tail}"


def _in(x: float, lo: float, hi: float) -> bool:
    return lo <= x <= hi


@functools.lru_cache(maxsize=None)
def _memo(name: str, d: int = 2) -> Callable[[float], float]:
    f = curves.curve(name, d)

    @functools.lru_cache(maxsize=None)
    def g(key: float) -> float:
        return f(key)

    return lambda x: g(round(float(x), 13))


@functools.lru_cache(maxsize=None)
def _zeros(name: str) -> tuple:
    return tuple(curves.zeros(_memo(name), *SCAN))


@functools.lru_cache(maxsize=None)
def _extrema(name: str) -> tuple:
    lo, hi, st = SCAN
    return tuple(curves.extrema(_memo(name), lo, hi, st))


def _timed(number: int, name: str):
    def wrap(fn):
        @functools.wraps(fn)
        def inner(**kw) -> CriterionResult:
            res = CriterionResult(number, name)
            t0 = time.perf_counter()
            fn(res, **kw)
            res.seconds = time.perf_counter() - t0
            return res

        return inner

    return wrap


def _root_check(res: CriterionResult, label: str, name: str, lo: float, hi: float) -> None:
    roots = [z for z in _zeros(name) if _in(z["root"], lo - 1e-3, hi + 1e-3)]
    if not roots:
        res.add(label, None, f"[{lo}, {hi}]", False)
        return
    z = roots[0]
    a, b = z["bracket"]
    ok = z["certified"] and _in(z["root"], lo, hi) and b - a <= 1e-6 + 1e-15
    res.add(label, z["root"], f"[{lo}, {hi}]", ok)


@_timed(1, "sigma01 zero")
def criterion_1(res: CriterionResult) -> None:
    t0 = time.perf_counter()
    _root_check(res, "gamma0", "sigma01", 0.90785, 0.90786)
    res.add("zero count", len(_zeros("sigma01")), "1", len(_zeros("sigma01")) == 1)
    dt = time.perf_counter() - t0
    res.add("runtime s", dt, "< 30", dt < 30)


@_timed(2, "sigma02 and sigma12 zeros")
def criterion_2(res: CriterionResult) -> None:
    t0 = time.perf_counter()
    _root_check(res, "gamma1", "sigma02", 0.13336, 0.13337)
    _root_check(res, "gamma2", "sigma02", 1.097998, 1.097999)
    _root_check(res, "gamma3", "sigma12", 0.369200, 0.369201)
    dt = time.perf_counter() - t0
    res.add("runtime s", dt, "< 60", dt < 60)


# (curve, label, kind, global?, value, value tol, location interval)
EXTREMA_TARGETS = [
    ("sigma01", "sigma01 local min", "min", False, 0.0010234, 1e-5, (0.2239, 0.2241)),
    ("sigma01", "sigma01 local max", "max", False, 0.06515, 5e-4, (0.535, 0.537)),
    ("sigma01", "sigma01 global max", "max", True, 0.067755, 5e-5, (0.0539, 0.0541)),
    ("sigma01", "sigma01 global min", "min", True, -0.03179, 5e-4, (1.294, 1.296)),
    ("sigma02", "sigma02 global max", "max", True, 0.070517, 5e-5, (0.0524, 0.0526)),
    ("sigma02", "sigma02 global min", "min", True, -0.1673672, 1e-5, (0.3674, 0.3676)),
    ("sigma02", "sigma02 local max", "max", False, 0.0053, 1e-3, (1.36, 1.37)),
]


def extremum_check(target) -> Check:
    name, label, kind, is_global, value, vtol, (lo, hi) = target
    cands = [e for e in _extrema(name) if e["kind"] == kind and (e["global"] or not is_global)]
    if not cands:
        return Check(label, None, f"{value} +- {vtol} at [{lo}, {hi}]", False)
    mid = 0.5 * (lo + hi)
    e = min(cands, key=lambda c: abs(c["location"] - mid))
    ok = _in(e["location"], lo, hi) and abs(e["value"] - value) <= vtol
    return Check(label, (e["location"], e["value"]), f"{value} +- {vtol} at [{lo}, {hi}]", ok)


@_timed(3, "sigma01 and sigma02 extrema")
def criterion_3(res: CriterionResult) -> None:
    for target in EXTREMA_TARGETS:
        res.checks.append(extremum_check(target))


@_timed(4, "correlation limit and shared zeros")
def criterion_4(res: CriterionResult) -> None:
    for d in range(2, 7):
        c = A.correlation_surf_vol(A.ModelParams.unit_ball(d, 1e-4))
        res.add(f"cor d={d} at 1e-4", c, ">= 0.99", c >= 0.99)
        zs = curves.zeros(_memo("sigma_surf_vol", d), 0.01, 1.2, 0.01)
        zc = curves.zeros(_memo("correlation", d), 0.01, 1.2, 0.01)
        same = len(zs) == len(zc) and all(
            abs(a["root"] - b["root"]) <= 1e-8 for a, b in zip(zs, zc)
        )
        res.add(
            f"zeros d={d}",
            ([z["root"] for z in zs], [z["root"] for z in zc]),
            "identical root lists",
            same,
        )


@_timed(5, "internal consistency")
def criterion_5(res: CriterionResult) -> None:
    rng = np.random.default_rng(5)
    worst = 0.0
    for g in rng.uniform(0.01, 3.0, 20):
        a = A.sigma_2d(2, 2, g)
        b = A.sigma_vol_vol(A.ModelParams.unit_ball(2, g))
        worst = max(worst, abs(a - b) / abs(b))
    res.add("sigma22 vs sigma_vol_vol rel", worst, "<= 1e-10", worst <= 1e-10)
    worst = 0.0
    for g in np.round(np.arange(1, 31) * 0.1, 10):
        s = A.sigma_matrix_2d(g).matrix()
        r = A.sigma_from_rho(A.rho_matrix_unit_disk(g), A.ModelParams.unit_ball(2, g))
        worst = max(worst, float(np.max(np.abs(r - s)) / np.max(np.abs(s))))
    res.add("sigma_from_rho vs sigma_2d rel", worst, "<= 1e-9", worst <= 1e-9)


@_timed(6, "positive definiteness")
def criterion_6(res: CriterionResult) -> None:
    failures = []
    min_eig = math.inf
    for g in np.linspace(0.1, 3.0, 30):
        m = A.sigma_matrix_2d(g).matrix()
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            failures.append(float(g))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(m)[0]))
    res.add("cholesky failures", failures, "[]", not failures)
    res.add("smallest eigenvalue", min_eig, "> 0", min_eig > 0)


def _mc(d: int, gamma: float, sides, replicates: int, seed: int, workers=None):
    cfg = SimulationConfig(
        A.ModelParams.unit_ball(d, gamma), Window.box(*sides), replicates, master_seed=seed
    )
    return run(cfg, workers=workers)


@_timed(7, "exact vs MC volume variance")
def criterion_7(res: CriterionResult, replicates: int = MC_REPLICATES, workers=None) -> None:
    params = A.ModelParams.unit_ball(2, 0.3)
    exact = exact_volume_variance(params, Window.box(10.0, 10.0))
    sim = _mc(2, 0.3, (10.0, 10.0), replicates, MC_SEED, workers)
    var, se = sim.covariance[2, 2], sim.covariance_se()[2, 2]
    res.add("Var V2", (var, se), f"{exact:.6g} within 3 SE", abs(var - exact) <= 3 * se)


@_timed(8, "finite-window covariance matrix")
def criterion_8(res: CriterionResult, replicates: int = MC_REPLICATES, workers=None) -> None:
    exact = finite_window_matrix_2d(0.2, Window.box(8.0, 8.0))
    sim = _mc(2, 0.2, (8.0, 8.0), replicates, MC_SEED + 1, workers)
    se = sim.covariance_se()
    for i in range(3):
        for j in range(i, 3):
            c = sim.covariance[i, j]
            res.add(
                f"cov{i}{j}",
                (c, se[i, j]),
                f"{exact[i, j]:.6g} within 3 SE",
                abs(c - exact[i, j]) <= 3 * se[i, j],
            )


@_timed(9, "convergence rate")
def criterion_9(res: CriterionResult) -> None:
    params = A.ModelParams.unit_ball(2, 0.3)
    sides = [8.0, 16.0, 32.0, 64.0]
    prods = np.array([v for _, v in variance_rate_curve(params, sides)])
    res.add("min product", prods.min(), "> 0", prods.min() > 1e-6)
    res.add("max/min product", prods.max() / prods.min(), "<= 2", prods.max() / prods.min() <= 2.0)
    dev = prods * 2.0 / np.array(sides)
    slope = np.polyfit(np.log(sides), np.log(dev), 1)[0]
    res.add("log-log slope", slope, "[-1.3, -0.7]", _in(slope, -1.3, -0.7))


@_timed(10, "CLT diagnostics")
def criterion_10(res: CriterionResult, replicates: int = MC_REPLICATES, workers=None) -> None:
    z = np.random.default_rng(MC_SEED).standard_normal((replicates, 3))
    cal = normality_report(z)
    ok = bool(np.all(cal.passes(0.08, 0.16, 0.02)))
    res.add("synthetic normal calibration", cal.as_dict(), "|skew|<0.08 |kurt|<0.16 KS<0.02", ok)
    sim = _mc(2, 0.5, (40.0, 40.0), replicates, MC_SEED + 2, workers)
    rep = normality_report(sim, sigma=A.sigma_matrix_2d(0.5).matrix())
    flags = rep.passes(0.1, 0.2, 0.02)
    for k, lab in enumerate(rep.labels):
        res.add(
            f"{lab} normality",
            (rep.skewness[k], rep.excess_kurtosis[k], rep.ks_distance[k]),
            "|skew|<0.1 |kurt|<0.2 KS<0.02",
            flags[k],
        )


@_timed(11, "d=1 exact laws")
def criterion_11(res: CriterionResult, replicates: int = MC_REPLICATES, workers=None) -> None:
    L, g = 100.0, 0.5
    params = A.ModelParams.unit_ball(1, g)
    sim = _mc(1, g, (L,), replicates, MC_SEED + 3, workers)
    frac = sim.means[1] / L
    se = sim.mean_se()[1] / L
    res.add("covered fraction", (frac, se), f"{params.p:.8g} within 3 SE", abs(frac - params.p) <= 3 * se)
    sigma = A.sigma_vol_vol(params)
    v, vse = sim.covariance[1, 1] / L, sim.covariance_se()[1, 1] / L
    res.add("Var V1 / |W|", (v, vse), f"{sigma:.8g} within 3 SE", abs(v - sigma) <= 3 * vse)


def hole_scene() -> DiskScene:
    s = 1.9
    pts = [(0.0, 0.0), (s, 0.0), (0.5 * s, 0.5 * math.sqrt(3) * s)]
    return DiskScene.from_disks([Disk(c, 1.0) for c in pts], (-2.0, -2.0, 4.0, 4.0))


def random_scenes(n: int = 200, seed: int = 12):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        k = rng.poisson(8)
        c = rng.uniform(-1.0, 7.0, (k, 2))
        r = rng.uniform(0.4, 1.3, k)
        yield DiskScene(c, r, (0.0, 0.0, 6.0, 6.0))


@_timed(12, "disk-union exactness")
def criterion_12(res: CriterionResult, n_scenes: int = 200) -> None:
    r1, r2, dist = 1.0, 1.0, 1.0
    scene = DiskScene.from_disks([Disk((0.0, 0.0), r1), Disk((dist, 0.0), r2)], (-3.0, -3.0, 4.0, 3.0))
    closed = 2 * math.pi - lens_area(r1, r2, dist)
    got = functionals_exact(scene).v2
    res.add("lens area", got, f"{closed!r} to 1e-12", abs(got - closed) <= 1e-12 * closed)

    hs = hole_scene()
    chi, chi_grid = functionals_exact(hs).v0, functionals_grid_oracle(hs, 256).v0
    res.add("hole scene chi", (chi, chi_grid), "0 and 0", chi == 0 and chi_grid == 0)

    resolutions = [16, 32, 64]
    devs = {r: [] for r in resolutions}
    worst = 0.0
    for sc in random_scenes(n_scenes):
        ex = functionals_exact(sc)
        perim = max(2.0 * ex.v1, 1e-12)
        for r in resolutions:
            dev = abs(functionals_grid_oracle(sc, r).v2 - ex.v2)
            devs[r].append(dev)
            worst = max(worst, dev * r / perim)
    means = [float(np.mean(devs[r])) for r in resolutions]
    res.add("max |dev| * res / perimeter", worst, "<= 1", worst <= 1.0)
    res.add("mean |dev| by resolution", means, "decreasing", all(a > b for a, b in zip(means, means[1:])))


@_timed(13, "figure curves")
def criterion_13(res: CriterionResult, out_dir=None) -> None:
    from .reporting import read_csv, write_csv

    tmp = None
    if out_dir is None:
        tmp = tempfile.TemporaryDirectory()
        out_dir = tmp.name
    try:
        fig1 = None
        for n in (1, 2, 3, 4):
            header, data = curves.figure_table(n)
            path = write_csv(Path(out_dir) / f"figure{n}.csv", header, data, {"figure": n})
            back = read_csv(path)[1]
            res.add(f"figure {n} csv", path.name, "round trip", np.array_equal(back, data))
            if n == 1:
                fig1 = data
        for k, d in enumerate(range(2, 7), start=1):
            col = fig1[:, k]
            changes = int(np.sum(np.sign(col[1:]) != np.sign(col[:-1])))
            certified = len(curves.zeros(_memo("sigma_surf_vol", d), 0.01, 1.2, 0.01))
            res.add(f"zeros d={d}", (changes, certified), "1", changes == 1 and certified == 1)
    finally:
        if tmp is not None:
            tmp.cleanup()


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
    12: criterion_12,
    13: criterion_13,
}
QUICK = (1, 2, 3, 4, 5, 6, 9, 12, 13)
FULL = tuple(range(1, 14))
MONTE_CARLO = (7, 8, 10, 11)


def run_criteria(numbers, workers=None, progress=None) -> list[CriterionResult]:
    out = []
    for n in numbers:
        kw = {"workers": workers} if n in MONTE_CARLO else {}
        r = CRITERIA[n](**kw)
        if progress is not None:
            progress(r)
        out.append(r)
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, tuple):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    if isinstance(v, dict):
        return "{...}"
    return str(v)


def format_report(results: list[CriterionResult]) -> str:
    lines = []
    for r in results:
        lines.append(r.line())
        for c in r.checks:
            mark = "ok " if c.ok else "BAD"
            lines.append(f"    {mark} {c.label}: measured {_fmt(c.measured)} expected {c.expected}")
    return "\n".join(lines)
