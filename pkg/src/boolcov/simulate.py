"""Seeded Monte Carlo for stationary Boolean models with ball grains.

Germs are drawn in the window dilated by ``edge_dilation`` (plus sampling),
so the clipped set ``Z cap W`` has exactly the stationary law. Every
replicate owns a Philox stream keyed by ``(master_seed, replicate_index)``;
results do not depend on how replicates are scheduled.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree

from .analytic import ModelParams
from .disks import DegenerateConfiguration, DiskScene, functionals_exact, perturb_scene
from .geometry import GrainSpec, Window

__all__ = [
    "ConfigInvalid",
    "SimulationConfig",
    "config_from_dict",
    "SimulationRun",
    "NormalityReport",
    "sample_scene",
    "replicate_functionals",
    "run",
    "normality_report",
    "union_of_intervals",
    "THREADS_ENV",
]

THREADS_ENV = "BOOLCOV_THREADS"
MAX_RETRIES = 3


class ConfigInvalid(ValueError):
    """Simulation or CLI configuration rejected; ``field`` names the offending entry."""

    def __init__(self, field_name: str, msg: str):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


@dataclass(frozen=True)
class SimulationConfig:
    params: ModelParams
    window: Window
    replicates: int
    master_seed: int = 0
    edge_dilation: float | None = None  # defaults to the grain diameter
    volume_points: int = 10**6  # stratified sample size for d >= 3

    def __post_init__(self):
        if not isinstance(self.replicates, (int, np.integer)) or self.replicates < 2:
            raise ConfigInvalid("replicates", "must be an integer >= 2")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigInvalid("master_seed", "must be a 64-bit unsigned integer")
        if self.window.d != self.params.d:
            raise ConfigInvalid("window", "dimension differs from the grain dimension")
        rmax = self.params.grain.max_radius
        if self.edge_dilation is None:
            object.__setattr__(self, "edge_dilation", 2.0 * rmax)
        elif not self.edge_dilation >= rmax:
            raise ConfigInvalid("edge_dilation", f"must be >= max grain radius {rmax}")
        if self.params.d <= 2 and self.window.shape != "box":
            raise ConfigInvalid("window", "d <= 2 simulation needs a box window")
        if self.volume_points < 1:
            raise ConfigInvalid("volume_points", "must be positive")

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def labels(self) -> list[str]:
        if self.d == 1:
            return ["V0", "V1"]
        if self.d == 2:
            return ["V0", "V1", "V2"]
        return [f"V{self.d}"]

    def as_dict(self) -> dict:
        g = self.params.grain
        w = self.window
        return {
            "d": self.d,
            "gamma": self.params.gamma,
            "radii": list(g.radii),
            "probs": list(g.probs),
            "window": {"shape": w.shape, "sides": list(w.sides), "radius": w.radius},
            "replicates": int(self.replicates),
            "master_seed": int(self.master_seed),
            "edge_dilation": float(self.edge_dilation),
            "volume_points": int(self.volume_points),
        }


_CONFIG_KEYS = {
    "d", "gamma", "radius", "radii", "probs", "window", "replicates",
    "master_seed", "edge_dilation", "volume_points",
}


def config_from_dict(obj: dict, seed: int | None = None) -> SimulationConfig:
    """Build a config from parsed JSON; ``seed`` overrides ``master_seed``.

    Window forms: ``{"sides": [...]}``, ``{"side": L}`` (cube) or
    ``{"shape": "ball", "radius": R}``.
    """
    if not isinstance(obj, dict):
        raise ConfigInvalid("<root>", "expected a JSON object")
    extra = sorted(set(obj) - _CONFIG_KEYS)
    if extra:
        raise ConfigInvalid(extra[0], "unknown field")

    def num(name, kind=float, default=None):
        if name not in obj:
            if default is None:
                raise ConfigInvalid(name, "missing")
            return default
        v = obj[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigInvalid(name, f"expected a number, got {v!r}")
        if kind is int and float(v) != int(v):
            raise ConfigInvalid(name, f"expected an integer, got {v!r}")
        return kind(v)

    d = num("d", int)
    if d < 1:
        raise ConfigInvalid("d", "must be >= 1")
    gamma = num("gamma")
    if not (gamma >= 0 and math.isfinite(gamma)):
        raise ConfigInvalid("gamma", "must be finite and >= 0")
    try:
        if "radii" in obj:
            radii = obj["radii"]
            probs = obj.get("probs", [1.0 / len(radii)] * len(radii))
            grain = GrainSpec(d, tuple(radii), tuple(probs))
        else:
            grain = GrainSpec.ball(d, num("radius", default=1.0))
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigInvalid("radii" if "radii" in obj else "radius", str(exc)) from None

    w = obj.get("window")
    if not isinstance(w, dict):
        raise ConfigInvalid("window", "missing or not an object")
    try:
        shape = w.get("shape", "box")
        if shape == "ball":
            window = Window.ball(float(w["radius"]), d)
        elif "side" in w:
            window = Window.cube(float(w["side"]), d)
        else:
            window = Window.box(*[float(s) for s in w["sides"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid("window", f"invalid window: {exc}") from None

    replicates = num("replicates", int)
    master_seed = int(seed) if seed is not None else num("master_seed", int, default=0)
    dil = obj.get("edge_dilation")
    if dil is not None:
        dil = num("edge_dilation")
    return SimulationConfig(
        ModelParams(grain, gamma),
        window,
        replicates,
        master_seed=master_seed,
        edge_dilation=dil,
        volume_points=num("volume_points", int, default=10**6),
    )


def _rng(cfg: SimulationConfig, idx: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence([int(cfg.master_seed), int(idx), int(stream)])
    return np.random.Generator(np.random.Philox(ss))


def _germs(cfg: SimulationConfig, rng: np.random.Generator):
    w, dl, d = cfg.window, cfg.edge_dilation, cfg.d
    if w.shape == "box":
        lo = -dl * np.ones(d)
        hi = np.asarray(w.sides) + dl
    else:
        lo = -(w.radius + dl) * np.ones(d)
        hi = -lo
    n = rng.poisson(cfg.params.gamma * float(np.prod(hi - lo)))
    pts = rng.uniform(lo, hi, size=(n, d))
    if w.shape == "box":
        gap = np.maximum(np.maximum(-pts, pts - np.asarray(w.sides)), 0.0)
        keep = np.einsum("ij,ij->i", gap, gap) < dl * dl
    else:
        keep = np.einsum("ij,ij->i", pts, pts) < (w.radius + dl) ** 2
    pts = pts[keep]
    g = cfg.params.grain
    if g.deterministic:
        radii = np.full(len(pts), g.radius)
    else:
        radii = np.asarray(g.radii)[rng.choice(len(g.radii), size=len(pts), p=g.probs)]
    return pts, radii


def sample_scene(cfg: SimulationConfig, replicate_index: int):
    """Germs of one replicate: a :class:`DiskScene` for d = 2, else ``(centers, radii)``."""
    pts, radii = _germs(cfg, _rng(cfg, replicate_index))
    if cfg.d == 2:
        a, b = cfg.window.sides
        return DiskScene(pts, radii, (0.0, 0.0, a, b))
    return pts, radii


def union_of_intervals(centers, radii, length: float) -> tuple[int, float]:
    """(number of components, covered length) of the union of intervals clipped to [0, length]."""
    c = np.asarray(centers, dtype=float).reshape(-1)
    r = np.asarray(radii, dtype=float).reshape(-1)
    lo = np.maximum(c - r, 0.0)
    hi = np.minimum(c + r, length)
    ok = hi > lo
    lo, hi = lo[ok], hi[ok]
    if lo.size == 0:
        return 0, 0.0
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    reach = np.maximum.accumulate(hi)
    new = np.ones(len(lo), dtype=bool)
    new[1:] = lo[1:] > reach[:-1]
    starts = lo[new]
    ends = reach[np.r_[np.flatnonzero(new)[1:] - 1, len(lo) - 1]]
    return int(new.sum()), float(np.sum(ends - starts))


def _stratified_volume(cfg: SimulationConfig, centers, radii, rng) -> float:
    w, d = cfg.window, cfg.d
    if w.shape == "box":
        sides = np.asarray(w.sides)
        lo = np.zeros(d)
    else:
        sides = np.full(d, 2 * w.radius)
        lo = -w.radius * np.ones(d)
    # one uniform point per cell of a near-cubic grid
    per_axis = max(1, int(round(cfg.volume_points ** (1.0 / d))))
    grid = np.stack(np.meshgrid(*[np.arange(per_axis)] * d, indexing="ij"), -1).reshape(-1, d)
    cell = sides / per_axis
    pts = lo + (grid + rng.random(grid.shape)) * cell
    if w.shape == "ball":
        inside = np.einsum("ij,ij->i", pts, pts) < w.radius**2
        pts = pts[inside]
        weight = float(np.prod(cell))
    else:
        weight = float(np.prod(cell))
    if len(centers) == 0:
        return 0.0
    tree = cKDTree(centers)
    rmax = float(radii.max())
    dist, idx = tree.query(pts, k=min(8, len(centers)), distance_upper_bound=rmax)
    dist = dist.reshape(len(pts), -1)
    idx = idx.reshape(len(pts), -1)
    valid = idx < len(centers)
    hit = valid & (dist < radii[np.where(valid, idx, 0)])
    covered = hit.any(axis=1)
    # exhaustive fallback for points whose neighbour list was truncated
    redo = np.flatnonzero(~covered & valid[:, -1])
    for k in redo:
        near = tree.query_ball_point(pts[k], rmax)
        covered[k] = any(np.linalg.norm(pts[k] - centers[j]) < radii[j] for j in near)
    return weight * float(covered.sum())


def replicate_functionals(cfg: SimulationConfig, replicate_index: int) -> np.ndarray:
    """Functional vector of one replicate (see ``cfg.labels``)."""
    rng = _rng(cfg, replicate_index)
    pts, radii = _germs(cfg, rng)
    if cfg.d == 1:
        k, length = union_of_intervals(pts[:, 0], radii, cfg.window.sides[0])
        return np.array([k, length], dtype=float)
    if cfg.d == 2:
        a, b = cfg.window.sides
        scene = DiskScene(pts, radii, (0.0, 0.0, a, b))
        for attempt in range(MAX_RETRIES + 1):
            try:
                return functionals_exact(scene).as_array()
            except DegenerateConfiguration as exc:
                if attempt == MAX_RETRIES:
                    raise
                seed = int(np.random.SeedSequence([cfg.master_seed, replicate_index, attempt + 1]).generate_state(1)[0])
                scene = perturb_scene(scene, seed, exc.indices[0] if exc.indices else None)
    return np.array([_stratified_volume(cfg, pts, radii, rng)])


def _chunk(args):
    cfg, lo, hi = args
    return np.array([replicate_functionals(cfg, i) for i in range(lo, hi)])


def _workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(workers))


@dataclass
class SimulationRun:
    config: SimulationConfig
    values: np.ndarray  # (replicates, k)
    labels: list[str]
    means: np.ndarray = field(init=False)
    covariance: np.ndarray = field(init=False)
    skewness: np.ndarray = field(init=False)
    excess_kurtosis: np.ndarray = field(init=False)
    ks_distance: np.ndarray = field(init=False)

    def __post_init__(self):
        x = self.values
        self.means = x.mean(axis=0)
        self.covariance = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
        self.skewness = np.array([_safe(stats.skew, x[:, k]) for k in range(x.shape[1])])
        self.excess_kurtosis = np.array([_safe(stats.kurtosis, x[:, k]) for k in range(x.shape[1])])
        self.ks_distance = np.array([_ks(x[:, k]) for k in range(x.shape[1])])

    @property
    def n(self) -> int:
        return len(self.values)

    def mean_se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance) / self.n)

    def covariance_se(self) -> np.ndarray:
        """Standard errors of the covariance entries from fourth-moment estimates."""
        x = self.values - self.means
        n, k = x.shape
        se = np.zeros((k, k))
        for i in range(k):
            for j in range(k):
                prod = x[:, i] * x[:, j]
                se[i, j] = prod.std(ddof=1) / math.sqrt(n)
        return se

    def column(self, label: str) -> np.ndarray:
        return self.values[:, self.labels.index(label)]

    def summary(self) -> dict:
        return {
            "labels": self.labels,
            "replicates": self.n,
            "master_seed": int(self.config.master_seed),
            "means": self.means.tolist(),
            "mean_se": self.mean_se().tolist(),
            "covariance": self.covariance.tolist(),
            "covariance_se": self.covariance_se().tolist(),
            "skewness": self.skewness.tolist(),
            "excess_kurtosis": self.excess_kurtosis.tolist(),
            "ks_distance": self.ks_distance.tolist(),
        }


def _safe(fn, col):
    # constant columns (saturated or empty models) have no shape statistics
    return float(fn(col)) if np.ptp(col) > 1e-12 * max(1.0, float(np.abs(col).max())) else float("nan")


def _ks(col) -> float:
    sd = col.std(ddof=1)
    if not sd > 0:
        return float("nan")
    return float(stats.kstest((col - col.mean()) / sd, "norm").statistic)


def run(cfg: SimulationConfig, workers: int | None = None) -> SimulationRun:
    """Evaluate every replicate and aggregate in index order."""
    n = int(cfg.replicates)
    nw = min(_workers(workers), n)
    if nw == 1:
        vals = _chunk((cfg, 0, n))
    else:
        bounds = np.linspace(0, n, 4 * nw + 1).astype(int)
        jobs = [(cfg, int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with ProcessPoolExecutor(nw) as pool:
            vals = np.concatenate(list(pool.map(_chunk, jobs)))
    return SimulationRun(cfg, vals.reshape(n, -1), cfg.labels)


@dataclass
class NormalityReport:
    labels: list[str]
    skewness: np.ndarray
    excess_kurtosis: np.ndarray
    ks_distance: np.ndarray
    n: int
    correlation: np.ndarray | None = None
    correlation_expected: np.ndarray | None = None
    correlation_z: np.ndarray | None = None

    def passes(self, skew: float = 0.1, kurt: float = 0.2, ks: float = 0.02) -> np.ndarray:
        return (
            (np.abs(self.skewness) < skew)
            & (np.abs(self.excess_kurtosis) < kurt)
            & (self.ks_distance < ks)
        )

    def as_dict(self) -> dict:
        out = {
            "labels": self.labels,
            "n": self.n,
            "skewness": self.skewness.tolist(),
            "excess_kurtosis": self.excess_kurtosis.tolist(),
            "ks_distance": self.ks_distance.tolist(),
        }
        if self.correlation is not None:
            out["correlation"] = self.correlation.tolist()
        if self.correlation_expected is not None:
            out["correlation_expected"] = self.correlation_expected.tolist()
            out["correlation_z"] = self.correlation_z.tolist()
        return out


def normality_report(data, sigma: np.ndarray | None = None, labels=None) -> NormalityReport:
    """Skewness, excess kurtosis and KS distance per functional.

    ``data`` is a :class:`SimulationRun` or a raw ``(n, k)`` sample. When an
    asymptotic covariance ``sigma`` is supplied, sample correlations are
    compared with it through Fisher z-scores.
    """
    if isinstance(data, SimulationRun):
        x, labels = data.values, data.labels
    else:
        x = np.asarray(data, dtype=float)
        x = x.reshape(len(x), -1)
        labels = labels or [f"X{k}" for k in range(x.shape[1])]
    n, k = x.shape
    rep = NormalityReport(
        list(labels),
        np.array([_safe(stats.skew, x[:, j]) for j in range(k)]),
        np.array([_safe(stats.kurtosis, x[:, j]) for j in range(k)]),
        np.array([_ks(x[:, j]) for j in range(k)]),
        n,
    )
    if k > 1:
        rep.correlation = np.corrcoef(x, rowvar=False)
        if sigma is not None:
            s = np.asarray(sigma, dtype=float)
            sd = np.sqrt(np.diag(s))
            expected = s / np.outer(sd, sd)
            rep.correlation_expected = expected
            with np.errstate(divide="ignore", invalid="ignore"):
                clip = lambda r: np.clip(r, -0.999999, 0.999999)  # noqa: E731
                z = (np.arctanh(clip(rep.correlation)) - np.arctanh(clip(expected))) * math.sqrt(n - 3)
            np.fill_diagonal(z, 0.0)
            rep.correlation_z = z
    return rep
