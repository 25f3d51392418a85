"""Monte Carlo harness: power curves, p-value ECDFs, and product-statistic
density samples, all reproducible and CSV-oriented.

Reproducibility scheme: replicates are split into fixed-size blocks; block
(point_index, block_index) draws from a counter-based generator seeded by
SeedSequence(seed, spawn_key=(point_index, block_index)). Blocks are merged
by exact integer counts, so results are identical for any worker count,
including serial runs.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from io import StringIO

import numpy as np

from .closed_form import build_extended_region, build_js_region, build_minimax_region
from .pvalues import DEFAULT_RESOLUTION, minimax_pvalue_batch
from .regions import RejectionRegion2D, rejection_prob_at_points, _cdf_array
from .statmath import std_normal_quantile

__all__ = [
    "SimSpec",
    "SimRow",
    "SimResult",
    "EcdfTable",
    "DensityTable",
    "simulate_power",
    "simulate_pvalue_ecdf",
    "sample_sobel_density",
    "sample_product_statistic",
    "worker_count",
]

_METHODS = ("minimax", "extended", "bayes", "js", "sobel")
_BLOCK = 4096
_DEGENERATE = 1.0 - 1e-9


def worker_count() -> int:
    """Worker cap: COMPOSITE_NULL_THREADS if set, else up to 8 cores."""
    env = os.environ.get("COMPOSITE_NULL_THREADS")
    if env is not None:
        try:
            v = int(env)
        except ValueError:
            raise ValueError(
                f"COMPOSITE_NULL_THREADS must be an integer, got {env!r}") from None
        if v < 1:
            raise ValueError(f"COMPOSITE_NULL_THREADS must be >= 1, got {v}")
        return v
    return min(os.cpu_count() or 1, 8)


@dataclass(frozen=True)
class SimSpec:
    """Power-simulation request.

    Each replicate draws ``n`` i.i.d. bivariate standard-normal pairs
    shifted by delta and standardizes the means with the known unit
    variance. All methods are applied to the same draws.
    """

    methods: tuple[str, ...]
    delta_grid: tuple[tuple[float, float], ...]
    n: int
    reps: int
    seed: int
    alpha: float = 0.05
    bayes_region: RejectionRegion2D | None = None
    bayes_randomized: bool = True

    def __post_init__(self):
        methods = tuple(self.methods)
        object.__setattr__(self, "methods", methods)
        if not methods:
            raise ValueError("methods must be non-empty")
        for m in methods:
            if m not in _METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {_METHODS}")
        grid = tuple((float(dx), float(dy)) for dx, dy in self.delta_grid)
        if not grid:
            raise ValueError("delta_grid must be non-empty")
        object.__setattr__(self, "delta_grid", grid)
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n!r}")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps!r}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if "bayes" in methods and self.bayes_region is None:
            raise ValueError("the bayes method needs a solved region (bayes_region)")


@dataclass(frozen=True)
class SimRow:
    delta_x: float
    delta_y: float
    method: str
    alpha: float
    n: int
    reps: int
    reject_rate: float
    mc_se: float
    seed: int


_POWER_HEADER = "delta_x,delta_y,method,alpha,n,reps,reject_rate,mc_se,seed"


@dataclass(frozen=True)
class SimResult:
    rows: tuple[SimRow, ...]

    def to_csv(self) -> str:
        buf = StringIO()
        buf.write(_POWER_HEADER + "\n")
        for r in self.rows:
            buf.write(f"{r.delta_x!r},{r.delta_y!r},{r.method},{r.alpha!r},"
                      f"{r.n},{r.reps},{r.reject_rate!r},{r.mc_se!r},{r.seed}\n")
        return buf.getvalue()


def _method_evaluators(spec: SimSpec):
    """One vectorized decision function per method, built once per run."""
    evals = {}
    for name in spec.methods:
        if name == "minimax":
            region = build_minimax_region(spec.alpha)
            evals[name] = ("region", region, True)
        elif name == "extended":
            region = build_extended_region(spec.alpha)
            evals[name] = ("region", region, True)
        elif name == "bayes":
            evals[name] = ("region", spec.bayes_region, spec.bayes_randomized)
        elif name == "js":
            evals[name] = ("js", std_normal_quantile(1.0 - spec.alpha / 2.0), None)
        else:
            evals[name] = ("sobel", std_normal_quantile(1.0 - spec.alpha / 2.0), None)
    # warm lazy region caches before blocks run concurrently
    dummy = np.zeros(1)
    for kind, obj, _ in evals.values():
        if kind == "region":
            rejection_prob_at_points(obj, dummy, dummy)
    return evals


def _power_block(spec: SimSpec, evals, point_index: int, block_index: int,
                 size: int) -> dict[str, int]:
    delta = spec.delta_grid[point_index]
    ss = np.random.SeedSequence(spec.seed, spawn_key=(point_index, block_index))
    gen = np.random.Generator(np.random.Philox(ss))
    draws = gen.standard_normal((size, spec.n, 2))
    means = draws.mean(axis=1)
    means[:, 0] += delta[0]
    means[:, 1] += delta[1]
    root_n = math.sqrt(spec.n)
    zx = root_n * means[:, 0]
    zy = root_n * means[:, 1]
    aux = None
    counts = {}
    for name, (kind, obj, randomized) in evals.items():
        if kind == "region":
            probs = rejection_prob_at_points(obj, zx, zy)
            if randomized:
                if aux is None:
                    aux = gen.uniform(size=size)
                rej = aux < probs
            else:
                rej = probs >= _DEGENERATE
        elif kind == "js":
            rej = (np.abs(zx) > obj) & (np.abs(zy) > obj)
        else:
            # known unit variance per the identity-covariance design
            denom = np.hypot(means[:, 1], means[:, 0])
            stat = np.zeros(size)
            ok = denom > 0.0
            stat[ok] = root_n * means[ok, 0] * means[ok, 1] / denom[ok]
            rej = np.abs(stat) > obj
        counts[name] = int(rej.sum())
    return counts


def simulate_power(spec: SimSpec) -> SimResult:
    """Monte Carlo rejection rates per delta point and method."""
    evals = _method_evaluators(spec)
    n_blocks = (spec.reps + _BLOCK - 1) // _BLOCK
    tasks = []
    for pi in range(len(spec.delta_grid)):
        for bi in range(n_blocks):
            size = min(_BLOCK, spec.reps - bi * _BLOCK)
            tasks.append((pi, bi, size))

    totals = [dict.fromkeys(spec.methods, 0) for _ in spec.delta_grid]
    workers = worker_count()
    if workers == 1 or len(tasks) == 1:
        results = [_power_block(spec, evals, *t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: _power_block(spec, evals, *t), tasks))
    for (pi, _, _), counts in zip(tasks, results):
        for name, c in counts.items():
            totals[pi][name] += c

    rows = []
    for pi, (dx, dy) in enumerate(spec.delta_grid):
        for name in spec.methods:
            rate = totals[pi][name] / spec.reps
            se = math.sqrt(rate * (1.0 - rate) / spec.reps)
            rows.append(SimRow(dx, dy, name, spec.alpha, spec.n, spec.reps,
                               rate, se, spec.seed))
    return SimResult(tuple(rows))


@dataclass(frozen=True)
class EcdfTable:
    """Sorted p-values with ECDF levels per method."""

    entries: tuple[tuple[str, np.ndarray], ...]

    def to_csv(self) -> str:
        buf = StringIO()
        buf.write("method,p_value,ecdf\n")
        for method, sorted_p in self.entries:
            reps = len(sorted_p)
            for i, p in enumerate(sorted_p, start=1):
                buf.write(f"{method},{float(p)!r},{i / reps!r}\n")
        return buf.getvalue()

    def pvalues(self, method: str) -> np.ndarray:
        for name, arr in self.entries:
            if name == method:
                return arr
        raise KeyError(method)


def simulate_pvalue_ecdf(reps: int, delta_star=(0.0, 0.0),
                         resolution: int = DEFAULT_RESOLUTION,
                         seed: int = 0) -> EcdfTable:
    """Draw statistic pairs at delta_star and tabulate both p-value ECDFs.

    The pair is drawn directly from the bivariate normal around delta_star
    (the statistic's own law), then scored by the generalized p-value and
    the joint-significance p-value.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps!r}")
    dx, dy = (float(v) for v in delta_star)
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    z = gen.standard_normal((reps, 2))
    zx = z[:, 0] + dx
    zy = z[:, 1] + dy
    phat = minimax_pvalue_batch(zx, zy, resolution)
    pjs = np.minimum(1.0, np.maximum(2.0 * _cdf_array(-np.abs(zx)),
                                     2.0 * _cdf_array(-np.abs(zy))))
    return EcdfTable((("extended_minimax", np.sort(phat)), ("js", np.sort(pjs))))


@dataclass(frozen=True)
class DensityTable:
    """Long-format samples keyed by the exposure-coordinate mean."""

    entries: tuple[tuple[float, np.ndarray], ...]

    def to_csv(self) -> str:
        buf = StringIO()
        buf.write("delta_x,sample\n")
        for dx, samples in self.entries:
            for s in samples:
                buf.write(f"{dx!r},{float(s)!r}\n")
        return buf.getvalue()

    def samples(self, delta_x: float) -> np.ndarray:
        for dx, arr in self.entries:
            if dx == delta_x:
                return arr
        raise KeyError(delta_x)


def _estimate_block(delta_x: float, n: int, reps: int, gen) -> tuple:
    draws = gen.standard_normal((reps, n, 2))
    draws[:, :, 0] += delta_x
    dxh = draws[:, :, 0].mean(axis=1)
    dyh = draws[:, :, 1].mean(axis=1)
    sx = draws[:, :, 0].std(axis=1, ddof=1)
    sy = draws[:, :, 1].std(axis=1, ddof=1)
    return dxh, dyh, sx, sy


def sample_sobel_density(delta_x_list, n: int, reps: int, seed: int = 0) -> DensityTable:
    """Replicated product-ratio statistics under a zero second coordinate.

    For each delta_x: reps replicates of n pairs with means (delta_x, 0),
    estimates and SEs taken from the sample, and the standardized product
    statistic computed from them.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2 to estimate SEs, got {n!r}")
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps!r}")
    entries = []
    for pi, delta_x in enumerate(float(v) for v in delta_x_list):
        ss = np.random.SeedSequence(seed, spawn_key=(pi,))
        gen = np.random.Generator(np.random.Philox(ss))
        dxh, dyh, sx, sy = _estimate_block(delta_x, n, reps, gen)
        denom = np.hypot(dyh * sx, dxh * sy)
        stat = np.zeros(reps)
        ok = denom > 0.0
        stat[ok] = math.sqrt(n) * dxh[ok] * dyh[ok] / denom[ok]
        entries.append((delta_x, stat))
    return DensityTable(tuple(entries))


def sample_product_statistic(delta_x: float, n: int, reps: int, seed: int = 0,
                             ) -> np.ndarray:
    """Rescaled product estimates n*dx_hat*dy_hat/(s_x*s_y), same design as
    sample_sobel_density; near the double null this approaches the law of a
    product of two independent standard normals."""
    if n < 2:
        raise ValueError(f"n must be >= 2 to estimate SEs, got {n!r}")
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps!r}")
    ss = np.random.SeedSequence(seed, spawn_key=(0,))
    gen = np.random.Generator(np.random.Philox(ss))
    dxh, dyh, sx, sy = _estimate_block(float(delta_x), n, reps, gen)
    return n * dxh * dyh / (sx * sy)
