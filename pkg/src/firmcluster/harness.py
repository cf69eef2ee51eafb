"""Replicated model runs over experiment designs and their summary statistics.

Every run seed is a pure function of the experiment seed and the (design row,
replication) indices, so results do not depend on the worker count or on
execution order; rows are always returned sorted by those indices.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from itertools import combinations

import numpy as np
import pandas as pd
from scipy import stats as sps

from . import nsga2
from .designs import (
    SEED_DIMENSION,
    Design,
    ParamSpace,
    default_space,
    grid_design,
    lhs_sample,
    saltelli_design,
)
from .indicators import INDICATORS
from .landscape import Landscape
from .model import run
from .params import ModelParams, derive_seed, unit_to_seed
from .sobol import IndexRow, bootstrap_significance, split_outputs

log = logging.getLogger(__name__)


def final_indicators(params: ModelParams, landscape: Landscape | None = None) -> np.ndarray:
    return run(params, landscape).series[-1]


def map_runs(params_list: list[ModelParams], workers: int = 1, landscape: Landscape | None = None) -> np.ndarray:
    """Final-tick indicators for each parameter set, in input order."""
    if not params_list:
        return np.empty((0, len(INDICATORS)))
    fn = partial(final_indicators, landscape=landscape)
    if workers <= 1:
        return np.array([fn(p) for p in params_list])
    chunk = max(1, len(params_list) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(fn, params_list, chunksize=chunk)))


def params_from_row(fixed: ModelParams, names, row, seed: int | None = None, unit_seed: bool = False) -> ModelParams:
    """Apply one design row to ``fixed``.

    A ``seed`` column is read as a unit-interval value and hashed to a run seed
    when ``unit_seed`` is set; otherwise ``seed`` (if given) becomes the run seed.
    """
    values = {}
    for name, value in zip(names, row):
        if name == SEED_DIMENSION:
            values["seed"] = unit_to_seed(value) if unit_seed else int(value)
        else:
            values[name] = float(value)
    if seed is not None and "seed" not in values:
        values["seed"] = seed
    return fixed.with_symbols(values)


@dataclass
class ReplicationStats:
    mean: np.ndarray
    std: np.ndarray
    sharpe: np.ndarray
    n: int

    def get(self, indicator: str) -> tuple[float, float, float]:
        i = INDICATORS.index(indicator)
        return float(self.mean[i]), float(self.std[i]), float(self.sharpe[i])


def replication_stats(raw: np.ndarray) -> ReplicationStats:
    """Mean, sample std (n-1) and Sharpe ratio per column; Sharpe is NaN when std is 0 or undefined."""
    raw = np.atleast_2d(raw)
    n = raw.shape[0]
    mean = raw.mean(axis=0)
    if n > 1:
        std = raw.std(axis=0, ddof=1)
        # constant columns: exact zero rather than rounding residue from the mean
        std[np.ptp(raw, axis=0) == 0] = 0.0
    else:
        std = np.full(raw.shape[1], np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        sharpe = np.where(std > 0, mean / np.where(std > 0, std, 1.0), np.nan)
    return ReplicationStats(mean, std, sharpe, n)


def run_replications(params: ModelParams, n: int, base_seed: int, workers: int = 1):
    """Run ``params`` ``n`` times with seeds derived from ``base_seed``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    plist = [params.replace(seed=derive_seed(base_seed, r)) for r in range(n)]
    raw = map_runs(plist, workers)
    return replication_stats(raw), raw


def separation_distance(stats_i: ReplicationStats, stats_j: ReplicationStats, indicator: str) -> float:
    """``2 |mu_i - mu_j| / (sigma_i + sigma_j)``; NaN when the denominator is 0 or undefined."""
    mi, si, _ = stats_i.get(indicator)
    mj, sj, _ = stats_j.get(indicator)
    denom = si + sj
    if not denom > 0:
        return float("nan")
    return 2.0 * abs(mi - mj) / denom


def _quartiles(values) -> tuple[float, float, float, int]:
    values = np.asarray(values, dtype=np.float64)
    values = values[np.isfinite(values)]
    if values.shape[0] == 0:
        return (np.nan, np.nan, np.nan, 0)
    q1, q2, q3 = np.percentile(values, [25, 50, 75])
    return (float(q1), float(q2), float(q3), int(values.shape[0]))


@dataclass
class ConvergenceResult:
    design: Design
    raw: pd.DataFrame
    point_stats: pd.DataFrame
    quartiles: pd.DataFrame
    stats: list[ReplicationStats] = field(repr=False)


def convergence_experiment(
    space: ParamSpace | None,
    n_points: int,
    n_reps: int,
    seed: int,
    fixed: ModelParams | None = None,
    workers: int = 1,
    design: Design | None = None,
    vary_seed: bool = True,
) -> ConvergenceResult:
    """LHS points, ``n_reps`` replications each; Sharpe and separation quartiles per indicator.

    ``vary_seed=False`` reruns every replication with ``fixed.seed``, which
    isolates the parameter effect from run-to-run noise.
    """
    if n_points < 2 or n_reps < 2:
        raise ValueError("need n_points >= 2 and n_reps >= 2")
    fixed = fixed or ModelParams()
    space = space or default_space()
    if design is None:
        design = lhs_sample(space, n_points, seed)
    plist = []
    for i, row in enumerate(design.values.tolist()):
        point = params_from_row(fixed, design.names, row)
        base = derive_seed(seed, i)
        if vary_seed:
            plist.extend(point.replace(seed=derive_seed(base, r)) for r in range(n_reps))
        else:
            plist.extend([point] * n_reps)
    finals = map_runs(plist, workers)

    raw_rows, stat_rows, all_stats = [], [], []
    for i, row in enumerate(design.values.tolist()):
        block = finals[i * n_reps : (i + 1) * n_reps]
        st = replication_stats(block)
        all_stats.append(st)
        for r in range(n_reps):
            raw_rows.append([i, r, *row, *block[r]])
        for j, name in enumerate(INDICATORS):
            stat_rows.append([i, name, st.mean[j], st.std[j], st.sharpe[j], st.n])
    raw = pd.DataFrame(raw_rows, columns=["point", "replication", *design.names, *INDICATORS])
    point_stats = pd.DataFrame(stat_rows, columns=["point", "indicator", "mean", "std", "sharpe", "n"])

    q_rows = []
    for j, name in enumerate(INDICATORS):
        q_rows.append([name, "sharpe", *_quartiles([s.sharpe[j] for s in all_stats])])
        seps = [separation_distance(a, b, name) for a, b in combinations(all_stats, 2)]
        q_rows.append([name, "separation", *_quartiles(seps)])
    quartiles = pd.DataFrame(q_rows, columns=["indicator", "statistic", "q1", "median", "q3", "count"])
    return ConvergenceResult(design, raw, point_stats, quartiles, all_stats)


@dataclass
class GridResult:
    design: Design
    raw: pd.DataFrame
    summary: pd.DataFrame


def grid_experiment(axes, fixed: ModelParams | None, n_reps: int, seed: int, workers: int = 1) -> GridResult:
    """One raw row per run plus per-point means of the final indicators."""
    fixed = fixed or ModelParams()
    design = grid_design(axes)
    plist = []
    for i, row in enumerate(design.values.tolist()):
        point = params_from_row(fixed, design.names, row)
        base = derive_seed(seed, i)
        plist.extend(point.replace(seed=derive_seed(base, r)) for r in range(n_reps))
    finals = map_runs(plist, workers)
    raw_rows = []
    for i, row in enumerate(design.values.tolist()):
        for r in range(n_reps):
            raw_rows.append([i, r, *row, *finals[i * n_reps + r]])
    raw = pd.DataFrame(raw_rows, columns=["point", "replication", *design.names, *INDICATORS])
    summary = summarize_grid(raw, design.names)
    return GridResult(design, raw, summary)


def summarize_grid(raw: pd.DataFrame, names) -> pd.DataFrame:
    grouped = raw.groupby("point", sort=True)
    summary = grouped[list(names)].first()
    means = grouped[list(INDICATORS)].mean()
    summary = summary.join(means)
    summary["n"] = grouped.size()
    return summary.reset_index()


@dataclass
class GSAResult:
    design: Design
    outputs: np.ndarray
    indices: list[IndexRow]

    def index(self, indicator: str, parameter: str) -> IndexRow:
        for row in self.indices:
            if row.indicator == indicator and row.parameter == parameter:
                return row
        raise KeyError((indicator, parameter))


def gsa_experiment(
    space: ParamSpace | None,
    n_base: int,
    seed: int,
    fixed: ModelParams | None = None,
    workers: int = 1,
    n_boot: int = 200,
    level: float = 0.95,
    method: str = "sobol",
    landscape: Landscape | None = None,
) -> GSAResult:
    """Saltelli design, one run per row, Sobol indices with bootstrap for every indicator."""
    if n_base < 64:
        raise ValueError("n_base must be >= 64")
    fixed = fixed or ModelParams()
    space = space or default_space(include_seed=True)
    design = saltelli_design(space, n_base, seed, method=method)
    has_seed = SEED_DIMENSION in design.names
    plist = [
        params_from_row(fixed, design.names, row, seed=None if has_seed else derive_seed(seed, i), unit_seed=True)
        for i, row in enumerate(design.values.tolist())
    ]
    outputs = map_runs(plist, workers, landscape)
    k = len(design.names)
    rows: list[IndexRow] = []
    for j, name in enumerate(INDICATORS):
        y_a, y_b, y_ab = split_outputs(outputs[:, j], n_base, k)
        rows.extend(
            bootstrap_significance(
                y_a, y_b, y_ab, design.names, indicator=name, n_boot=n_boot, level=level, seed=derive_seed(seed, 1000 + j)
            )
        )
    return GSAResult(design, outputs, rows)


class ModelObjective:
    """Picklable ``(param vector, seed) -> (-avg_fitness, -diversity)`` for the optimizer."""

    def __init__(self, names, fixed: ModelParams):
        self.names = list(names)
        self.fixed = fixed

    def __call__(self, vector, seed: int):
        params = params_from_row(self.fixed, self.names, vector, seed=seed)
        final = final_indicators(params)
        return (-final[INDICATORS.index("avg_fitness")], -final[INDICATORS.index("diversity")])


@dataclass
class OptimizeResult:
    archive: nsga2.ParetoArchive
    table: pd.DataFrame
    compromise: nsga2.CompromiseSummary
    compromise_table: pd.DataFrame


def optimize_experiment(
    space: ParamSpace | None,
    fixed: ModelParams | None,
    population: int,
    generations: int,
    seed: int,
    f_threshold: float = 400.0,
    d_threshold: float = 0.4,
    min_samples: int = 5,
    resample_prob: float = 0.1,
    max_samples: int = 100,
    objective=None,
) -> OptimizeResult:
    """Noisy NSGA2 on (average fitness, diversity), both maximised, plus compromise filtering.

    ``objective`` replaces the model with any ``(vector, seed) -> (-f, -d)`` callable.
    """
    fixed = fixed or ModelParams()
    space = space or default_space()
    objective = objective or ModelObjective(space.names, fixed)
    archive = nsga2.optimize(
        objective,
        space,
        population=population,
        generations=generations,
        seed=seed,
        noisy=True,
        resample_prob=resample_prob,
        max_samples=max_samples,
        objective_names=("mean_f", "mean_d"),
    )
    mean_f = -archive.objectives[:, 0]
    mean_d = -archive.objectives[:, 1]
    table = pd.DataFrame(archive.params, columns=archive.names)
    table["mean_f"] = mean_f
    table["mean_d"] = mean_d
    table["n_samples"] = archive.n_samples
    table["rank"] = archive.ranks
    compromise = nsga2.compromise_filter(archive, f_threshold, d_threshold, min_samples)
    comp_rows = [[name, compromise.mean[name], compromise.std[name], len(compromise.indices)] for name in archive.names] if not compromise.empty else []
    compromise_table = pd.DataFrame(comp_rows, columns=["parameter", "mean", "std", "n_points"])
    return OptimizeResult(archive, table, compromise, compromise_table)


def spearman(x, y) -> tuple[float, float]:
    res = sps.spearmanr(x, y)
    return float(res.statistic), float(res.pvalue)
