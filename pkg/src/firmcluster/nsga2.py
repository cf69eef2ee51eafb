"""Steady-state NSGA2 with optional replication embedding for noisy objectives.

Objectives are minimised. For noisy problems every individual keeps a running
sum of its objective samples; the sample count enters the ranking as an extra
objective (``-n_samples``), and each iteration resamples an existing
individual with probability ``resample_prob`` instead of breeding.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _accel
from .designs import ParamSpace, format_number
from .params import derive_seed

log = logging.getLogger(__name__)


def dominates(a, b) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def _dominance_matrix(objs: np.ndarray) -> np.ndarray:
    le = (objs[:, None, :] <= objs[None, :, :]).all(axis=-1)
    lt = (objs[:, None, :] < objs[None, :, :]).any(axis=-1)
    return le & lt


@_accel.njit
def _ranks_loop(objs):
    n, m = objs.shape
    count = np.zeros(n, dtype=np.int64)  # number of dominators
    dom = np.zeros((n, n), dtype=np.bool_)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            le = True
            lt = False
            for k in range(m):
                if objs[i, k] > objs[j, k]:
                    le = False
                    break
                if objs[i, k] < objs[j, k]:
                    lt = True
            if le and lt:
                dom[i, j] = True
                count[j] += 1
    ranks = np.full(n, -1, dtype=np.int64)
    current = np.empty(n, dtype=np.int64)
    size = 0
    for i in range(n):
        if count[i] == 0:
            current[size] = i
            size += 1
    r = 0
    while size > 0:
        nxt = np.empty(n, dtype=np.int64)
        nsize = 0
        for a in range(size):
            i = current[a]
            ranks[i] = r
            for j in range(n):
                if dom[i, j]:
                    count[j] -= 1
                    if count[j] == 0:
                        nxt[nsize] = j
                        nsize += 1
        current = nxt
        size = nsize
        r += 1
    return ranks


def _ranks_numpy(objs):
    n = objs.shape[0]
    ranks = np.full(n, -1, dtype=np.int64)
    dom = _dominance_matrix(objs)
    remaining = dom.sum(axis=0)
    front = np.flatnonzero(remaining == 0)
    r = 0
    while front.shape[0]:
        ranks[front] = r
        remaining = remaining - dom[front].sum(axis=0)
        remaining[ranks >= 0] = -1
        front = np.flatnonzero(remaining == 0)
        r += 1
    return ranks


def non_dominated_ranks(objs) -> np.ndarray:
    """Front index (0 = non-dominated) of each row of ``objs``."""
    objs = np.ascontiguousarray(objs, dtype=np.float64)
    if objs.shape[0] == 0:
        return np.full(0, -1, dtype=np.int64)
    if _accel.get_backend() == "numba":
        return _ranks_loop(objs)
    return _ranks_numpy(objs)


def pareto_filter(points) -> np.ndarray:
    """Indices of the points not dominated by any other point."""
    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    dom = _dominance_matrix(points)
    return np.flatnonzero(~dom.any(axis=0))


def crowding_distance(front) -> np.ndarray:
    """Sum of normalised neighbour gaps per objective; boundary points get inf.

    Repeated objective vectors share one distance: the first copy gets the
    value computed on the distinct vectors and later copies get 0.
    """
    front = np.asarray(front, dtype=np.float64)
    n, m = front.shape
    dist = np.zeros(n)
    order = np.lexsort(front.T[::-1])
    srt = front[order]
    repeat = np.zeros(n, dtype=bool)
    repeat[order[1:]] = np.all(srt[1:] == srt[:-1], axis=1)
    keep = np.flatnonzero(~repeat)
    uniq = front[keep]
    if keep.shape[0] <= 2:
        dist[keep] = np.inf
        return dist
    d = np.zeros(keep.shape[0])
    for j in range(m):
        o = np.argsort(uniq[:, j], kind="stable")
        col = uniq[o, j]
        d[o[0]] = np.inf
        d[o[-1]] = np.inf
        span = col[-1] - col[0]
        if span > 0:
            d[o[1:-1]] += (col[2:] - col[:-2]) / span
    dist[keep] = d
    return dist


def hypervolume_2d(points, reference) -> float:
    """Area dominated by ``points`` and bounded by ``reference`` (minimisation)."""
    pts = np.asarray(points, dtype=np.float64)
    rx, ry = reference
    pts = pts[(pts[:, 0] < rx) & (pts[:, 1] < ry)]
    if pts.shape[0] == 0:
        return 0.0
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    area = 0.0
    best_y = ry
    for x, y in pts:
        if y < best_y:
            area += (rx - x) * (best_y - y)
            best_y = y
    return float(area)


@dataclass
class Individual:
    genes: np.ndarray  # position in the unit cube
    sums: np.ndarray
    n_samples: int = 1
    rank: int = 0
    crowding: float = 0.0

    @property
    def mean(self) -> np.ndarray:
        return self.sums / self.n_samples


@dataclass
class ParetoArchive:
    names: list[str]
    params: np.ndarray
    objectives: np.ndarray  # mean minimised objectives
    n_samples: np.ndarray
    ranks: np.ndarray
    objective_names: list[str] = field(default_factory=list)

    def __len__(self):
        return self.params.shape[0]

    def non_dominated(self) -> np.ndarray:
        return pareto_filter(self.objectives)

    def to_csv(self, objective_values=None) -> str:
        values = self.objectives if objective_values is None else objective_values
        names = self.objective_names or [f"objective_{j}" for j in range(values.shape[1])]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([*self.names, *names, "n_samples", "rank"])
        for i in range(len(self)):
            writer.writerow(
                [format_number(v) for v in self.params[i]]
                + [format_number(v) for v in values[i]]
                + [str(int(self.n_samples[i])), str(int(self.ranks[i]))]
            )
        return buf.getvalue()


def sbx_crossover(rng, x1, x2, eta: float):
    """Bounded simulated binary crossover on [0, 1]; returns one child."""
    child = x1.copy()
    for i in range(x1.shape[0]):
        if rng.random() > 0.5 or abs(x1[i] - x2[i]) < 1e-14:
            continue
        lo, hi = min(x1[i], x2[i]), max(x1[i], x2[i])
        u = rng.random()
        beta = 1.0 + 2.0 * lo / (hi - lo)
        alpha = 2.0 - beta ** -(eta + 1.0)
        bq = (u * alpha) ** (1.0 / (eta + 1.0)) if u <= 1.0 / alpha else (1.0 / (2.0 - u * alpha)) ** (1.0 / (eta + 1.0))
        c1 = 0.5 * (lo + hi - bq * (hi - lo))
        beta = 1.0 + 2.0 * (1.0 - hi) / (hi - lo)
        alpha = 2.0 - beta ** -(eta + 1.0)
        bq = (u * alpha) ** (1.0 / (eta + 1.0)) if u <= 1.0 / alpha else (1.0 / (2.0 - u * alpha)) ** (1.0 / (eta + 1.0))
        c2 = 0.5 * (lo + hi + bq * (hi - lo))
        c1, c2 = min(max(c1, 0.0), 1.0), min(max(c2, 0.0), 1.0)
        child[i] = c2 if rng.random() <= 0.5 else c1
    return child


def polynomial_mutation(rng, x, eta: float, rate: float):
    """Bounded polynomial mutation on [0, 1], each coordinate with probability ``rate``."""
    y = x.copy()
    for i in range(y.shape[0]):
        if rng.random() > rate:
            continue
        u = rng.random()
        power = 1.0 / (eta + 1.0)
        if u < 0.5:
            xy = 1.0 - y[i]
            delta = (2.0 * u + (1.0 - 2.0 * u) * xy ** (eta + 1.0)) ** power - 1.0
        else:
            xy = y[i]
            delta = 1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy ** (eta + 1.0)) ** power
        y[i] = min(max(y[i] + delta, 0.0), 1.0)
    return y


class _Evaluator:
    def __init__(self, objective, space: ParamSpace, seed: int):
        self.objective = objective
        self.space = space
        self.seed = seed
        self.count = 0

    def next_seed(self) -> int:
        s = derive_seed(self.seed, self.count)
        self.count += 1
        return s

    def __call__(self, genes):
        params = self.space.from_unit(genes)[0]
        seed = self.next_seed()
        try:
            values = np.asarray(self.objective(params, seed), dtype=np.float64)
        except Exception as exc:  # any model failure discards the candidate
            log.warning("evaluation failed at %s: %s", params.tolist(), exc)
            return None
        if not np.all(np.isfinite(values)):
            log.warning("non-finite objectives %s at %s", values.tolist(), params.tolist())
            return None
        return values


def _objective_matrix(pop: list[Individual], noisy: bool) -> np.ndarray:
    objs = np.array([ind.sums for ind in pop]) / np.array([ind.n_samples for ind in pop], dtype=np.float64)[:, None]
    if noisy:
        objs = np.column_stack([objs, -np.array([ind.n_samples for ind in pop], dtype=np.float64)])
    return objs


def _rank_population(pop: list[Individual], noisy: bool):
    objs = _objective_matrix(pop, noisy)
    ranks = non_dominated_ranks(objs)
    crowd = np.zeros(len(pop))
    for r in np.unique(ranks):
        members = np.flatnonzero(ranks == r)
        crowd[members] = crowding_distance(objs[members])
    for ind, r, c in zip(pop, ranks, crowd):
        ind.rank = int(r)
        ind.crowding = float(c)


def _recrowd_front(pop: list[Individual], noisy: bool, rank: int):
    # dropping a member of the last front leaves every rank unchanged
    members = [ind for ind in pop if ind.rank == rank]
    if members:
        for ind, c in zip(members, crowding_distance(_objective_matrix(members, noisy))):
            ind.crowding = float(c)


def _tournament(rng, pop: list[Individual]) -> Individual:
    a, b = rng.integers(0, len(pop), size=2)
    ia, ib = pop[a], pop[b]
    if ia.rank != ib.rank:
        return ia if ia.rank < ib.rank else ib
    return ia if ia.crowding >= ib.crowding else ib


def optimize(
    objective: Callable[[np.ndarray, int], Sequence[float]],
    space: ParamSpace,
    population: int,
    generations: int,
    seed: int,
    noisy: bool = False,
    resample_prob: float = 0.1,
    max_samples: int = 100,
    eta_crossover: float = 2.0,
    eta_mutation: float = 20.0,
    mutation_rate: float | None = None,
    callback: Callable[[int, list[Individual]], None] | None = None,
    objective_names: Sequence[str] = (),
) -> ParetoArchive:
    """Minimise ``objective(params, seed)`` over ``space``.

    ``generations`` counts steady-state iterations, each costing one
    evaluation (a resample or one offspring).
    """
    if population < 4:
        raise ValueError("population must be >= 4")
    if generations < 1:
        raise ValueError("generations must be >= 1")
    rng = np.random.default_rng(seed)
    evaluate = _Evaluator(objective, space, derive_seed(seed, 0xE7A1))
    k = len(space)
    rate = 1.0 / k if mutation_rate is None else mutation_rate

    pop: list[Individual] = []
    attempts = 0
    while len(pop) < population:
        attempts += 1
        if attempts > 20 * population:
            raise RuntimeError("too many failed evaluations while building the initial population")
        genes = rng.random(k)
        values = evaluate(genes)
        if values is not None:
            pop.append(Individual(genes, values.copy()))
    _rank_population(pop, noisy)

    for it in range(generations):
        if noisy and rng.random() < resample_prob:
            open_slots = [i for i, ind in enumerate(pop) if ind.n_samples < max_samples]
            if open_slots:
                ind = pop[open_slots[int(rng.integers(0, len(open_slots)))]]
                values = evaluate(ind.genes)
                if values is not None:
                    ind.sums = ind.sums + values
                    ind.n_samples += 1
                    _rank_population(pop, noisy)
                if callback is not None:
                    callback(it, pop)
                continue
        p1, p2 = _tournament(rng, pop), _tournament(rng, pop)
        child = sbx_crossover(rng, p1.genes, p2.genes, eta_crossover)
        child = polynomial_mutation(rng, child, eta_mutation, rate)
        values = evaluate(child)
        if values is not None:
            pop.append(Individual(child, values.copy()))
            _rank_population(pop, noisy)
            worst_rank = max(ind.rank for ind in pop)
            candidates = [i for i, ind in enumerate(pop) if ind.rank == worst_rank]
            victim = min(reversed(candidates), key=lambda i: pop[i].crowding)
            pop.pop(victim)
            _recrowd_front(pop, noisy, worst_rank)
        if callback is not None:
            callback(it, pop)

    return ParetoArchive(
        names=space.names,
        params=space.from_unit(np.array([ind.genes for ind in pop])),
        objectives=np.array([ind.mean for ind in pop]),
        n_samples=np.array([ind.n_samples for ind in pop], dtype=np.int64),
        ranks=np.array([ind.rank for ind in pop], dtype=np.int64),
        objective_names=list(objective_names),
    )


@dataclass
class CompromiseSummary:
    indices: np.ndarray
    mean: dict
    std: dict

    @property
    def empty(self) -> bool:
        return self.indices.shape[0] == 0


def compromise_filter(archive: ParetoArchive, f_threshold: float, d_threshold: float, min_samples: int,
                      fitness=None, diversity=None) -> CompromiseSummary:
    """Keep points with enough samples and mean fitness / diversity above thresholds.

    ``fitness`` and ``diversity`` default to the negated first two objectives.
    """
    f = -archive.objectives[:, 0] if fitness is None else np.asarray(fitness)
    d = -archive.objectives[:, 1] if diversity is None else np.asarray(diversity)
    keep = np.flatnonzero((archive.n_samples >= min_samples) & (f > f_threshold) & (d > d_threshold))
    if keep.shape[0] == 0:
        return CompromiseSummary(keep, {}, {})
    sel = archive.params[keep]
    std = sel.std(axis=0, ddof=1) if keep.shape[0] > 1 else np.zeros(sel.shape[1])
    return CompromiseSummary(
        keep,
        dict(zip(archive.names, sel.mean(axis=0).tolist())),
        dict(zip(archive.names, std.tolist())),
    )
