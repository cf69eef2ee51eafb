"""Agent-based model of idea evolution inside and between clustered firms.

Each tick runs, in order: intra-firm crossover, mutation, product selection,
and distance-decayed inter-firm exchange. Employees of all firms live in one
``(n_employees, G)`` genome matrix ordered by firm, which keeps the per-tick
work in a handful of array kernels (see :mod:`firmcluster.kernels`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionError, StateError
from .indicators import INDICATORS, indicator_row
from .landscape import Landscape, cached_landscape
from .params import ModelParams

AREA_SIZE = 100.0
GENOME_INIT_BOUND = 10.0


def rank_size_sizes(largest_firm_size: int, size_hierarchy: float, n_firms: int) -> list[int]:
    """Firm sizes ``round(S_0 * k^-alpha)`` for ranks 1..N, at least 1 each."""
    ranks = np.arange(1, n_firms + 1, dtype=np.float64)
    sizes = np.rint(largest_firm_size * ranks ** (-float(size_hierarchy)))
    return [max(1, int(s)) for s in sizes]


@dataclass(frozen=True)
class Firm:
    index: int
    location: tuple[float, float]
    size: int
    employees: np.ndarray
    product: np.ndarray
    product_fitness: float


@dataclass(eq=False)
class ModelState:
    params: ModelParams
    landscape: Landscape
    locations: np.ndarray
    sizes: np.ndarray
    offsets: np.ndarray
    genomes: np.ndarray
    products: np.ndarray
    product_fitness: np.ndarray
    rng: np.random.Generator
    time: int = 0
    firm_of: np.ndarray = field(init=False, repr=False)
    pair_prob: np.ndarray = field(init=False, repr=False)
    n_share: np.ndarray = field(init=False, repr=False)
    # per-employee fitness cache; rows flagged dirty are stale
    fitness: np.ndarray = field(init=False, repr=False)
    dirty: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.fitness = np.zeros(self.genomes.shape[0])
        self.dirty = np.ones(self.genomes.shape[0], dtype=bool)
        self.firm_of = np.repeat(np.arange(len(self.sizes)), self.sizes)
        diff = self.locations[:, None, :] - self.locations[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=-1))
        pair_prob = self.params.interaction_prob * np.exp(-dist / self.params.distance_decay)
        np.fill_diagonal(pair_prob, 0.0)
        self.pair_prob = pair_prob
        self.n_share = np.rint(self.params.product_share * self.sizes).astype(np.int64)

    @property
    def n_firms(self) -> int:
        return len(self.sizes)

    def firm(self, k: int) -> Firm:
        a, b = self.offsets[k], self.offsets[k + 1]
        return Firm(
            index=k,
            location=(float(self.locations[k, 0]), float(self.locations[k, 1])),
            size=int(self.sizes[k]),
            employees=self.genomes[a:b].copy(),
            product=self.products[k].copy(),
            product_fitness=float(self.product_fitness[k]),
        )

    def firms(self) -> list[Firm]:
        return [self.firm(k) for k in range(self.n_firms)]

    def dump(self) -> dict:
        """JSON-ready snapshot of firm-level state."""
        return {
            "time": self.time,
            "firms": [
                {
                    "index": k,
                    "location": self.locations[k].tolist(),
                    "size": int(self.sizes[k]),
                    "product": self.products[k].tolist(),
                    "product_fitness": float(self.product_fitness[k]),
                }
                for k in range(self.n_firms)
            ],
        }


def init_state(params: ModelParams, landscape: Landscape, locations=None, sizes=None) -> ModelState:
    """Random initial cluster.

    ``locations`` and ``sizes`` override the random placement and the
    rank-size law (used by calibration experiments on hand-built clusters).
    """
    if landscape.genome_size != params.genome_size:
        raise DimensionError(
            f"landscape genome_size {landscape.genome_size} != params genome_size {params.genome_size}"
        )
    rng = np.random.default_rng(params.seed)
    if sizes is None:
        sizes = rank_size_sizes(params.largest_firm_size, params.size_hierarchy, params.n_firms)
    sizes = np.asarray(sizes, dtype=np.int64)
    n_firms = len(sizes)
    drawn_locations = rng.uniform(0.0, AREA_SIZE, size=(n_firms, 2))
    locations = drawn_locations if locations is None else np.asarray(locations, dtype=np.float64).reshape(n_firms, 2)
    offsets = np.zeros(n_firms + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    genomes = rng.uniform(-GENOME_INIT_BOUND, GENOME_INIT_BOUND, size=(int(offsets[-1]), params.genome_size))
    chosen = offsets[:-1] + rng.integers(0, sizes)
    products = genomes[chosen].copy()
    product_fitness = landscape.evaluate_many(products)
    return ModelState(
        params=params,
        landscape=landscape,
        locations=locations,
        sizes=sizes,
        offsets=offsets,
        genomes=genomes,
        products=products,
        product_fitness=product_fitness,
        rng=rng,
    )


def intra_firm_exchange(state: ModelState, params: ModelParams | None = None) -> np.ndarray:
    """Synchronous one-way crossover with a random colleague. Returns the crossing employees."""
    p = params or state.params
    rng = state.rng
    n, g = state.genomes.shape
    if p.crossover_prob == 0.0:
        return np.empty(0, dtype=np.int64)
    own_size = state.sizes[state.firm_of]
    recipients = bernoulli_positions(rng, n, p.crossover_prob)
    recipients = recipients[own_size[recipients] > 1]
    if recipients.shape[0] == 0:
        return recipients
    firm = state.firm_of[recipients]
    local = recipients - state.offsets[firm]
    draw = np.floor(rng.random(recipients.shape[0]) * (own_size[recipients] - 1)).astype(np.int64)
    donors = state.offsets[firm] + draw + (draw >= local)
    gene_mask = rng.random((recipients.shape[0], g)) < p.crossover_share
    kernels.crossover(state.genomes, recipients, donors, gene_mask)
    state.dirty[recipients] = True
    return recipients


def mutate(state: ModelState, params: ModelParams | None = None) -> int:
    """Uniform increments on [-x_M/2, x_M/2) per gene with probability p_M. Returns mutation count."""
    p = params or state.params
    if p.mutation_prob == 0.0:
        return 0
    flat = state.genomes.reshape(-1)
    hits = bernoulli_positions(state.rng, flat.shape[0], p.mutation_prob)
    flat[hits] += (state.rng.random(hits.shape[0]) - 0.5) * p.mutation_amplitude
    state.dirty[hits // state.genomes.shape[1]] = True
    return int(hits.shape[0])


def select_products(state: ModelState, params: ModelParams | None = None, landscape: Landscape | None = None) -> np.ndarray:
    """Per-firm argmax product, then copy it onto round(s_P * S_k) random employees.

    Only genomes changed since the previous selection are re-evaluated.
    Returns the fitness of every employee genome at this substep.
    """
    landscape = landscape or state.landscape
    fitness = state.fitness
    stale = np.flatnonzero(state.dirty)
    if stale.shape[0]:
        fitness[stale] = landscape.evaluate_many(state.genomes[stale])
        state.dirty[:] = False
    if state.n_share.any():
        keys = state.rng.random(state.genomes.shape[0])
    else:
        keys = np.zeros(state.genomes.shape[0])
    kernels.select_products(
        state.genomes, fitness, state.offsets, keys, state.n_share, state.products, state.product_fitness
    )
    return fitness.copy()


SPARSE_THRESHOLD = 0.05


def bernoulli_positions(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
    """Sorted indices of successes among ``n`` independent Bernoulli(p) trials.

    Small ``p`` uses a binomial count plus a uniform distinct subset, which has
    the same law as per-trial draws at O(successes) cost.
    """
    if p <= 0.0 or n == 0:
        return np.empty(0, dtype=np.int64)
    if p > SPARSE_THRESHOLD:
        return np.flatnonzero(rng.random(n) < p)
    count = int(rng.binomial(n, p))
    pos = (rng.random(count) * n).astype(np.int64)
    _make_distinct(rng, np.zeros(count, dtype=np.int64), np.full(count, n, dtype=np.int64), pos)
    pos.sort()
    return pos


def _make_distinct(rng, block, block_n, pos):
    # Redraw repeated pair positions within a block until all are distinct,
    # turning with-replacement draws into a uniform subset of the block.
    if pos.shape[0] < 2:
        return
    keys = block * int(block_n.max()) + pos
    if np.unique(keys).shape[0] == keys.shape[0]:
        return
    seen = set()
    for i in range(keys.shape[0]):
        key = (int(block[i]), int(pos[i]))
        while key in seen:
            pos[i] = rng.integers(0, block_n[i])
            key = (int(block[i]), int(pos[i]))
        seen.add(key)


def interaction_events(state: ModelState, params: ModelParams | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Draw the (recipient, donor) employee pairs interacting this tick.

    Pairs come back sorted by recipient then donor global index.
    """
    p = params or state.params
    rng = state.rng
    empty = (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))
    if p.interaction_prob == 0.0 or state.n_firms < 2:
        return empty
    sizes, offsets, prob = state.sizes, state.offsets, state.pair_prob
    recipients, donors = [], []
    if p.interaction_sampling == "pairwise":
        for k in range(state.n_firms):
            for l in range(state.n_firms):
                if k == l or prob[k, l] == 0.0:
                    continue
                hits = np.flatnonzero(rng.random(sizes[k] * sizes[l]) < prob[k, l])
                recipients.append(offsets[k] + hits // sizes[l])
                donors.append(offsets[l] + hits % sizes[l])
        if not recipients:
            return empty
        recipients = np.concatenate(recipients).astype(np.int64)
        donors = np.concatenate(donors).astype(np.int64)
    else:
        n_pairs = np.multiply.outer(sizes, sizes)
        counts = rng.binomial(n_pairs, prob)
        kk, ll = np.nonzero(counts)
        if kk.shape[0] == 0:
            return empty
        block = np.repeat(np.arange(kk.shape[0]), counts[kk, ll])
        block_n = n_pairs[kk, ll][block]
        pos = (rng.random(block.shape[0]) * block_n).astype(np.int64)
        if p.interaction_sampling == "binomial":
            _make_distinct(rng, block, block_n, pos)
        donor_firm = ll[block]
        recipients = offsets[kk[block]] + pos // sizes[donor_firm]
        donors = offsets[donor_firm] + pos % sizes[donor_firm]
    order = np.lexsort((donors, recipients))
    return recipients[order], donors[order]


def inter_firm_exchange(state: ModelState, params: ModelParams | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Informal exchange between employees of distinct firms. Returns the interacting pairs."""
    p = params or state.params
    recipients, donors = interaction_events(state, p)
    if recipients.shape[0]:
        gene_mask = state.rng.random((recipients.shape[0], state.genomes.shape[1])) < p.crossover_share
        kernels.exchange(state.genomes, recipients, donors, gene_mask)
        state.dirty[recipients] = True
    return recipients, donors


def step(state: ModelState, params: ModelParams | None = None, landscape: Landscape | None = None) -> ModelState:
    p = params or state.params
    if state.time >= p.t_final:
        raise StateError(f"run already finished at t={state.time} (t_f={p.t_final})")
    intra_firm_exchange(state, p)
    mutate(state, p)
    select_products(state, p, landscape)
    inter_firm_exchange(state, p)
    state.time += 1
    return state


@dataclass(eq=False)
class SimulationResult:
    params: ModelParams
    series: np.ndarray  # (t_f + 1, 5), columns in INDICATORS order
    final_state: dict | None = None

    @property
    def final(self) -> dict:
        return dict(zip(INDICATORS, self.series[-1].tolist()))

    def column(self, name: str) -> np.ndarray:
        return self.series[:, INDICATORS.index(name)]

    def rows(self) -> list[tuple]:
        return [(t, *row) for t, row in enumerate(self.series.tolist())]

    def to_json(self) -> str:
        return json.dumps({"params": self.params.to_symbols(), "series": self.series.tolist()})


def run(params: ModelParams, landscape: Landscape | None = None, keep_state: bool = False) -> SimulationResult:
    """Full seeded run; indicators recorded at t=0 and after every tick."""
    if landscape is None:
        landscape = cached_landscape(params.genome_size, params.landscape_seed)
    state = init_state(params, landscape)
    series = np.empty((params.t_final + 1, len(INDICATORS)))
    series[0] = indicator_row(state.product_fitness, state.products)
    for t in range(1, params.t_final + 1):
        step(state, params, landscape)
        series[t] = indicator_row(state.product_fitness, state.products)
    return SimulationResult(params=params, series=series, final_state=state.dump() if keep_state else None)
