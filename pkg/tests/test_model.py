import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from firmcluster import kernels, model
from firmcluster._accel import HAS_NUMBA, use_backend
from firmcluster.errors import DimensionError, StateError
from firmcluster.landscape import make_rastrigin_landscape
from firmcluster.params import ModelParams


def make_state(landscape, **kw):
    return model.init_state(ModelParams(**kw), landscape)


# --- setup -----------------------------------------------------------------


@pytest.mark.parametrize(
    "args, expected",
    [((100, 0.0, 10), [100] * 10), ((100, 1.0, 4), [100, 50, 33, 25]), ((1, 2.0, 3), [1, 1, 1])],
)
def test_rank_size_sizes(args, expected):
    assert model.rank_size_sizes(*args) == expected


def test_rank_size_rounds_half_to_even():
    # 5 * 2^-1 = 2.5 -> 2
    assert model.rank_size_sizes(5, 1.0, 2) == [5, 2]


def test_default_cluster_size(landscape):
    # 100, 93, 90, 87, 85, 84, 82, 81, 80, 79
    state = make_state(landscape)
    assert state.genomes.shape == (861, 10)
    assert list(state.sizes) == model.rank_size_sizes(100, 0.1, 10)


def test_init_is_deterministic(landscape):
    a = make_state(landscape, seed=7)
    b = make_state(landscape, seed=7)
    assert np.array_equal(a.genomes, b.genomes)
    assert np.array_equal(a.locations, b.locations)
    assert np.array_equal(a.products, b.products)


def test_init_ranges_and_products(landscape):
    state = make_state(landscape, seed=3)
    assert np.all((state.locations >= 0) & (state.locations <= 100))
    assert np.all(np.abs(state.genomes) <= 10)
    for k in range(state.n_firms):
        firm = state.firm(k)
        assert any(np.array_equal(firm.product, e) for e in firm.employees)
        assert firm.product_fitness == pytest.approx(landscape.evaluate(firm.product))


def test_genome_size_mismatch(landscape):
    with pytest.raises(DimensionError):
        model.init_state(ModelParams(genome_size=5), landscape)


# --- step 1: crossover ------------------------------------------------------


def test_no_crossover_when_p_c_zero(landscape):
    state = make_state(landscape, crossover_prob=0.0)
    before = state.genomes.copy()
    model.intra_firm_exchange(state)
    assert np.array_equal(before, state.genomes)


def test_full_crossover_copies_a_colleague_snapshot(landscape):
    state = make_state(landscape, crossover_prob=1.0, crossover_share=1.0, size_hierarchy=1.0)
    before = state.genomes.copy()
    model.intra_firm_exchange(state)
    for k in range(state.n_firms):
        a, b = state.offsets[k], state.offsets[k + 1]
        for i in range(a, b):
            matches = [j for j in range(a, b) if np.array_equal(state.genomes[i], before[j])]
            assert matches and i not in matches


def test_crossover_share_replaces_half_the_genes(landscape):
    state = make_state(landscape, crossover_prob=1.0, crossover_share=0.5)
    counts = []
    rng = np.random.default_rng(0)
    for _ in range(12):
        state.genomes[:] = rng.uniform(-10, 10, state.genomes.shape)
        before = state.genomes.copy()
        model.intra_firm_exchange(state)
        counts.append((state.genomes != before).sum(axis=1))
    counts = np.concatenate(counts)
    assert counts.shape[0] >= 10**4
    se = counts.std(ddof=1) / np.sqrt(counts.shape[0])
    assert abs(counts.mean() - 5.0) < 3 * se


def test_singleton_firms_skip_crossover(landscape):
    params = ModelParams(n_firms=3, largest_firm_size=1, crossover_prob=1.0, crossover_share=1.0)
    state = model.init_state(params, landscape)
    before = state.genomes.copy()
    assert model.intra_firm_exchange(state).shape[0] == 0
    assert np.array_equal(before, state.genomes)


# --- step 1: mutation -------------------------------------------------------


@pytest.mark.parametrize("kw", [{"mutation_prob": 0.0}, {"mutation_prob": 1.0, "mutation_amplitude": 0.0}])
def test_mutation_noop(landscape, kw):
    state = make_state(landscape, **kw)
    before = state.genomes.copy()
    model.mutate(state)
    assert np.array_equal(before, state.genomes)


def test_mutation_increments_uniform(landscape):
    state = make_state(landscape, mutation_prob=1.0, mutation_amplitude=2.0)
    incs = []
    while sum(i.size for i in incs) < 10**5:
        before = state.genomes.copy()
        assert model.mutate(state) == before.size
        incs.append((state.genomes - before).ravel())
    incs = np.concatenate(incs)
    assert incs.min() >= -1.0 and incs.max() <= 1.0
    assert abs(incs.mean()) < 3 * incs.std(ddof=1) / np.sqrt(incs.size)
    assert stats.kstest(incs, stats.uniform(-1, 2).cdf).pvalue > 1e-3


def test_mutation_does_not_clamp(landscape):
    state = make_state(landscape, mutation_prob=1.0, mutation_amplitude=2.0)
    for _ in range(50):
        model.mutate(state)
    assert np.abs(state.genomes).max() > 10.0


@pytest.mark.parametrize("p", [0.001, 0.03, 0.2])
def test_bernoulli_positions_law(p):
    rng = np.random.default_rng(1)
    n, reps = 400, 4000
    hits = np.zeros(n)
    counts = np.empty(reps)
    for r in range(reps):
        pos = model.bernoulli_positions(rng, n, p)
        assert np.all(np.diff(pos) > 0)
        hits[pos] += 1
        counts[r] = pos.shape[0]
    assert abs(counts.mean() - n * p) < 4 * np.sqrt(n * p * (1 - p) / reps)
    if p >= 0.03:
        assert stats.chisquare(hits).pvalue > 1e-3


# --- step 2: product selection ------------------------------------------------


def test_selection_zero_share_keeps_genomes(landscape):
    state = make_state(landscape, product_share=0.0)
    before = state.genomes.copy()
    fitness = model.select_products(state)
    assert np.array_equal(before, state.genomes)
    for k in range(state.n_firms):
        a, b = state.offsets[k], state.offsets[k + 1]
        best = a + int(np.argmax(fitness[a:b]))
        assert np.array_equal(state.products[k], before[best])
        assert state.product_fitness[k] == fitness[best]


def test_selection_full_share_copies_product(landscape):
    state = make_state(landscape, product_share=1.0)
    model.select_products(state)
    for k in range(state.n_firms):
        a, b = state.offsets[k], state.offsets[k + 1]
        assert np.all(state.genomes[a:b] == state.products[k])


def test_selection_overwrites_exact_head_count(landscape):
    state = make_state(landscape, product_share=0.3)
    before = state.genomes.copy()
    model.select_products(state)
    for k in range(state.n_firms):
        a, b = state.offsets[k], state.offsets[k + 1]
        m = int(np.rint(0.3 * state.sizes[k]))
        carrying = np.all(state.genomes[a:b] == state.products[k], axis=1).sum()
        changed = np.any(state.genomes[a:b] != before[a:b], axis=1).sum()
        assert m <= carrying <= m + 1
        assert changed <= m


def test_argmax_picks_better_genome_and_lowest_index_on_ties():
    land = make_rastrigin_landscape(2, 0)
    params = ModelParams(n_firms=1, largest_firm_size=3, genome_size=2, product_share=0.0)
    state = model.init_state(params, land)
    state.genomes[:] = [[3.3, 1.2], [0.0, 0.0], [0.0, 0.0]]
    state.dirty[:] = True
    model.select_products(state)
    assert np.array_equal(state.products[0], [0.0, 0.0])


@pytest.mark.parametrize("fn", [kernels.select_products_loop, kernels.select_products_numpy])
def test_argmax_tie_goes_to_lowest_index(fn):
    genomes = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]])
    fitness = np.array([1.0, 5.0, 5.0])
    products, pf = np.zeros((1, 2)), np.zeros(1)
    fn(genomes, fitness, np.array([0, 3]), np.zeros(3), np.array([0]), products, pf)
    assert np.array_equal(products[0], [1.0, 0.0]) and pf[0] == 5.0


# --- step 3: inter-firm exchange ----------------------------------------------


def test_no_exchange_when_p_e_zero(landscape):
    state = make_state(landscape, interaction_prob=0.0)
    before = state.genomes.copy()
    recipients, _ = model.inter_firm_exchange(state)
    assert recipients.shape[0] == 0
    assert np.array_equal(before, state.genomes)


def test_colocated_firms_interact_with_probability_p_e(landscape):
    params = ModelParams(n_firms=2, interaction_prob=0.01)
    state = model.init_state(params, landscape, locations=[[5, 5], [5, 5]], sizes=[10, 20])
    assert state.pair_prob[0, 1] == pytest.approx(0.01)
    assert state.pair_prob[0, 0] == 0.0


def test_events_are_cross_firm_and_lexicographic(landscape):
    state = make_state(landscape, interaction_prob=1e-3, distance_decay=100.0)
    r, d = model.interaction_events(state)
    assert r.shape[0] > 0
    assert np.all(state.firm_of[r] != state.firm_of[d])
    keys = list(zip(r.tolist(), d.tolist()))
    assert keys == sorted(keys) and len(set(keys)) == len(keys)


def test_exchange_reads_snapshot_and_applies_in_order():
    genomes = np.arange(12, dtype=np.float64).reshape(4, 3)
    original = genomes.copy()
    # 0 <- 1 and 1 <- 0 swap through the snapshot; 2 receives 0 then 3, keeping 3
    kernels.exchange_numpy(genomes, np.array([0, 1, 2, 2]), np.array([1, 0, 0, 3]), np.ones((4, 3), dtype=bool))
    assert np.array_equal(genomes[0], original[1])
    assert np.array_equal(genomes[1], original[0])
    assert np.array_equal(genomes[2], original[3])


def _pair_state(landscape, mode, p):
    params = ModelParams(n_firms=2, interaction_prob=p, interaction_sampling=mode, seed=5)
    return model.init_state(params, landscape, locations=[[0, 0], [0, 0]], sizes=[3, 4])


@pytest.mark.parametrize("mode", ["binomial", "pairwise"])
def test_interaction_sampling_matches_bernoulli_law(landscape, mode):
    p, ticks = 0.08, 6000
    state = _pair_state(landscape, mode, p)
    per_tick = np.empty(ticks, dtype=np.int64)
    pair_hits = np.zeros((7, 7))
    for t in range(ticks):
        r, d = model.interaction_events(state)
        per_tick[t] = r.shape[0]
        np.add.at(pair_hits, (r, d), 1)
        assert len(set(zip(r.tolist(), d.tolist()))) == r.shape[0]
    # total over both directions: 24 independent ordered pairs
    observed = np.bincount(per_tick, minlength=25)[:25]
    expected = stats.binom(24, p).pmf(np.arange(25)) * ticks
    keep = expected >= 5
    obs = np.append(observed[keep], observed[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    obs, exp = obs[exp > 0], exp[exp > 0]
    exp *= obs.sum() / exp.sum()
    assert stats.chisquare(obs, exp).pvalue > 1e-3
    cross = pair_hits[:3, 3:].ravel().tolist() + pair_hits[3:, :3].ravel().tolist()
    assert stats.chisquare(cross).pvalue > 1e-3


def test_binomial_and_pairwise_modes_agree(landscape):
    ticks, p = 4000, 0.05
    counts = {}
    for mode in ("binomial", "pairwise"):
        state = _pair_state(landscape, mode, p)
        counts[mode] = [model.interaction_events(state)[0].shape[0] for _ in range(ticks)]
    table = np.array([np.bincount(counts[m], minlength=12)[:12] for m in counts])
    table = table[:, table.sum(axis=0) > 0]
    assert stats.chi2_contingency(table).pvalue > 1e-3


# --- step / run ---------------------------------------------------------------


def test_step_order_and_finish(landscape):
    state = make_state(landscape, t_final=2)
    model.step(state)
    model.step(state)
    assert state.time == 2
    with pytest.raises(StateError):
        model.step(state)


def test_fitness_cache_stays_consistent(landscape):
    state = make_state(landscape, interaction_prob=1e-3, mutation_prob=0.1, t_final=20)
    for _ in range(20):
        model.step(state)
        clean = ~state.dirty
        fresh = landscape.evaluate_many(state.genomes)
        assert np.array_equal(state.fitness[clean], fresh[clean])


def test_run_zero_ticks():
    res = model.run(ModelParams(t_final=0))
    assert res.series.shape == (1, 5)


def test_run_determinism():
    a = model.run(ModelParams(seed=11, interaction_prob=1e-4))
    b = model.run(ModelParams(seed=11, interaction_prob=1e-4))
    assert a.series.tobytes() == b.series.tobytes()
    assert a.to_json() == b.to_json()


def test_best_at_least_average():
    res = model.run(ModelParams(seed=2, interaction_prob=1e-4, mutation_prob=0.2))
    assert np.all(res.column("best_fitness") >= res.column("avg_fitness") - 1e-9)


def test_degenerate_dynamics_constant():
    res = model.run(ModelParams(seed=4, crossover_prob=0, mutation_prob=0, interaction_prob=0, t_final=15))
    assert np.all(res.series[1:] == res.series[1])


def test_full_share_freezes_firms(landscape):
    state = make_state(landscape, product_share=1.0, mutation_prob=0.0, interaction_prob=0.0, crossover_prob=0.7)
    model.step(state)
    products = state.products.copy()
    for _ in range(5):
        model.step(state)
        for k in range(state.n_firms):
            a, b = state.offsets[k], state.offsets[k + 1]
            assert np.all(state.genomes[a:b] == state.genomes[a])
        assert np.array_equal(state.products, products)


def test_cluster_geometry_constant(landscape):
    state = make_state(landscape, interaction_prob=1e-4)
    loc, sizes = state.locations.copy(), state.sizes.copy()
    for _ in range(10):
        model.step(state)
    assert np.array_equal(loc, state.locations) and np.array_equal(sizes, state.sizes)


def test_average_fitness_improves_in_most_runs():
    base = ModelParams(interaction_prob=1e-4, distance_decay=100.0)
    improved = 0
    for s in range(30):
        res = model.run(base.replace(seed=s))
        improved += res.column("avg_fitness")[-1] > res.column("avg_fitness")[0]
    assert improved >= 27


def test_state_dump_is_json():
    res = model.run(ModelParams(t_final=3), keep_state=True)
    doc = json.loads(json.dumps(res.final_state))
    assert doc["time"] == 3 and len(doc["firms"]) == 10
    assert set(doc["firms"][0]) == {"index", "location", "size", "product", "product_fitness"}


# --- backends -----------------------------------------------------------------


@pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("mode", ["binomial", "pairwise", "binomial_replace"])
def test_backends_give_identical_runs(mode):
    params = ModelParams(seed=21, interaction_prob=1e-4, distance_decay=80.0, interaction_sampling=mode)
    with use_backend("numba"):
        a = model.run(params)
    with use_backend("numpy"):
        b = model.run(params)
    assert np.allclose(a.series, b.series, rtol=1e-12, atol=1e-12)


@pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 30))
def test_kernel_variants_agree(seed, n_events):
    rng = np.random.default_rng(seed)
    g = 5
    genomes = rng.normal(size=(12, g))
    recipients = np.sort(rng.integers(0, 12, n_events))
    donors = rng.integers(0, 12, n_events)
    mask = rng.random((n_events, g)) < 0.5
    a, b = genomes.copy(), genomes.copy()
    kernels.exchange_loop(a, recipients, donors, mask)
    kernels.exchange_numpy(b, recipients, donors, mask)
    assert np.array_equal(a, b)

    uniq = np.unique(recipients)
    d = rng.integers(0, 12, uniq.shape[0])
    m = rng.random((uniq.shape[0], g)) < 0.5
    a, b = genomes.copy(), genomes.copy()
    kernels.crossover_loop(a, uniq, d, m)
    kernels.crossover_numpy(b, uniq, d, m)
    assert np.array_equal(a, b)

    offsets = np.array([0, 4, 9, 12])
    fitness = rng.normal(size=12)
    keys = rng.random(12)
    share = np.array([2, 0, 3])
    outs = []
    for fn in (kernels.select_products_loop, kernels.select_products_numpy):
        gg, ff = genomes.copy(), fitness.copy()
        prods, pf = np.zeros((3, g)), np.zeros(3)
        fn(gg, ff, offsets, keys, share, prods, pf)
        outs.append((gg, ff, prods, pf))
    for x, y in zip(*outs):
        assert np.array_equal(x, y)
