import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from firmcluster.errors import DimensionError, InvalidParameterError
from firmcluster.landscape import Landscape, cached_landscape, make_rastrigin_landscape


def test_single_gene_landscape_in_unit_interval():
    land = make_rastrigin_landscape(1, 5)
    assert land.weights.shape == (1, 1)
    assert 0.0 <= land.weights[0, 0] <= 1.0


def test_same_seed_gives_identical_weights():
    a = make_rastrigin_landscape(10, 42)
    b = make_rastrigin_landscape(10, 42)
    assert np.array_equal(a.weights, b.weights)


def test_different_seed_gives_different_weights():
    a = make_rastrigin_landscape(10, 42)
    b = make_rastrigin_landscape(10, 43)
    assert not np.array_equal(a.weights, b.weights)


def test_zero_genome_size_rejected():
    with pytest.raises(InvalidParameterError):
        make_rastrigin_landscape(0, 1)


def test_all_ones_at_origin():
    land = Landscape(2, np.ones((2, 2)))
    assert land.evaluate([0.0, 0.0]) == pytest.approx(40.0)


def test_zero_matrix_is_flat(rng):
    land = Landscape(3, np.zeros((3, 3)))
    assert land.evaluate(rng.uniform(-10, 10, 3)) == 0.0


def test_identity_single_gene_hand_value():
    land = Landscape(1, np.eye(1))
    assert land.evaluate([0.5]) == pytest.approx(-10.25)


def test_length_mismatch_raises(landscape):
    with pytest.raises(DimensionError):
        landscape.evaluate(np.zeros(9))
    with pytest.raises(DimensionError):
        landscape.evaluate_many(np.zeros((3, 11)))


def test_weights_are_read_only(landscape):
    with pytest.raises(ValueError):
        landscape.weights[0, 0] = 2.0


def test_batch_matches_single(landscape, rng):
    x = rng.uniform(-10, 10, (50, 10))
    batch = landscape.evaluate_many(x)
    single = np.array([landscape.evaluate(row) for row in x])
    assert np.array_equal(batch, single)


def test_max_fitness_at_origin(landscape):
    assert landscape.evaluate(np.zeros(10)) == pytest.approx(landscape.max_fitness(), rel=1e-12)


def test_json_round_trip(landscape):
    doc = json.loads(json.dumps(landscape.to_dict()))
    assert doc["genome_size"] == 10 and len(doc["weights"]) == 100
    back = Landscape.from_dict(doc)
    assert np.array_equal(back.weights, landscape.weights)
    assert back.landscape_seed == 42


def test_cached_landscape_is_shared():
    assert cached_landscape(10, 7) is cached_landscape(10, 7)


genomes = arrays(np.float64, 10, elements=st.floats(-10, 10, allow_nan=False))


@settings(max_examples=200, deadline=None)
@given(genomes)
def test_upper_bound(x):
    land = make_rastrigin_landscape(10, 3)
    y = land.evaluate(x)
    assert y <= land.max_fitness() + 1e-9
    if np.any(np.abs(x) > 1e-6):
        assert y < land.max_fitness()


@settings(max_examples=100, deadline=None)
@given(genomes, st.integers(0, 9))
def test_sign_flip_symmetry(x, i):
    land = make_rastrigin_landscape(10, 3)
    flipped = x.copy()
    flipped[i] = -flipped[i]
    assert land.evaluate(flipped) == pytest.approx(land.evaluate(x), rel=1e-12, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(genomes)
def test_row_sum_matches_double_sum(x):
    land = make_rastrigin_landscape(10, 3)
    assert land.evaluate(x) == pytest.approx(land.evaluate_double_sum(x), rel=1e-9, abs=1e-9)
