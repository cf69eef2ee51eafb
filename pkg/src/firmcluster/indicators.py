"""Macro indicators of the firm population at one tick.

All functions take the vector of product fitnesses (or the product matrix for
diversity) so they can be used on a live state or on stored arrays.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np

from . import _accel, kernels

INDICATORS = ("best_fitness", "avg_fitness", "rel_diff", "entropy", "diversity")


@dataclass(frozen=True)
class IndicatorVector:
    best_fitness: float
    avg_fitness: float
    rel_diff: float
    entropy: float
    diversity: float

    def as_tuple(self) -> tuple:
        return astuple(self)


def best_fitness(fitness) -> float:
    return float(np.max(fitness))


def average_fitness(fitness) -> float:
    return float(np.mean(fitness))


def fitness_relative_difference(fitness) -> float:
    """(max - min) / max(|max|, |min|); 0 when every fitness is 0."""
    fitness = np.asarray(fitness, dtype=np.float64)
    hi, lo = fitness.max(), fitness.min()
    scale = max(abs(hi), abs(lo))
    if scale == 0.0:
        return 0.0
    return float((hi - lo) / scale)


def fitness_entropy(fitness) -> float:
    """Normalised Shannon entropy of min-shifted fitness shares.

    Shares are ``(y_k - y_min) / sum_j (y_j - y_min)``; equal fitnesses and a
    single firm both give 1.
    """
    fitness = np.asarray(fitness, dtype=np.float64)
    n = fitness.shape[0]
    if n < 2:
        return 1.0
    shifted = fitness - fitness.min()
    total = shifted.sum()
    if total <= 0.0:
        return 1.0
    w = shifted[shifted > 0.0] / total
    return float(-np.sum(w * np.log(w)) / np.log(n))


def product_diversity(products) -> float:
    """Ordered-pair sum of cosine dissimilarities over ``2 N (N - 1)``.

    Zero-norm products count as cosine similarity 0.
    """
    products = np.asarray(products, dtype=np.float64)
    n = products.shape[0]
    if n < 2:
        return 0.0
    norms = np.sqrt(np.einsum("ij,ij->i", products, products))
    safe = np.where(norms > 0.0, norms, 1.0)
    unit = products / safe[:, None]
    sim = unit @ unit.T
    sim[norms == 0.0, :] = 0.0
    sim[:, norms == 0.0] = 0.0
    np.clip(sim, -1.0, 1.0, out=sim)
    dissim = 1.0 - sim
    np.fill_diagonal(dissim, 0.0)
    return float(dissim.sum() / (2.0 * n * (n - 1)))


def indicator_row(product_fitness, products) -> tuple:
    """Indicators as a plain tuple in ``INDICATORS`` order."""
    if _accel.get_backend() == "numba":
        out = kernels.indicators_loop(product_fitness, products, np.empty(5))
        return tuple(out.tolist())
    return (
        best_fitness(product_fitness),
        average_fitness(product_fitness),
        fitness_relative_difference(product_fitness),
        fitness_entropy(product_fitness),
        product_diversity(products),
    )


def compute_indicators(product_fitness, products) -> IndicatorVector:
    return IndicatorVector(
        best_fitness=best_fitness(product_fitness),
        avg_fitness=average_fitness(product_fitness),
        rel_diff=fitness_relative_difference(product_fitness),
        entropy=fitness_entropy(product_fitness),
        diversity=product_diversity(products),
    )


def state_indicators(state) -> IndicatorVector:
    return compute_indicators(state.product_fitness, state.products)
