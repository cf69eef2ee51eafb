"""Genotype to fitness mapping.

The model only needs ``genome_size`` and a batched ``evaluate_many``; any
object providing those can stand in for :class:`Landscape`.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .errors import DimensionError, InvalidParameterError

DEFAULT_LANDSCAPE_SEED = 20210531


class FitnessLandscape(Protocol):
    genome_size: int

    def evaluate(self, genome) -> float: ...

    def evaluate_many(self, genomes: np.ndarray) -> np.ndarray: ...


def _rastrigin_rows(genomes, row_weights):
    # row-wise reduction keeps each genome's value independent of the batch
    bracket = genomes * genomes - 10.0 * np.cos(2.0 * np.pi * genomes)
    return -(bracket * row_weights).sum(axis=1)


@dataclass(frozen=True, eq=False)
class Landscape:
    """Weighted Rastrigin landscape ``y(x) = -sum_ij m_ij [x_i^2 - 10 cos(2 pi x_i)]``.

    The bracket only depends on the row index, so evaluation uses the row sums
    of ``weights``; :meth:`evaluate_double_sum` keeps the literal form.
    """

    genome_size: int
    weights: np.ndarray
    landscape_seed: int | None = None
    row_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.shape != (self.genome_size, self.genome_size):
            raise DimensionError(
                f"weights must have shape ({self.genome_size}, {self.genome_size}), got {w.shape}"
            )
        w.setflags(write=False)
        rows = w.sum(axis=1)
        rows.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "row_weights", rows)

    def _check(self, genomes: np.ndarray) -> np.ndarray:
        genomes = np.asarray(genomes, dtype=np.float64)
        if genomes.shape[-1] != self.genome_size:
            raise DimensionError(
                f"genome length {genomes.shape[-1]} does not match genome_size {self.genome_size}"
            )
        return genomes

    def evaluate(self, genome) -> float:
        genome = self._check(genome)
        if genome.ndim != 1:
            raise DimensionError("evaluate expects a single genome; use evaluate_many")
        return float(self.evaluate_many(genome[None, :])[0])

    def evaluate_many(self, genomes: np.ndarray) -> np.ndarray:
        genomes = np.ascontiguousarray(self._check(genomes))
        if genomes.ndim != 2:
            raise DimensionError("evaluate_many expects a 2-d array of genomes")
        return _rastrigin_rows(genomes, self.row_weights)

    def evaluate_double_sum(self, genome) -> float:
        """Literal double sum over (i, j); reference for the row-sum path."""
        x = self._check(genome)
        total = 0.0
        for i in range(self.genome_size):
            bracket = x[i] ** 2 - 10.0 * np.cos(2.0 * np.pi * x[i])
            for j in range(self.genome_size):
                total += self.weights[i, j] * bracket
        return -total

    def max_fitness(self) -> float:
        """Global maximum, reached only at the zero genome."""
        return 10.0 * float(self.weights.sum())

    def to_dict(self) -> dict:
        return {
            "genome_size": self.genome_size,
            "landscape_seed": self.landscape_seed,
            "weights": self.weights.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Landscape":
        g = int(doc["genome_size"])
        weights = np.asarray(doc["weights"], dtype=np.float64).reshape(g, g)
        return cls(genome_size=g, weights=weights, landscape_seed=doc.get("landscape_seed"))


def make_rastrigin_landscape(genome_size: int, landscape_seed: int = DEFAULT_LANDSCAPE_SEED) -> Landscape:
    if int(genome_size) < 1:
        raise InvalidParameterError(f"genome_size must be >= 1, got {genome_size}")
    rng = np.random.default_rng(int(landscape_seed))
    weights = rng.random((genome_size, genome_size))
    return Landscape(genome_size=int(genome_size), weights=weights, landscape_seed=int(landscape_seed))


@functools.lru_cache(maxsize=32)
def cached_landscape(genome_size: int, landscape_seed: int) -> Landscape:
    """Shared immutable landscape for repeated runs in one process."""
    return make_rastrigin_landscape(genome_size, landscape_seed)
