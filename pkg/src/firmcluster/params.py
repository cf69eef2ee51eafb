"""Model parameters and reproducible seed derivation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import InvalidParameterError
from .landscape import DEFAULT_LANDSCAPE_SEED

MASK64 = (1 << 64) - 1

INTERACTION_SAMPLING = ("binomial", "pairwise", "binomial_replace")

# config key (model symbol) -> dataclass field
SYMBOLS = {
    "N_f": "n_firms",
    "S_0": "largest_firm_size",
    "alpha_S": "size_hierarchy",
    "G": "genome_size",
    "t_f": "t_final",
    "p_C": "crossover_prob",
    "s_C": "crossover_share",
    "p_M": "mutation_prob",
    "x_M": "mutation_amplitude",
    "s_P": "product_share",
    "p_E": "interaction_prob",
    "d_E": "distance_decay",
    "seed": "seed",
    "landscape_seed": "landscape_seed",
    "interaction_sampling": "interaction_sampling",
}
FIELD_TO_SYMBOL = {v: k for k, v in SYMBOLS.items()}

_PROBABILITIES = ("crossover_prob", "crossover_share", "mutation_prob", "product_share", "interaction_prob")
_POSITIVE_INTS = ("n_firms", "largest_firm_size", "genome_size")


@dataclass(frozen=True)
class ModelParams:
    n_firms: int = 10
    largest_firm_size: int = 100
    size_hierarchy: float = 0.1
    genome_size: int = 10
    t_final: int = 100
    crossover_prob: float = 0.5
    crossover_share: float = 0.5
    mutation_prob: float = 0.01
    mutation_amplitude: float = 1.0
    product_share: float = 0.5
    interaction_prob: float = 1e-5
    distance_decay: float = 50.0
    seed: int = 0
    landscape_seed: int = DEFAULT_LANDSCAPE_SEED
    # "binomial": per firm pair, binomial count then distinct uniform pairs
    # (same law as per-pair Bernoulli); "pairwise": literal per-pair draws;
    # "binomial_replace": binomial count, pairs drawn with replacement.
    interaction_sampling: str = "binomial"

    def __post_init__(self):
        for name in _POSITIVE_INTS:
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidParameterError(f"{FIELD_TO_SYMBOL[name]} must be an integer >= 1, got {value!r}")
        if int(self.t_final) != self.t_final or self.t_final < 0:
            raise InvalidParameterError(f"t_f must be an integer >= 0, got {self.t_final!r}")
        for name in _PROBABILITIES:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameterError(f"{FIELD_TO_SYMBOL[name]} must be in [0, 1], got {value!r}")
        if not self.size_hierarchy >= 0.0:
            raise InvalidParameterError(f"alpha_S must be >= 0, got {self.size_hierarchy!r}")
        if not self.mutation_amplitude >= 0.0:
            raise InvalidParameterError(f"x_M must be >= 0, got {self.mutation_amplitude!r}")
        if not self.distance_decay > 0.0:
            raise InvalidParameterError(f"d_E must be > 0, got {self.distance_decay!r}")
        for name in ("seed", "landscape_seed"):
            value = getattr(self, name)
            if int(value) != value or not 0 <= value <= MASK64:
                raise InvalidParameterError(f"{name} must be an unsigned 64-bit integer, got {value!r}")
        if self.interaction_sampling not in INTERACTION_SAMPLING:
            raise InvalidParameterError(
                f"interaction_sampling must be one of {INTERACTION_SAMPLING}, got {self.interaction_sampling!r}"
            )
        for name in _POSITIVE_INTS + ("t_final", "seed", "landscape_seed"):
            object.__setattr__(self, name, int(getattr(self, name)))
        for name in _PROBABILITIES + ("size_hierarchy", "mutation_amplitude", "distance_decay"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def with_symbols(self, values: dict) -> "ModelParams":
        """Copy with overrides given by model symbol (``p_C``) or field name."""
        changes = {}
        for key, value in values.items():
            name = SYMBOLS.get(key, key)
            if name not in FIELD_NAMES:
                raise InvalidParameterError(f"unknown model parameter {key!r}")
            changes[name] = value
        return dataclasses.replace(self, **changes)

    def to_symbols(self) -> dict:
        return {FIELD_TO_SYMBOL[f.name]: getattr(self, f.name) for f in dataclasses.fields(self)}


FIELD_NAMES = frozenset(f.name for f in dataclasses.fields(ModelParams))


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed: int, index: int) -> int:
    """Seed of stream ``index`` under ``base_seed``: splitmix64(base ^ splitmix64(index))."""
    return splitmix64((int(base_seed) & MASK64) ^ splitmix64(int(index) & MASK64))


def unit_to_seed(u: float) -> int:
    """Map a unit-interval design coordinate to a 64-bit run seed."""
    return splitmix64(int(float(u) * 2.0**53) & MASK64)
