"""Experiment designs over the free model parameters.

Designs are plain matrices of real parameter values (one row per sample)
together with the column names; the harness turns rows into runs.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .errors import InvalidParameterError


@dataclass(frozen=True)
class Dimension:
    name: str
    lower: float
    upper: float
    scale: str = "linear"

    def __post_init__(self):
        if not self.lower < self.upper:
            raise InvalidParameterError(f"{self.name}: lower bound must be < upper bound")
        if self.scale not in ("linear", "log10"):
            raise InvalidParameterError(f"{self.name}: scale must be 'linear' or 'log10'")
        if self.scale == "log10" and self.lower <= 0:
            raise InvalidParameterError(f"{self.name}: log10 scale needs a positive lower bound")

    def from_unit(self, u):
        u = np.asarray(u, dtype=np.float64)
        if self.scale == "log10":
            lo, hi = np.log10(self.lower), np.log10(self.upper)
            return 10.0 ** (lo + u * (hi - lo))
        return self.lower + u * (self.upper - self.lower)

    def to_unit(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.scale == "log10":
            lo, hi = np.log10(self.lower), np.log10(self.upper)
            return (np.log10(x) - lo) / (hi - lo)
        return (x - self.lower) / (self.upper - self.lower)

    def to_dict(self) -> dict:
        return {"name": self.name, "lower": self.lower, "upper": self.upper, "scale": self.scale}


SEED_DIMENSION = "seed"


@dataclass(frozen=True)
class ParamSpace:
    dimensions: tuple[Dimension, ...]

    def __post_init__(self):
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise InvalidParameterError(f"duplicate dimension names in {names}")
        object.__setattr__(self, "dimensions", tuple(self.dimensions))

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dimensions]

    def __len__(self):
        return len(self.dimensions)

    def from_unit(self, unit: np.ndarray) -> np.ndarray:
        unit = np.atleast_2d(unit)
        return np.column_stack([d.from_unit(unit[:, i]) for i, d in enumerate(self.dimensions)])

    def to_unit(self, values: np.ndarray) -> np.ndarray:
        values = np.atleast_2d(values)
        return np.column_stack([d.to_unit(values[:, i]) for i, d in enumerate(self.dimensions)])

    def with_seed(self) -> "ParamSpace":
        if SEED_DIMENSION in self.names:
            return self
        return ParamSpace(self.dimensions + (Dimension(SEED_DIMENSION, 0.0, 1.0),))

    def to_list(self) -> list[dict]:
        return [d.to_dict() for d in self.dimensions]

    @classmethod
    def from_list(cls, items) -> "ParamSpace":
        return cls(tuple(Dimension(**item) for item in items))


def default_space(include_seed: bool = False) -> ParamSpace:
    """Free parameters and their exploration ranges."""
    space = ParamSpace(
        (
            Dimension("alpha_S", 0.1, 2.0),
            Dimension("p_C", 0.0, 1.0),
            Dimension("s_C", 0.0, 1.0),
            Dimension("p_M", 0.0, 1.0),
            Dimension("x_M", 0.0, 2.0),
            Dimension("s_P", 0.0, 1.0),
            Dimension("p_E", 0.0, 1e-4),
            Dimension("d_E", 1.0, 100.0),
        )
    )
    return space.with_seed() if include_seed else space


@dataclass
class Design:
    names: list[str]
    values: np.ndarray
    kind: str
    n_base: int | None = None
    unit: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return self.values.shape[0]

    def rows(self) -> list[dict]:
        return [dict(zip(self.names, row)) for row in self.values.tolist()]

    def block(self, name: str) -> np.ndarray:
        """Saltelli block by name: ``"A"``, ``"B"`` or a dimension name for A_B^(i)."""
        if self.kind != "saltelli":
            raise ValueError("blocks exist only for saltelli designs")
        n = self.n_base
        if name == "A":
            return self.values[:n]
        if name == "B":
            return self.values[n : 2 * n]
        i = self.names.index(name)
        return self.values[(2 + i) * n : (3 + i) * n]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.names)
        for row in self.values.tolist():
            writer.writerow([format_number(v) for v in row])
        return buf.getvalue()


def format_number(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if np.isnan(value):
            return ""
        return f"{float(value):.12g}"
    return str(value)


def lhs_sample(space: ParamSpace, n: int, seed: int) -> Design:
    """Latin hypercube: per dimension, one uniform point in each of ``n`` equal strata."""
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    sampler = qmc.LatinHypercube(d=len(space), scramble=True, seed=np.random.default_rng(seed))
    unit = sampler.random(n)
    return Design(space.names, space.from_unit(unit), "lhs", unit=unit)


def saltelli_design(space: ParamSpace, n_base: int, seed: int, method: str = "sobol") -> Design:
    """Rows ``[A; B; A_B^(1); ...; A_B^(k)]`` with column ``i`` of A taken from B in A_B^(i).

    ``method="sobol"`` draws A and B as the two halves of a scrambled Sobol
    sequence in 2k dimensions; ``"random"`` uses seeded uniform draws.
    """
    if n_base < 2:
        raise InvalidParameterError("n_base must be >= 2")
    k = len(space)
    rng = np.random.default_rng(seed)
    if method == "sobol":
        sampler = qmc.Sobol(d=2 * k, scramble=True, seed=rng)
        if n_base & (n_base - 1) == 0:
            base = sampler.random_base2(int(np.log2(n_base)))
        else:
            base = sampler.random(n_base)
    elif method == "random":
        base = rng.random((n_base, 2 * k))
    else:
        raise InvalidParameterError(f"unknown saltelli base method {method!r}")
    a, b = base[:, :k], base[:, k:]
    blocks = [a, b]
    for i in range(k):
        ab = a.copy()
        ab[:, i] = b[:, i]
        blocks.append(ab)
    unit = np.vstack(blocks)
    return Design(space.names, space.from_unit(unit), "saltelli", n_base=n_base, unit=unit)


def grid_design(axes) -> Design:
    """Cartesian product of explicit axis values, first axis slowest."""
    axes = list(axes.items()) if isinstance(axes, dict) else list(axes)
    for name, values in axes:
        if len(values) == 0:
            raise InvalidParameterError(f"axis {name!r} is empty")
    names = [name for name, _ in axes]
    rows = list(itertools.product(*[values for _, values in axes]))
    try:
        values = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    except (TypeError, ValueError):
        values = np.array(rows, dtype=object).reshape(len(rows), len(names))
    return Design(names, values, "grid")


FIG1_AXES = {
    "s_C": [0.25, 0.5],
    "p_C": [0.25, 0.5],
    "alpha_S": [0.1, 1.0, 2.0],
    "p_E": [1e-7, 1e-6, 1e-5, 1e-4],
    "d_E": [float(v) for v in range(1, 102, 10)],
}
