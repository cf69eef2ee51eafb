"""Agent-based model of innovation in geographical firm clusters.

Employees carry real-valued idea genomes that evolve by crossover and
mutation inside firms; firms exploit their best genome as a product; and
employees of different firms exchange ideas with a probability that decays
exponentially with distance. The package also ships the experiment suite used
to study the model: convergence diagnostics, Sobol sensitivity analysis,
grid exploration and noisy bi-objective optimisation.
"""

from .errors import ConfigError, DimensionError, InvalidParameterError, StateError
from .indicators import INDICATORS, compute_indicators
from .landscape import Landscape, make_rastrigin_landscape
from .model import ModelState, SimulationResult, init_state, run, step
from .params import ModelParams, derive_seed

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DimensionError",
    "INDICATORS",
    "InvalidParameterError",
    "Landscape",
    "ModelParams",
    "ModelState",
    "SimulationResult",
    "StateError",
    "__version__",
    "compute_indicators",
    "derive_seed",
    "init_state",
    "make_rastrigin_landscape",
    "run",
    "step",
]
