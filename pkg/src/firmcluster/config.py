"""Experiment configuration: JSON schema, validation, defaults and presets.

A config is one flat JSON object. Model parameters appear under their symbols
(``p_C``, ``d_E``, ...) and fix the parameters that an experiment does not
vary; the remaining keys depend on the experiment kind::

    {"kind": "grid", "p_M": 0.01, "n_reps": 30,
     "axes": {"p_E": [1e-7, 1e-4], "d_E": [1, 51, 101]}}

``seed`` is both the model seed of a single run and the base seed from which
every replication seed of an experiment is derived.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .designs import FIG1_AXES, SEED_DIMENSION, Dimension, ParamSpace, default_space
from .errors import ConfigError, InvalidParameterError
from .params import SYMBOLS, ModelParams

KINDS = ("run", "convergence", "gsa", "grid", "optimize")
SCALES = ("desk", "paper")
PRESETS = {"convergence": "convergence", "table1": "gsa", "fig1": "grid", "fig2": "optimize"}

# keys every kind accepts besides the model symbols
COMMON_KEYS = ("kind", "workers")

KIND_KEYS = {
    "run": ("dump_state",),
    "convergence": ("n_points", "n_reps", "space"),
    "gsa": ("n_base", "n_boot", "level", "method", "space"),
    "grid": ("axes", "n_reps"),
    "optimize": (
        "population",
        "generations",
        "space",
        "f_threshold",
        "d_threshold",
        "min_samples",
        "resample_prob",
        "max_samples",
    ),
}

FIG1_DESK_AXES = {
    "s_C": [0.5],
    "p_C": [0.5],
    "alpha_S": [0.1],
    "p_E": [1e-7, 1e-4],
    "d_E": [float(v) for v in range(1, 102, 10)],
}


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    params: ModelParams = field(default_factory=ModelParams)
    workers: int = 1
    dump_state: bool = False
    n_points: int = 20
    n_reps: int = 200
    n_base: int = 1024
    n_boot: int = 200
    level: float = 0.95
    method: str = "sobol"
    space: ParamSpace | None = None
    axes: dict | None = None
    population: int = 32
    generations: int = 2000
    f_threshold: float = 400.0
    d_threshold: float = 0.4
    min_samples: int = 5
    resample_prob: float = 0.1
    max_samples: int = 100

    @property
    def seed(self) -> int:
        return self.params.seed

    def with_overrides(self, **changes) -> "ExperimentSpec":
        if "seed" in changes:
            changes["params"] = self.params.replace(seed=changes.pop("seed"))
        return dataclasses.replace(self, **changes)

    def estimated_runs(self) -> int:
        """Number of model runs the experiment will execute."""
        if self.kind == "run":
            return 1
        if self.kind == "convergence":
            return self.n_points * self.n_reps
        if self.kind == "gsa":
            return self.n_base * (len(self.space) + 2)
        if self.kind == "grid":
            return math.prod(len(v) for v in self.axes.values()) * self.n_reps
        return self.population + self.generations

    def to_dict(self) -> dict:
        """Resolved config; ``parse_config_dict`` of the result gives back an equal spec."""
        doc: dict[str, Any] = {"kind": self.kind, "workers": self.workers}
        doc.update(self.params.to_symbols())
        for key in KIND_KEYS[self.kind]:
            value = getattr(self, key)
            if key == "space":
                value = value.to_list()
            elif key == "axes":
                value = {name: list(values) for name, values in value.items()}
            doc[key] = value
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def _default_for(kind: str, key: str):
    if key == "space":
        return default_space(include_seed=(kind == "gsa"))
    if key == "axes":
        return {name: list(values) for name, values in FIG1_DESK_AXES.items()}
    if kind == "grid" and key == "n_reps":
        return 30
    return None


def _check_int(key: str, value, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {value!r}")
    return int(value)


def _check_float(key: str, value, lo: float | None = None, hi: float | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite, got {value!r}")
    if lo is not None and value < lo or hi is not None and value > hi:
        raise ConfigError(f"{key}: must be in [{lo}, {hi}], got {value!r}")
    return value


def _parse_space(kind: str, items) -> ParamSpace:
    if not isinstance(items, list) or not items:
        raise ConfigError("space: expected a non-empty list of {name, lower, upper[, scale]} objects")
    dims = []
    for pos, item in enumerate(items):
        where = f"space[{pos}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{where}: expected an object")
        unknown = set(item) - {"name", "lower", "upper", "scale"}
        if unknown:
            raise ConfigError(f"{where}: unknown key {sorted(unknown)[0]!r}")
        for req in ("name", "lower", "upper"):
            if req not in item:
                raise ConfigError(f"{where}: missing key {req!r}")
        name = item["name"]
        if name == SEED_DIMENSION and kind != "gsa":
            raise ConfigError(f"{where}: a seed dimension is only meaningful for gsa")
        if name not in SYMBOLS or name in ("seed", "landscape_seed", "interaction_sampling"):
            if name != SEED_DIMENSION:
                raise ConfigError(f"{where}.name: {name!r} is not a real-valued model parameter")
        lower = _check_float(f"{where}.lower", item["lower"])
        upper = _check_float(f"{where}.upper", item["upper"])
        try:
            dim = Dimension(name, lower, upper, item.get("scale", "linear"))
        except InvalidParameterError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        if name != SEED_DIMENSION:
            for bound in (lower, upper):
                try:
                    ModelParams().with_symbols({name: bound})
                except InvalidParameterError as exc:
                    raise ConfigError(f"{where}: {exc}") from None
        dims.append(dim)
    try:
        return ParamSpace(tuple(dims))
    except InvalidParameterError as exc:
        raise ConfigError(f"space: {exc}") from None


def _parse_axes(items, fixed: ModelParams) -> dict:
    if not isinstance(items, dict) or not items:
        raise ConfigError("axes: expected a non-empty object mapping parameter symbols to value lists")
    axes = {}
    for name, values in items.items():
        if name not in SYMBOLS or name in ("seed", "landscape_seed", "interaction_sampling"):
            raise ConfigError(f"axes.{name}: not a real-valued model parameter")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"axes.{name}: expected a non-empty list")
        checked = []
        for v in values:
            v = _check_float(f"axes.{name}", v)
            try:
                fixed.with_symbols({name: v})
            except InvalidParameterError as exc:
                raise ConfigError(f"axes.{name}: {exc}") from None
            checked.append(v)
        axes[name] = checked
    return axes


def parse_config_dict(doc: dict, kind: str | None = None) -> ExperimentSpec:
    """Validate a config object and apply defaults.

    ``kind`` (from the command line) must agree with a ``kind`` key when both
    are given. Every error message names the offending key.
    """
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    doc = dict(doc)
    file_kind = doc.pop("kind", None)
    if file_kind is not None and file_kind not in KINDS:
        raise ConfigError(f"kind: must be one of {KINDS}, got {file_kind!r}")
    if kind is not None and file_kind is not None and kind != file_kind:
        raise ConfigError(f"kind: config is for {file_kind!r} but {kind!r} was requested")
    kind = kind or file_kind or "run"
    if kind not in KINDS:
        raise ConfigError(f"kind: must be one of {KINDS}, got {kind!r}")

    allowed = set(KIND_KEYS[kind]) | {"workers"}
    model_values = {}
    for key in list(doc):
        if key in SYMBOLS:
            model_values[key] = doc.pop(key)
        elif key not in allowed:
            raise ConfigError(f"{key}: unknown key for a {kind!r} config")

    for key, value in model_values.items():
        if key == "interaction_sampling":
            if not isinstance(value, str):
                raise ConfigError(f"{key}: expected a string, got {value!r}")
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        elif key in ("N_f", "S_0", "G", "t_f", "seed", "landscape_seed") and int(value) != value:
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
    try:
        params = ModelParams().with_symbols(model_values)
    except InvalidParameterError as exc:
        # messages already start with the offending symbol
        raise ConfigError(str(exc)) from None

    values: dict[str, Any] = {"kind": kind, "params": params}
    if "workers" in doc:
        values["workers"] = _check_int("workers", doc.pop("workers"), 1)
    for key in KIND_KEYS[kind]:
        default = _default_for(kind, key)
        if key not in doc:
            if default is not None:
                values[key] = default
            continue
        raw = doc[key]
        if key == "space":
            values[key] = _parse_space(kind, raw)
        elif key == "axes":
            values[key] = _parse_axes(raw, params)
        elif key == "dump_state":
            if not isinstance(raw, bool):
                raise ConfigError(f"dump_state: expected true or false, got {raw!r}")
            values[key] = raw
        elif key == "method":
            if raw not in ("sobol", "random"):
                raise ConfigError(f"method: must be 'sobol' or 'random', got {raw!r}")
            values[key] = raw
        elif key in ("n_points", "n_reps"):
            values[key] = _check_int(key, raw, 2 if kind == "convergence" else 1)
        elif key == "n_base":
            values[key] = _check_int(key, raw, 64)
        elif key == "n_boot":
            values[key] = _check_int(key, raw, 100)
        elif key == "population":
            values[key] = _check_int(key, raw, 4)
        elif key in ("generations", "max_samples", "min_samples"):
            values[key] = _check_int(key, raw, 1)
        elif key == "level":
            values[key] = _check_float(key, raw, 0.5, 0.999)
        elif key == "resample_prob":
            values[key] = _check_float(key, raw, 0.0, 1.0)
        else:
            values[key] = _check_float(key, raw)
    return ExperimentSpec(**values)


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path} (line {exc.lineno}): {exc.msg}") from None


def parse_config(path, kind: str | None = None) -> ExperimentSpec:
    return parse_config_dict(load_json(path), kind)


def preset(name: str, scale: str = "desk") -> dict:
    """Config object of a named study protocol at desk or paper scale."""
    if name not in PRESETS:
        raise ConfigError(f"preset: unknown preset {name!r}, expected one of {sorted(PRESETS)}")
    if scale not in SCALES:
        raise ConfigError(f"scale: must be one of {SCALES}, got {scale!r}")
    paper = scale == "paper"
    if name == "convergence":
        return {"kind": "convergence", "n_points": 100 if paper else 20, "n_reps": 1000 if paper else 200}
    if name == "table1":
        return {"kind": "gsa", "n_base": 10000 if paper else 1024}
    if name == "fig1":
        axes = FIG1_AXES if paper else FIG1_DESK_AXES
        return {
            "kind": "grid",
            "p_M": 0.01,
            "x_M": 1.0,
            "s_P": 0.5,
            "axes": {k: list(v) for k, v in axes.items()},
            "n_reps": 100 if paper else 30,
        }
    return {"kind": "optimize", "population": 200 if paper else 32, "generations": 10000 if paper else 2000}
