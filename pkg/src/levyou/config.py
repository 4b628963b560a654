"""Experiment configuration: one JSON document per run.

Top level keys: ``model``, ``noise``, ``experiment``, ``seed``, ``replicas``,
``workers``, ``output_dir``.  Unknown keys are rejected everywhere; every
missing experiment parameter is filled from the defaults below, and the
fully resolved document is what gets echoed next to the results.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .densities import JumpDensity, density_from_config
from .errors import LevyOUError
from .levy_sim import LevyNoise
from .linmodel import OUModel

REQUIRED = object()


class ConfigError(Exception):
    """Invalid configuration; ``field`` is a dotted path to the culprit."""

    def __init__(self, message: str, field: str = "") -> None:
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


EXPERIMENTS: dict[str, dict[str, Any]] = {
    "simulate": {"x": None, "t": 1.0, "export_paths": False},
    "tv-decay": {"x": None, "y": None, "t_grid": [4.0, 16.0, 64.0, 256.0], "method": "weight",
                 "z0": None, "eps": None, "clamp_density": True,
                 "slope_range": [-0.65, -0.35], "min_r2": 0.9},
    "harnack": {"cases": 100, "p": 2.0, "t_range": [0.2, 2.0], "box": 2.0, "vp": "auto"},
    "vp": {"p": 2.0, "r_grid": [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0], "grid_points": 64},
    "rank": {"m": 2, "t_max": 100.0, "tuple_samples": 10000},
    "feller": {"f": {"name": "indicator_halfspace", "normal": [1.0, 0.0], "offset": 0.0},
               "x": None, "t": 1.0, "m": 2, "tm": "estimate", "t_max": 100.0,
               "radii": [1.0, 0.3, 0.1, 0.03, 0.01], "direction": None, "min_ratio": 5.0},
    "girsanov-check": {"T": 2.0, "functionals": ["one", "count", "terminal"],
                       "terminal_f": {"name": "exp_bump", "center": [0.0], "width": 1.0},
                       "x": None, "shift_ball_radius": None},
    "mecke-check": {"intensities": [0.5, 2.0, 8.0], "allowed_failures": 1},
    "berry-esseen": {"x": 1.0, "t_grid": [16.0, 64.0, 256.0], "floor": 0.1,
                     "max_variation": 0.35},
}

TOP_LEVEL = {"model", "noise", "experiment", "seed", "replicas", "workers", "output_dir"}
NOISE_KEYS = {"jump0", "drift", "gaussian_cov", "jump1", "small_jump_truncation"}
DEFAULT_MODEL = {"A": [[0.0]], "B": [[1.0]]}
DEFAULT_NOISE = {"jump0": {"family": "gaussian", "variance": 1.0, "lambda0": 1.0},
                 "drift": None, "gaussian_cov": None, "jump1": None, "small_jump_truncation": None}


@dataclass
class ExperimentConfig:
    kind: str
    model: OUModel
    noise: LevyNoise
    params: dict
    seed: int
    replicas: int
    workers: int
    output_dir: str
    raw: dict

    def resolved(self) -> dict:
        return copy.deepcopy(self.raw)


def _unknown(obj: dict, allowed: set, where: str) -> None:
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) {extra}; allowed {sorted(allowed)}", where)


def _int(value, where: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"expected an integer >= {minimum}, got {value!r}", where)
    return value


def _density(spec, where: str) -> JumpDensity:
    if not isinstance(spec, dict):
        raise ConfigError("expected an object with a 'family' key", where)
    try:
        return density_from_config(spec)
    except (LevyOUError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc), where) from None


def _number_like(value, default, where: str):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", where)
    elif isinstance(default, (int, float)) and default is not None:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", where)
        if not math.isfinite(value):
            raise ConfigError("expected a finite number", where)
    elif isinstance(default, list) and default and all(isinstance(v, (int, float)) for v in default):
        if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"expected a list of numbers, got {value!r}", where)
    return value


def parse_config(doc: dict | str, kind: str | None = None) -> ExperimentConfig:
    """Validate a config mapping (or JSON text) and fill in defaults."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: "
                              f"{exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object")
    _unknown(doc, TOP_LEVEL, "config")
    exp = dict(doc.get("experiment") or {})
    etype = exp.pop("type", None)
    if kind is not None and etype is not None and etype != kind:
        raise ConfigError(f"config is for {etype!r} but the subcommand is {kind!r}",
                          "experiment.type")
    etype = etype or kind
    if etype not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment type {etype!r}; choose from {sorted(EXPERIMENTS)}",
                          "experiment.type")
    defaults = EXPERIMENTS[etype]
    _unknown(exp, set(defaults), "experiment")
    params = {}
    for key, default in defaults.items():
        value = exp.get(key, default)
        if value is REQUIRED:
            raise ConfigError("missing required parameter", f"experiment.{key}")
        if key in exp and value is not None and default is not None:
            _number_like(value, default, f"experiment.{key}")
        params[key] = copy.deepcopy(value)

    model_doc = doc.get("model", DEFAULT_MODEL)
    if not isinstance(model_doc, dict):
        raise ConfigError("expected an object with A and B", "model")
    _unknown(model_doc, {"A", "B"}, "model")
    try:
        model = OUModel(np.array(model_doc["A"], dtype=float), np.array(model_doc["B"], dtype=float))
    except KeyError as exc:
        raise ConfigError(f"missing {exc.args[0]}", "model") from None
    except (LevyOUError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc), "model") from None

    noise_doc = {**DEFAULT_NOISE, **(doc.get("noise") or {})}
    _unknown(noise_doc, NOISE_KEYS, "noise")
    jump0 = _density(noise_doc["jump0"], "noise.jump0")
    jump1 = None if noise_doc["jump1"] is None else _density(noise_doc["jump1"], "noise.jump1")
    try:
        noise = LevyNoise(jump0, noise_doc["drift"], noise_doc["gaussian_cov"], jump1,
                          noise_doc["small_jump_truncation"])
    except (LevyOUError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc), "noise") from None

    seed = _int(doc.get("seed", 0), "seed")
    replicas = _int(doc.get("replicas", 200_000 if etype != "berry-esseen" else 1_000_000),
                    "replicas", 1)
    workers = _int(doc.get("workers", 1), "workers", 1)
    out = doc.get("output_dir", "out")
    if not isinstance(out, str):
        raise ConfigError("expected a path string", "output_dir")

    raw = {"model": {"A": model.A.tolist(), "B": model.B.tolist()},
           "noise": {k: copy.deepcopy(noise_doc[k]) for k in sorted(NOISE_KEYS)},
           "experiment": {"type": etype, **params},
           "seed": seed, "replicas": replicas, "workers": workers, "output_dir": out}
    return ExperimentConfig(etype, model, noise, params, seed, replicas, workers, out, raw)


def load_config(path: str, kind: str | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from None
    return parse_config(text, kind)
