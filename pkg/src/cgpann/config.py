"""Experiment configuration: a flat JSON document with strict validation.

Defaults mirror the reference hyperparameter table (population 100, 30 cycles,
10 iterations, cooldown 1 epoch, mutation rates 2% functions / 1% connections,
lr 0.01, minibatch 10, 10x4 grid with levels-back 3).  Unknown keys are
rejected so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .genome import GenomeShape, template_shape
from .kernels import KERNEL_NAMES
from .trainer import TrainConfig
from .evolution import LsmfConfig

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "DEFAULTS"]


class ConfigError(ValueError):
    """A configuration file failed validation; message names the field."""


DEFAULTS: dict = {
    "dataset": None,  # required: {"name": ...} | {"path": ...} | {"synthetic": {...}}
    "population": 100,
    "cycles": 30,
    "iterations": 10,
    "cooldown": 1,
    "function_mutation_rate": 0.02,
    "connection_mutation_rate": 0.01,
    "learning_rate": 0.01,
    "batch_size": 10,
    "shuffle": True,
    "rows": 10,
    "cols": 4,
    "levels_back": 3,
    "kernels": list(KERNEL_NAMES),
    "seed": 0,
    "repeats": 100,
    "split_ratio": 0.75,
    "out_dir": "results",
    "curve_epochs": None,  # default: cycles * cooldown (one iteration's budget)
    "baseline_count": 100,
    "baseline_epochs": None,  # default: iterations * cycles * cooldown
    "perturb_epochs": 30,
    "perturb_interval": 5,
}

_SYNTHETIC_KEYS = {"kind", "n_samples", "noise_std", "seed"}


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: dict
    population: int = 100
    cycles: int = 30
    iterations: int = 10
    cooldown: int = 1
    function_mutation_rate: float = 0.02
    connection_mutation_rate: float = 0.01
    learning_rate: float = 0.01
    batch_size: int = 10
    shuffle: bool = True
    rows: int = 10
    cols: int = 4
    levels_back: int = 3
    kernels: tuple[str, ...] = KERNEL_NAMES
    seed: int = 0
    repeats: int = 100
    split_ratio: float = 0.75
    out_dir: str = "results"
    curve_epochs: int | None = None
    baseline_count: int = 100
    baseline_epochs: int | None = None
    perturb_epochs: int = 30
    perturb_interval: int = 5

    def shape(self, n_inputs: int) -> GenomeShape:
        return template_shape(
            n_inputs,
            rows=self.rows,
            cols=self.cols,
            levels_back=self.levels_back,
            kernel_set=tuple(self.kernels),
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            shuffle=self.shuffle,
        )

    def lsmf_config(self, n_inputs: int) -> LsmfConfig:
        return LsmfConfig(
            shape=self.shape(n_inputs),
            population_size=self.population,
            cycles_per_iteration=self.cycles,
            iterations=self.iterations,
            cooldown_epochs=self.cooldown,
            function_mutation_rate=self.function_mutation_rate,
            connection_mutation_rate=self.connection_mutation_rate,
            train=self.train_config(),
            seed=self.seed,
        )

    @property
    def resolved_curve_epochs(self) -> int:
        return self.curve_epochs if self.curve_epochs is not None else self.cycles * self.cooldown

    @property
    def resolved_baseline_epochs(self) -> int:
        if self.baseline_epochs is not None:
            return self.baseline_epochs
        return self.iterations * self.cycles * self.cooldown


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _check_int(doc: dict, key: str, minimum: int) -> int:
    v = doc[key]
    _require(isinstance(v, int) and not isinstance(v, bool), f"{key}: expected an integer, got {v!r}")
    _require(v >= minimum, f"{key}: must be >= {minimum}, got {v}")
    return v


def _check_real(doc: dict, key: str, lo: float, hi: float, *, open_ends: bool = False) -> float:
    v = doc[key]
    _require(isinstance(v, (int, float)) and not isinstance(v, bool), f"{key}: expected a number, got {v!r}")
    if open_ends:
        _require(lo < v < hi, f"{key}: must be in ({lo}, {hi}), got {v}")
    else:
        _require(lo <= v <= hi, f"{key}: must be in [{lo}, {hi}], got {v}")
    return float(v)


def _check_dataset(value) -> dict:
    _require(isinstance(value, dict), f"dataset: expected an object, got {value!r}")
    keys = set(value)
    _require(
        len(keys & {"name", "path", "synthetic"}) == 1 and not keys - {"name", "path", "synthetic"},
        "dataset: give exactly one of 'name', 'path', or 'synthetic'",
    )
    if "name" in value:
        _require(isinstance(value["name"], str) and value["name"], "dataset.name: expected a non-empty string")
    elif "path" in value:
        _require(isinstance(value["path"], str) and value["path"], "dataset.path: expected a non-empty string")
    else:
        syn = value["synthetic"]
        _require(isinstance(syn, dict), "dataset.synthetic: expected an object")
        _require(
            not set(syn) - _SYNTHETIC_KEYS,
            f"dataset.synthetic: unknown keys {sorted(set(syn) - _SYNTHETIC_KEYS)}",
        )
        _require(syn.get("kind") == "friedman1", "dataset.synthetic.kind: the only supported kind is 'friedman1'")
        filled = {"n_samples": 5000, "noise_std": 1.0, "seed": 0, **syn}
        _require(
            isinstance(filled["n_samples"], int) and filled["n_samples"] >= 1,
            "dataset.synthetic.n_samples: expected an integer >= 1",
        )
        _require(
            isinstance(filled["noise_std"], (int, float)) and filled["noise_std"] >= 0,
            "dataset.synthetic.noise_std: expected a number >= 0",
        )
        _require(isinstance(filled["seed"], int), "dataset.synthetic.seed: expected an integer")
        value = {"synthetic": filled}
    return value


def load_config(path) -> ExperimentConfig:
    """Read, validate, and default-fill a JSON experiment configuration."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    _require(isinstance(doc, dict), f"{path}: top level must be a JSON object")

    unknown = sorted(set(doc) - set(DEFAULTS))
    _require(not unknown, f"unknown config keys: {unknown}")
    merged = {**DEFAULTS, **doc}
    _require(merged["dataset"] is not None, "dataset: required (name, path, or synthetic source)")

    dataset = _check_dataset(merged["dataset"])
    population = _check_int(merged, "population", 2)
    cycles = _check_int(merged, "cycles", 1)
    iterations = _check_int(merged, "iterations", 1)
    cooldown = _check_int(merged, "cooldown", 1)
    f_rate = _check_real(merged, "function_mutation_rate", 0.0, 1.0)
    c_rate = _check_real(merged, "connection_mutation_rate", 0.0, 1.0)
    lr = _check_real(merged, "learning_rate", 0.0, float("inf"))
    _require(math.isfinite(lr), f"learning_rate: must be finite, got {lr}")
    batch_size = _check_int(merged, "batch_size", 1)
    _require(isinstance(merged["shuffle"], bool), f"shuffle: expected true/false, got {merged['shuffle']!r}")
    rows = _check_int(merged, "rows", 1)
    cols = _check_int(merged, "cols", 1)
    levels_back = _check_int(merged, "levels_back", 1)
    kernels = merged["kernels"]
    _require(
        isinstance(kernels, list) and kernels and all(isinstance(k, str) for k in kernels),
        f"kernels: expected a non-empty list of kernel names, got {kernels!r}",
    )
    _require(
        all(k in KERNEL_NAMES for k in kernels),
        f"kernels: unknown kernel(s) {[k for k in kernels if k not in KERNEL_NAMES]}; "
        f"available: {list(KERNEL_NAMES)}",
    )
    _require("sig" in kernels, "kernels: must include 'sig' (the fixed output-neuron kernel)")
    _require(len(set(kernels)) == len(kernels), "kernels: duplicates not allowed")
    seed = merged["seed"]
    _require(isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0, f"seed: expected an integer >= 0, got {seed!r}")
    repeats = _check_int(merged, "repeats", 1)
    split_ratio = _check_real(merged, "split_ratio", 0.0, 1.0, open_ends=True)
    out_dir = merged["out_dir"]
    _require(isinstance(out_dir, str) and out_dir, f"out_dir: expected a non-empty string, got {out_dir!r}")
    curve_epochs = merged["curve_epochs"]
    if curve_epochs is not None:
        curve_epochs = _check_int(merged, "curve_epochs", 1)
    baseline_count = _check_int(merged, "baseline_count", 20)
    baseline_epochs = merged["baseline_epochs"]
    if baseline_epochs is not None:
        baseline_epochs = _check_int(merged, "baseline_epochs", 1)
    perturb_epochs = _check_int(merged, "perturb_epochs", 1)
    perturb_interval = _check_int(merged, "perturb_interval", 1)

    return ExperimentConfig(
        dataset=dataset,
        population=population,
        cycles=cycles,
        iterations=iterations,
        cooldown=cooldown,
        function_mutation_rate=f_rate,
        connection_mutation_rate=c_rate,
        learning_rate=lr,
        batch_size=batch_size,
        shuffle=merged["shuffle"],
        rows=rows,
        cols=cols,
        levels_back=levels_back,
        kernels=tuple(kernels),
        seed=seed,
        repeats=repeats,
        split_ratio=split_ratio,
        out_dir=out_dir,
        curve_epochs=curve_epochs,
        baseline_count=baseline_count,
        baseline_epochs=baseline_epochs,
        perturb_epochs=perturb_epochs,
        perturb_interval=perturb_interval,
    )
