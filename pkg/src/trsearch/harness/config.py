"""Experiment configuration files (TOML).

A configuration maps one-to-one onto :class:`ExperimentConfig`::

    output_dir = "results/default"
    nfe_grid = [400, 1000, 2000, 4000]
    seeds = { start = 0, count = 20 }      # or an explicit list

    [objective]                            # synthetic objective ...
    kind = "gaussian_mixture"
    dim = 64
    # evaluator = "trs mock-eval sphere"   # ... or an external command

    [defaults]                             # shared by every optimizer
    batch_size = 20

    [[optimizers]]
    algorithm = "trs"
    k_regions = 5

    [ablation]
    budget = 2000
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from trsearch.core import ConfigError
from trsearch.objectives import ObjectiveSpec
from trsearch.optimizers import OptimizerConfig

DEFAULT_BUDGETS = (400, 1000, 2000, 4000)
DEFAULT_SEEDS = tuple(range(20))
ABLATION_KINDS = ("warmup_fraction", "n_regions", "center_strategy", "length_mask_grid")


@dataclass(frozen=True)
class AblationSettings:
    budget: Optional[int] = None
    warmup_fractions: tuple[float, ...] = (0.033, 0.1, 0.2, 0.3, 0.5, 0.8)
    n_regions: tuple[int, ...] = (1, 2, 4, 8, 16, 24)
    side_lengths: tuple[float, ...] = (0.4, 0.8, 1.6, 3.2, 6.4)
    mask_probabilities: tuple[float, ...] = (0.05, 0.2, 0.4, 0.6, 0.8, 1.0)
    grid_samples: int = 2000


@dataclass(frozen=True)
class NamedOptimizer:
    name: str
    config: OptimizerConfig


@dataclass(frozen=True)
class ExperimentConfig:
    objective: Optional[ObjectiveSpec]
    optimizers: tuple[NamedOptimizer, ...]
    nfe_grid: tuple[int, ...] = DEFAULT_BUDGETS
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    output_dir: Path = Path("results")
    evaluator: Optional[str] = None
    dim: int = 64
    jobs: int = 1
    ablation: AblationSettings = field(default_factory=AblationSettings)

    def __post_init__(self):
        if not self.optimizers:
            raise ConfigError("at least one optimizer is required")
        if not self.nfe_grid or any(n <= 0 for n in self.nfe_grid):
            raise ConfigError("nfe_grid must be a non-empty list of positive budgets")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.objective is None and self.evaluator is None:
            raise ConfigError("either an objective kind or an evaluator command is required")
        names = [o.name for o in self.optimizers]
        if len(set(names)) != len(names):
            raise ConfigError(f"optimizer names must be unique, got {names}")
        batch_sizes = {o.config.batch_size for o in self.optimizers}
        dims = {o.config.dim for o in self.optimizers}
        if len(batch_sizes) > 1 or len(dims) > 1:
            raise ConfigError("all optimizers must share dim and batch_size within one experiment")
        if dims != {self.dim}:
            raise ConfigError(f"optimizer dim {dims} differs from objective dim {self.dim}")
        for n in self.nfe_grid:
            if n < next(iter(batch_sizes)):
                raise ConfigError(f"budget {n} is smaller than the batch size")

    @property
    def batch_size(self) -> int:
        return self.optimizers[0].config.batch_size

    def objective_descriptor(self) -> dict[str, Any]:
        if self.evaluator is not None:
            return {"evaluator": self.evaluator, "dim": self.dim}
        return self.objective.to_dict()

    def with_overrides(
        self,
        seed: Optional[int] = None,
        output_dir: Union[str, Path, None] = None,
        jobs: Optional[int] = None,
        evaluator: Optional[str] = None,
    ) -> "ExperimentConfig":
        changes: dict[str, Any] = {}
        if seed is not None:
            changes["seeds"] = (seed,)
        if output_dir is not None:
            changes["output_dir"] = Path(output_dir)
        if jobs is not None:
            changes["jobs"] = jobs
        if evaluator is not None:
            changes["evaluator"] = evaluator
        return replace(self, **changes)


def _seeds(value) -> tuple[int, ...]:
    if isinstance(value, dict):
        start = int(value.get("start", 0))
        return tuple(range(start, start + int(value["count"])))
    return tuple(int(s) for s in value)


def _tuple_fields(cls, data: dict[str, Any]) -> dict[str, Any]:
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}


def parse_config(data: dict[str, Any], base_dir: Path = Path(".")) -> ExperimentConfig:
    data = dict(data)
    obj = dict(data.pop("objective", {}))
    evaluator = obj.pop("evaluator", None)
    try:
        spec = None if evaluator is not None else ObjectiveSpec.from_dict(obj)
    except ValueError as exc:
        raise ConfigError(f"[objective]: {exc}") from exc
    dim = int(obj.get("dim", spec.dim if spec else 0))
    if dim < 1:
        raise ConfigError("[objective] needs a positive dim")

    defaults = dict(data.pop("defaults", {}))
    raw_opts = data.pop("optimizers", None) or [
        {"algorithm": "trs"},
        {"algorithm": "random"},
        {"algorithm": "zero_order"},
    ]
    optimizers = []
    for entry in raw_opts:
        merged = {**defaults, **entry}
        name = merged.pop("name", merged.get("algorithm", "trs"))
        merged.setdefault("dim", dim)
        if "direction_numbers" in merged and merged["direction_numbers"]:
            merged["direction_numbers"] = str((base_dir / merged["direction_numbers"]).resolve())
        # budget and seed are set per cell; placeholders only need to validate
        merged.setdefault("n_total", 10**9)
        optimizers.append(NamedOptimizer(name, OptimizerConfig.from_dict(merged)))

    ablation = AblationSettings(**_tuple_fields(AblationSettings, data.pop("ablation", {})))
    kwargs: dict[str, Any] = {}
    if "nfe_grid" in data:
        kwargs["nfe_grid"] = tuple(int(n) for n in data.pop("nfe_grid"))
    if "seeds" in data:
        kwargs["seeds"] = _seeds(data.pop("seeds"))
    if "output_dir" in data:
        kwargs["output_dir"] = Path(data.pop("output_dir"))
    if "jobs" in data:
        kwargs["jobs"] = int(data.pop("jobs"))
    if data:
        raise ConfigError(f"unknown top-level keys: {sorted(data)}")
    try:
        return ExperimentConfig(
            objective=spec,
            optimizers=tuple(optimizers),
            evaluator=evaluator,
            dim=dim,
            ablation=ablation,
            **kwargs,
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data, base_dir=path.parent)
