"""Trust-region search, random search and zero-order search drivers.

All three share :class:`_RunState` for evaluation bookkeeping so that they
consume budgets identically and report in the same format. An objective is
any callable mapping an ``(n, dim)`` array to ``n`` rewards.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Callable, Optional, Sequence

import numpy as np

from trsearch.core import (
    Budget,
    ConfigError,
    EvaluationRecord,
    NonFiniteRewardError,
    ObjectiveError,
    budget_split,
    rng_stream,
    topk_select,
)
from trsearch.regions import (
    AdaptationConfig,
    CenterStrategy,
    TrustRegionState,
    adapt_length,
    record_batch_outcome,
    recenter,
    restart_region,
)
from trsearch.sampling import MaskConfig, SobolEngine, load_direction_numbers, propose_candidate

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], Sequence[float]]

ALGORITHMS = ("trs", "random", "zero_order")
SCHEMES = ("sobol", "gaussian")
# regions walk disjoint 2**16 blocks of the Sobol sequence
REGION_OFFSET = 2**16


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: str = "trs"
    dim: int = 64
    n_total: int = 400
    batch_size: int = 20
    warm_fraction: float = 0.2
    k_regions: int = 5
    scheme: str = "sobol"
    adaptation: AdaptationConfig = field(default_factory=AdaptationConfig)
    mask: MaskConfig = field(default_factory=MaskConfig)
    center_strategy: CenterStrategy = CenterStrategy.GLOBAL_TOPK
    zo_epsilon: float = 0.1
    seed: int = 0
    direction_numbers: Optional[str] = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown perturbation scheme {self.scheme!r}")
        if self.dim < 1:
            raise ConfigError("dim must be positive")
        if self.k_regions < 1:
            raise ConfigError("k_regions must be at least 1")
        if self.algorithm == "trs" and self.k_regions > self.batch_size:
            raise ConfigError(f"k_regions={self.k_regions} exceeds batch_size={self.batch_size}")
        if self.algorithm == "zero_order" and not self.zo_epsilon > 0:
            raise ConfigError("zo_epsilon must be positive")
        object.__setattr__(self, "center_strategy", CenterStrategy(self.center_strategy))
        self.budget()

    def budget(self) -> Budget:
        return Budget(self.n_total, self.batch_size, self.warm_fraction)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["center_strategy"] = self.center_strategy.value
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "OptimizerConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown optimizer fields: {sorted(unknown)}")
        try:
            if isinstance(data.get("adaptation"), dict):
                data["adaptation"] = AdaptationConfig(**data["adaptation"])
            if isinstance(data.get("mask"), dict):
                data["mask"] = MaskConfig(**data["mask"])
            if "center_strategy" in data:
                data["center_strategy"] = CenterStrategy(data["center_strategy"])
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class RunReport:
    config_echo: OptimizerConfig
    best_candidate: Optional[np.ndarray]
    best_reward: Optional[float]
    best_per_batch: list[float]
    per_region_trace: list[dict[str, Any]]
    total_evaluations: int
    wall_time: float
    valid: bool = True
    error: Optional[str] = None
    records: list[EvaluationRecord] = field(default_factory=list, repr=False)

    def to_dict(self, include_history: bool = False, include_wall_time: bool = True) -> dict[str, Any]:
        d = {
            "config": self.config_echo.to_dict(),
            "best_candidate": None if self.best_candidate is None else self.best_candidate.tolist(),
            "best_reward": self.best_reward,
            "best_per_batch": list(self.best_per_batch),
            "per_region_trace": list(self.per_region_trace),
            "total_evaluations": self.total_evaluations,
            "valid": self.valid,
            "error": self.error,
        }
        if include_wall_time:
            d["wall_time"] = self.wall_time
        if include_history:
            d["history"] = [
                {
                    "index": r.index,
                    "candidate": r.candidate.tolist(),
                    "reward": r.reward,
                    "region_id": r.region_id,
                    "iteration": r.iteration,
                }
                for r in self.records
            ]
        return d


class _RunState:
    """Evaluation history, running best and budget for one run."""

    def __init__(self, config: OptimizerConfig, objective: Objective):
        self.config = config
        self.objective = objective
        self.budget = config.budget()
        self.records: list[EvaluationRecord] = []
        self.best_per_batch: list[float] = []
        self.best: Optional[EvaluationRecord] = None
        self.trace: list[dict[str, Any]] = []
        self.iteration = 0
        self.t0 = time.perf_counter()

    def evaluate(self, candidates: np.ndarray, region_ids: Sequence[Optional[int]]) -> list[EvaluationRecord]:
        n = len(candidates)
        self.budget.consume(n)
        try:
            rewards = self.objective(candidates)
        except ObjectiveError:
            raise
        except Exception as exc:
            raise ObjectiveError(f"objective failed: {exc}") from exc
        rewards = np.asarray(rewards, dtype=np.float64).reshape(-1)
        if rewards.size != n:
            raise ObjectiveError(f"objective returned {rewards.size} rewards for {n} candidates")
        if not np.all(np.isfinite(rewards)):
            bad = int(np.flatnonzero(~np.isfinite(rewards))[0])
            raise NonFiniteRewardError(
                f"non-finite reward {rewards[bad]!r} at batch position {bad} (iteration {self.iteration})"
            )
        batch = []
        start = len(self.records)
        for i in range(n):
            x = np.array(candidates[i], dtype=np.float64)
            x.setflags(write=False)
            rec = EvaluationRecord(start + i, x, float(rewards[i]), region_ids[i], self.iteration)
            batch.append(rec)
            if self.best is None or rec.reward > self.best.reward:
                self.best = rec
        self.records.extend(batch)
        self.best_per_batch.append(self.best.reward)
        self.iteration += 1
        return batch

    def report(self, error: Optional[str] = None) -> RunReport:
        return RunReport(
            config_echo=self.config,
            best_candidate=None if self.best is None else np.array(self.best.candidate),
            best_reward=None if self.best is None else self.best.reward,
            best_per_batch=self.best_per_batch,
            per_region_trace=self.trace,
            total_evaluations=len(self.records),
            wall_time=time.perf_counter() - self.t0,
            valid=error is None,
            error=error,
            records=self.records,
        )


def _guarded(run: Callable[[_RunState], None], config: OptimizerConfig, objective: Objective) -> RunReport:
    state = _RunState(config, objective)
    try:
        run(state)
    except ObjectiveError as exc:
        logger.error("run aborted: %s", exc)
        return state.report(error=f"{type(exc).__name__}: {exc}")
    return state.report()


def _allocate(regions: Sequence[TrustRegionState], batch_size: int) -> list[int]:
    """Per-region proposal counts; the remainder goes one each to the regions
    with the best center rewards."""
    k = len(regions)
    counts = [batch_size // k] * k
    ranked = sorted(range(k), key=lambda i: (-regions[i].center_reward, regions[i].region_id))
    for i in ranked[: batch_size % k]:
        counts[i] += 1
    return counts


def _resolve_scheme(config: OptimizerConfig):
    if config.scheme != "sobol":
        return "gaussian", None
    table = load_direction_numbers(config.direction_numbers)
    if config.dim > table.max_dimension:
        warnings.warn(
            f"dimension {config.dim} exceeds the Sobol direction table ({table.max_dimension}); "
            "using Gaussian perturbations",
            RuntimeWarning,
            stacklevel=3,
        )
        return "gaussian", None
    return "sobol", table


def run_trs(config: OptimizerConfig, objective: Objective) -> RunReport:
    if config.algorithm != "trs":
        config = _with(config, algorithm="trs")
    warm_batches, opt_batches = budget_split(config.n_total, config.warm_fraction, config.batch_size)
    scheme, table = _resolve_scheme(config)
    B, M, k = config.batch_size, config.dim, config.k_regions
    adapt = config.adaptation

    def run(state: _RunState):
        warm_rng = rng_stream(config.seed, "warmup")
        for _ in range(warm_batches):
            state.evaluate(warm_rng.standard_normal((B, M)), [None] * B)

        regions = [
            TrustRegionState.initial(j, rec.candidate, rec.reward, adapt.l_init)
            for j, rec in enumerate(topk_select(state.records, k))
        ]
        mask_rngs = [rng_stream(config.seed, f"region/{j}/mask") for j in range(k)]
        if scheme == "sobol":
            sources = [SobolEngine(M, table, offset=j * REGION_OFFSET) for j in range(k)]
        else:
            sources = [rng_stream(config.seed, f"region/{j}/perturb") for j in range(k)]

        for _ in range(opt_batches):
            counts = _allocate(regions, B)
            candidates, owners = [], []
            for j, region in enumerate(regions):
                for _ in range(counts[j]):
                    x, _ = propose_candidate(
                        region.center, region.side_length, scheme, config.mask, sources[j], mask_rngs[j]
                    )
                    candidates.append(x)
                    owners.append(region.region_id)
            batch = state.evaluate(np.stack(candidates), owners)
            iteration = batch[0].iteration

            restarted = set()
            for j in range(k):
                own = [r for r in batch if r.region_id == regions[j].region_id]
                region = record_batch_outcome(
                    regions[j], [r.reward for r in own], [r.candidate for r in own]
                )
                region, restart = adapt_length(region, adapt)
                if restart:
                    occupied = [r.center for i, r in enumerate(regions) if i != j]
                    region = restart_region(region, state.records, adapt, occupied)
                    restarted.add(region.region_id)
                regions[j] = region
            regions = recenter(regions, state.records, batch, config.center_strategy, k, skip=restarted)
            for region in regions:
                state.trace.append(
                    {
                        "iteration": iteration,
                        "region_id": region.region_id,
                        "side_length": region.side_length,
                        "center_reward": region.center_reward,
                        "restarts": region.restarts,
                    }
                )

    return _guarded(run, config, objective)


def run_random_search(config: OptimizerConfig, objective: Objective) -> RunReport:
    if config.algorithm != "random":
        config = _with(config, algorithm="random")
    n_batches = config.n_total // config.batch_size
    B, M = config.batch_size, config.dim

    def run(state: _RunState):
        rng = rng_stream(config.seed, "warmup")
        for _ in range(n_batches):
            state.evaluate(rng.standard_normal((B, M)), [None] * B)

    return _guarded(run, config, objective)


def run_zero_order(config: OptimizerConfig, objective: Objective) -> RunReport:
    """Fixed-radius Gaussian hill climbing around the best point so far.

    Draws are labelled like region 0 of :func:`run_trs` so the two coincide
    exactly under the degenerate trust-region configuration.
    """
    if config.algorithm != "zero_order":
        config = _with(config, algorithm="zero_order")
    n_batches = config.n_total // config.batch_size
    B, M, eps = config.batch_size, config.dim, config.zo_epsilon

    def run(state: _RunState):
        batch = state.evaluate(rng_stream(config.seed, "warmup").standard_normal((B, M)), [None] * B)
        center = min(batch, key=lambda r: (-r.reward, r.index))
        rng = rng_stream(config.seed, "region/0/perturb")
        for _ in range(n_batches - 1):
            proposals = np.stack([center.candidate + eps * rng.standard_normal(M) for _ in range(B)])
            batch = state.evaluate(proposals, [0] * B)
            best = min(batch, key=lambda r: (-r.reward, r.index))
            if best.reward > center.reward:
                center = best
            state.trace.append(
                {
                    "iteration": best.iteration,
                    "region_id": 0,
                    "side_length": None,
                    "center_reward": center.reward,
                    "restarts": 0,
                }
            )

    return _guarded(run, config, objective)


RUNNERS = {"trs": run_trs, "random": run_random_search, "zero_order": run_zero_order}


def run_optimizer(config: OptimizerConfig, objective: Objective) -> RunReport:
    return RUNNERS[config.algorithm](config, objective)


def _with(config: OptimizerConfig, **changes) -> OptimizerConfig:
    return replace(config, **changes)


def zero_order_equivalent(config: OptimizerConfig) -> OptimizerConfig:
    """The trust-region configuration that reproduces zero-order search.

    One region, one warm-up batch, Gaussian perturbations, full masks and a
    frozen side length ``epsilon * sqrt(12)`` so the perturbation scale is
    exactly ``epsilon``.
    """
    length = config.zo_epsilon * math.sqrt(12.0)
    n_batches = config.n_total // config.batch_size
    return _with(
        config,
        algorithm="trs",
        k_regions=1,
        warm_fraction=0.5 / n_batches,
        scheme="gaussian",
        mask=MaskConfig(1.0, 1.0, constraints_enabled=False),
        adaptation=AdaptationConfig(
            length_factor=1.0, c_succ=2**31, c_fail=2**31, l_init=length, l_min=length, l_max=length
        ),
        center_strategy=CenterStrategy.GLOBAL_TOPK,
    )
