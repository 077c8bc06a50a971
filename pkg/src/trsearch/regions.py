"""Trust-region state machine: success/failure counting, length adaptation,
restarts and center selection."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Collection, Optional, Sequence

import numpy as np

from trsearch.core import ConfigError, EvaluationRecord, NoiseVector, _vector_key, topk_select


class CenterStrategy(str, enum.Enum):
    GLOBAL_TOPK = "GlobalTopk"
    GLOBAL_LAST_ITER = "GlobalLastIter"
    LOCAL_BEST = "LocalBest"
    LOCAL_LAST_ITER = "LocalLastIter"

    @property
    def is_global(self) -> bool:
        return self in (CenterStrategy.GLOBAL_TOPK, CenterStrategy.GLOBAL_LAST_ITER)


@dataclass(frozen=True)
class AdaptationConfig:
    length_factor: float = 1.5
    c_succ: int = 3
    c_fail: int = 3
    l_init: float = 0.8
    l_min: float = 0.05
    l_max: float = 2.4

    def __post_init__(self):
        # 1.0 is allowed so that a frozen trust region can be expressed
        if self.length_factor < 1.0:
            raise ConfigError("length_factor must be >= 1")
        if self.c_succ < 1 or self.c_fail < 1:
            raise ConfigError("counter thresholds must be positive")
        if not 0.0 < self.l_min <= self.l_init <= self.l_max:
            raise ConfigError(
                f"need 0 < l_min <= l_init <= l_max, got {self.l_min}, {self.l_init}, {self.l_max}"
            )


@dataclass(frozen=True)
class TrustRegionState:
    """One hypercubic trust region.

    ``local_best`` / ``local_best_reward`` track the best point this region
    has held or proposed since it was (re)started; the local center
    strategies use it.
    """

    region_id: int
    center: NoiseVector
    center_reward: float
    side_length: float
    success_count: int = 0
    failure_count: int = 0
    region_best_reward: float = float("-inf")
    restarts: int = 0
    local_best: Optional[NoiseVector] = None
    local_best_reward: float = float("-inf")

    @classmethod
    def initial(cls, region_id: int, center: NoiseVector, reward: float, side_length: float):
        return cls(
            region_id=region_id,
            center=center,
            center_reward=reward,
            side_length=side_length,
            region_best_reward=reward,
            local_best=center,
            local_best_reward=reward,
        )


def record_batch_outcome(
    region: TrustRegionState,
    batch_rewards: Sequence[float],
    candidates: Optional[Sequence[NoiseVector]] = None,
) -> TrustRegionState:
    """Count one success or one failure for the region's latest sub-batch.

    Success requires the sub-batch maximum to strictly exceed the region's
    best reward so far.
    """
    if len(batch_rewards) == 0:
        raise ValueError("empty sub-batch")
    rewards = np.asarray(batch_rewards, dtype=np.float64)
    i = int(np.argmax(rewards))
    best = float(rewards[i])
    changes = {}
    if candidates is not None and best > region.local_best_reward:
        changes.update(local_best=candidates[i], local_best_reward=best)
    if best > region.region_best_reward:
        return replace(
            region,
            success_count=region.success_count + 1,
            failure_count=0,
            region_best_reward=best,
            **changes,
        )
    return replace(region, failure_count=region.failure_count + 1, success_count=0, **changes)


def adapt_length(region: TrustRegionState, cfg: AdaptationConfig) -> tuple[TrustRegionState, bool]:
    """Expand after ``c_succ`` successes, contract after ``c_fail`` failures.

    Returns the new state and whether a restart is required, which happens
    when the failure threshold is hit while the length is already minimal.
    """
    if region.success_count >= cfg.c_succ:
        length = min(region.side_length * cfg.length_factor, cfg.l_max)
        return replace(region, side_length=length, success_count=0), False
    if region.failure_count >= cfg.c_fail:
        if region.side_length > cfg.l_min:
            length = max(region.side_length / cfg.length_factor, cfg.l_min)
            return replace(region, side_length=length, failure_count=0), False
        return region, True
    return region, False


def _move_center(region: TrustRegionState, center: NoiseVector, reward: float) -> TrustRegionState:
    if np.array_equal(center, region.center):
        return region
    return replace(
        region,
        center=center,
        center_reward=reward,
        success_count=0,
        failure_count=0,
        region_best_reward=reward,
    )


def restart_region(
    region: TrustRegionState,
    history: Sequence[EvaluationRecord],
    cfg: AdaptationConfig,
    occupied: Collection[NoiseVector] = (),
) -> TrustRegionState:
    """Reset length and counters, and move to the best point that is not
    already a center in ``occupied`` (falling back to the global best)."""
    if not history:
        raise ValueError("restart needs a non-empty history")
    taken = {_vector_key(c) for c in occupied}
    ranked = sorted(history, key=lambda r: (-r.reward, r.index))
    pick = next((r for r in ranked if _vector_key(r.candidate) not in taken), ranked[0])
    return replace(
        region,
        center=pick.candidate,
        center_reward=pick.reward,
        side_length=cfg.l_init,
        success_count=0,
        failure_count=0,
        region_best_reward=pick.reward,
        restarts=region.restarts + 1,
        local_best=pick.candidate,
        local_best_reward=pick.reward,
    )


def recenter(
    regions: Sequence[TrustRegionState],
    history: Sequence[EvaluationRecord],
    last_batch: Sequence[EvaluationRecord],
    strategy: CenterStrategy,
    k: int,
    skip: Collection[int] = (),
) -> list[TrustRegionState]:
    """Move region centers according to ``strategy``.

    Global strategies assign the selected points in descending reward order
    to regions in ascending ``region_id``. Local strategies only look at a
    region's own proposals; regions listed in ``skip`` (restarted in this
    iteration) keep their fresh center under local strategies.
    """
    strategy = CenterStrategy(strategy)
    if not history:
        raise ValueError("recenter needs a non-empty history")
    if k != len(regions):
        raise ValueError(f"k={k} does not match {len(regions)} regions")
    order = sorted(range(len(regions)), key=lambda i: regions[i].region_id)
    out = list(regions)
    if strategy.is_global:
        pool = history if strategy is CenterStrategy.GLOBAL_TOPK else last_batch
        if not pool:
            return out
        picks = topk_select(pool, k)
        for slot, rec in zip(order, picks):
            out[slot] = _move_center(out[slot], rec.candidate, rec.reward)
        return out

    for slot in order:
        region = out[slot]
        if region.region_id in skip:
            continue
        if strategy is CenterStrategy.LOCAL_BEST:
            if region.local_best is not None:
                out[slot] = _move_center(region, region.local_best, region.local_best_reward)
        else:
            own = [r for r in last_batch if r.region_id == region.region_id]
            if own:
                best = min(own, key=lambda r: (-r.reward, r.index))
                out[slot] = _move_center(region, best.candidate, best.reward)
    return out
