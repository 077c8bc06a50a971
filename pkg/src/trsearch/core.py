"""Shared domain types, RNG stream derivation, budget accounting and top-k selection."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

NoiseVector = np.ndarray


class ConfigError(ValueError):
    """Raised for invalid optimizer, objective or experiment configuration."""


class ObjectiveError(RuntimeError):
    """Raised when the black-box objective fails or returns unusable rewards."""


class NonFiniteRewardError(ObjectiveError):
    pass


def as_noise_vector(values, dim: Optional[int] = None) -> NoiseVector:
    """Validate and convert ``values`` into a read-only float64 vector."""
    x = np.array(values, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise ValueError("noise vector must be non-empty")
    if dim is not None and x.size != dim:
        raise ValueError(f"noise vector has length {x.size}, expected {dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("noise vector contains non-finite entries")
    x.setflags(write=False)
    return x


@dataclass(frozen=True)
class EvaluationRecord:
    index: int
    candidate: NoiseVector
    reward: float
    region_id: Optional[int]
    iteration: int


@dataclass
class Budget:
    """Evaluation budget of a run.

    ``consumed`` is advanced by :meth:`consume` one batch at a time and can
    never exceed ``n_total``.
    """

    n_total: int
    batch_size: int
    warm_fraction: float = 0.2
    consumed: int = 0

    def __post_init__(self):
        if self.n_total <= 0 or self.batch_size <= 0:
            raise ConfigError("n_total and batch_size must be positive")
        if self.batch_size > self.n_total:
            raise ConfigError(
                f"batch_size {self.batch_size} exceeds budget {self.n_total}"
            )
        if not 0.0 < self.warm_fraction < 1.0:
            raise ConfigError("warm_fraction must lie in (0, 1)")

    @property
    def n_batches(self) -> int:
        return self.n_total // self.batch_size

    @property
    def usable(self) -> int:
        return self.n_batches * self.batch_size

    @property
    def remaining(self) -> int:
        return self.usable - self.consumed

    def split(self) -> tuple[int, int]:
        return budget_split(self.n_total, self.warm_fraction, self.batch_size)

    def consume(self, n: int) -> None:
        if n > self.remaining:
            raise RuntimeError(f"budget overrun: {n} requested, {self.remaining} left")
        self.consumed += n


def budget_split(n_total: int, warm_fraction: float, batch_size: int) -> tuple[int, int]:
    """Split a budget into warm-up and optimization batch counts.

    The warm-up batch count is rounded to the nearest whole batch (at least
    one), trailing evaluations that do not fill a batch are dropped.

    >>> budget_split(400, 0.2, 20)
    (4, 16)
    """
    if n_total <= 0 or batch_size <= 0:
        raise ConfigError("n_total and batch_size must be positive")
    if batch_size > n_total:
        raise ConfigError(f"batch_size {batch_size} exceeds budget {n_total}")
    if not 0.0 < warm_fraction < 1.0:
        raise ConfigError("warm_fraction must lie in (0, 1)")
    # round-half-up; Python's round() would send 2.5 to 2
    warm = max(1, int(np.floor(warm_fraction * n_total / batch_size + 0.5)))
    opt = n_total // batch_size - warm
    if opt < 1:
        raise ConfigError(
            f"budget {n_total} with batch size {batch_size} leaves no optimization "
            f"batch after {warm} warm-up batch(es)"
        )
    return warm, opt


def _vector_key(x: NoiseVector) -> bytes:
    return np.ascontiguousarray(x, dtype=np.float64).tobytes()


def topk_select(records: Sequence[EvaluationRecord], k: int) -> list[EvaluationRecord]:
    """Return the ``k`` best records by reward, in descending order.

    Ties go to the smaller evaluation index. Records sharing an identical
    candidate vector count once. When fewer than ``k`` distinct vectors exist
    the selection repeats cyclically to fill ``k`` slots.
    """
    if not records:
        raise ValueError("cannot select from an empty record list")
    if k < 1:
        raise ValueError("k must be positive")
    ranked = sorted(records, key=lambda r: (-r.reward, r.index))
    chosen: list[EvaluationRecord] = []
    seen: set[bytes] = set()
    for rec in ranked:
        key = _vector_key(rec.candidate)
        if key in seen:
            continue
        seen.add(key)
        chosen.append(rec)
        if len(chosen) == k:
            return chosen
    n = len(chosen)
    return [chosen[i % n] for i in range(k)]


def _label_words(label: str) -> list[int]:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


@dataclass
class RngStream:
    """A deterministic random stream bound to ``(seed, label)``.

    The seed is split into 32-bit words and combined with a hash of the
    label through :class:`numpy.random.SeedSequence`, so that different
    labels yield independent PCG64 streams.
    """

    seed: int
    label: str

    def __post_init__(self):
        seed = int(self.seed) & 0xFFFFFFFFFFFFFFFF
        entropy = [seed & 0xFFFFFFFF, seed >> 32] + _label_words(self.label)
        self.generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def random(self, size=None):
        return self.generator.random(size)


def rng_stream(seed: int, label: str) -> RngStream:
    return RngStream(seed, label)
