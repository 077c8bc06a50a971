"""Trust-region perturbations, coordinate masks and candidate assembly."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from trsearch.core import ConfigError, NoiseVector, RngStream
from trsearch.sampling.sobol import SobolEngine

SQRT12 = math.sqrt(12.0)

# (minimum side length, maximum accepted mask probability), checked in order
LENGTH_CAPS = ((2.0, 0.2), (1.6, 0.5), (1.2, 0.7))

MAX_ATTEMPTS = 10_000


@dataclass(frozen=True)
class MaskConfig:
    p_min: float = 0.1
    p_max: float = 0.9
    constraints_enabled: bool = True

    def __post_init__(self):
        if not (0.0 <= self.p_min <= 1.0 and 0.0 <= self.p_max <= 1.0):
            raise ConfigError("mask probabilities must lie in [0, 1]")
        if self.p_min > self.p_max:
            raise ConfigError(f"p_min={self.p_min} exceeds p_max={self.p_max}")


@dataclass(frozen=True)
class Perturbation:
    delta: np.ndarray
    mask: np.ndarray
    mask_probability: float


def probability_cap(side_length: float) -> float:
    """Largest mask probability allowed at ``side_length``."""
    for min_length, cap in LENGTH_CAPS:
        if side_length >= min_length:
            return cap
    return 1.0


def affine_map(u: np.ndarray, side_length: float) -> np.ndarray:
    """Map a unit-cube point onto the centred hypercube of side ``side_length``."""
    if side_length <= 0:
        raise ValueError("side length must be positive")
    half = 0.5 * side_length
    a = -half
    b = half
    return a + (b - a) * np.asarray(u, dtype=np.float64)


def gaussian_std(side_length: float) -> float:
    return side_length / SQRT12


def gaussian_perturbation(side_length: float, dim: int, rng: RngStream) -> np.ndarray:
    """Isotropic normal perturbation whose variance matches U[-l/2, l/2]."""
    if side_length <= 0:
        raise ValueError("side length must be positive")
    return gaussian_std(side_length) * rng.standard_normal(dim)


def draw_mask(cfg: MaskConfig, side_length: float, dim: int, rng: RngStream) -> tuple[float, np.ndarray]:
    cap = probability_cap(side_length) if cfg.constraints_enabled else 1.0
    if cfg.p_min > cap:
        raise ConfigError(
            f"p_min={cfg.p_min} exceeds the mask probability cap {cap} at side length {side_length}"
        )
    for _ in range(MAX_ATTEMPTS):
        p = float(rng.uniform(cfg.p_min, cfg.p_max))
        if p <= cap:
            break
    else:
        raise ConfigError(f"no mask probability in [{cfg.p_min}, {cfg.p_max}] accepted under cap {cap}")
    if p <= 0.0:
        raise ConfigError("mask probability 0 can never perturb a coordinate")
    for _ in range(MAX_ATTEMPTS):
        mask = rng.random(dim) < p
        if mask.any():
            return p, mask
    raise ConfigError(f"mask probability {p} produced {MAX_ATTEMPTS} empty masks in dimension {dim}")


def propose_candidate(
    center: NoiseVector,
    side_length: float,
    scheme: str,
    cfg: MaskConfig,
    source: Union[SobolEngine, RngStream],
    mask_rng: RngStream,
) -> tuple[NoiseVector, Perturbation]:
    """Perturb ``center`` inside its trust region on a random coordinate subset.

    ``source`` is the region's Sobol engine for ``scheme="sobol"`` or its
    perturbation stream for ``scheme="gaussian"``. Coordinates outside the
    mask are copied from ``center`` unchanged and the result is not clamped.
    """
    center = np.asarray(center, dtype=np.float64)
    dim = center.size
    p, mask = draw_mask(cfg, side_length, dim, mask_rng)
    if scheme == "sobol":
        delta = affine_map(source.next(), side_length)
    elif scheme == "gaussian":
        delta = gaussian_perturbation(side_length, dim, source)
    else:
        raise ConfigError(f"unknown perturbation scheme {scheme!r}")
    candidate = np.where(mask, center + delta, center)
    return candidate, Perturbation(delta, mask, p)
