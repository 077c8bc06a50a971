"""Seeded synthetic black-box objectives and brute-force oracles.

Every objective is fully determined by its :class:`ObjectiveSpec`. The
hidden parameters (targets, mixture centers, weights) live on private
attributes; only :func:`brute_force_optimum` and :func:`hidden_parameters`
read them, for use as test oracles.
"""

from __future__ import annotations

import threading
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np

from trsearch.core import ConfigError, rng_stream

KINDS = ("sphere", "gaussian_mixture", "rotated_rastrigin", "toy_flow", "discrete_grid")


@dataclass(frozen=True)
class ObjectiveSpec:
    """Parameters of a synthetic objective.

    Attributes:
        kind: one of ``KINDS``.
        dim: search dimension.
        seed: seed of the hidden parameters.
        n_components: mixture component count.
        width: mixture width of the dominant mode, relative to ``sqrt(dim)``.
        center_scale: mixture centers are ``center_scale * z`` with ``z``
            standard normal, then shrunk into the ball of radius
            ``2 * sqrt(dim)``.
        grid_resolution: nodes per axis of ``discrete_grid``.
        extent: half-width of the box covered by ``discrete_grid`` and by
            the brute-force scan of continuous kinds.
        target_scale: scale of the hidden target of ``sphere``.
    """

    kind: str = "gaussian_mixture"
    dim: int = 64
    seed: int = 0
    n_components: int = 5
    width: float = 0.5
    center_scale: float = 0.5
    grid_resolution: int = 16
    extent: float = 4.0
    target_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown objective kind {self.kind!r}")
        if self.dim < 1:
            raise ConfigError("objective dim must be positive")
        if self.kind == "discrete_grid":
            if self.dim > 3:
                raise ConfigError("discrete_grid supports at most 3 dimensions")
            if self.grid_resolution < 1:
                raise ConfigError("grid_resolution must be positive")
        if self.n_components < 1 or self.width <= 0 or self.extent <= 0:
            raise ConfigError("n_components, width and extent must be positive")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ObjectiveSpec":
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


class BatchObjective:
    """Pure batch reward function with a thread-safe evaluation counter."""

    def __init__(self, spec: ObjectiveSpec):
        self.spec = spec
        self._lock = threading.Lock()
        self._count = 0
        rng = rng_stream(spec.seed, f"objective/{spec.kind}")
        self._setup(rng)

    @property
    def eval_count(self) -> int:
        return self._count

    def __call__(self, batch) -> list[float]:
        return self.evaluate(batch)

    def evaluate(self, batch) -> list[float]:
        X = np.asarray(batch, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.spec.dim:
            raise ValueError(f"expected candidates of dimension {self.spec.dim}, got shape {X.shape}")
        with self._lock:
            self._count += X.shape[0]
        return [float(v) for v in self._rewards(X)]

    # Each kind implements _setup/_rewards; rows are evaluated independently.
    def _setup(self, rng) -> None:
        raise NotImplementedError

    def _rewards(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Sphere(BatchObjective):
    """Negative squared distance to a hidden target."""

    def _setup(self, rng):
        self._target = self.spec.target_scale * rng.standard_normal(self.spec.dim)

    def _rewards(self, X):
        return -np.sum((X - self._target) ** 2, axis=1)


class GaussianMixture(BatchObjective):
    """Sum of isotropic Gaussian bumps; component 0 is the dominant one
    (weight 1, widest), the others have weights in [0.3, 0.7]."""

    def _setup(self, rng):
        s = self.spec
        root = np.sqrt(s.dim)
        mu = s.center_scale * rng.standard_normal((s.n_components, s.dim))
        norms = np.linalg.norm(mu, axis=1, keepdims=True)
        mu = np.where(norms > 2 * root, mu * (2 * root / np.maximum(norms, 1e-300)), mu)
        weights = np.concatenate([[1.0], rng.uniform(0.3, 0.7, s.n_components - 1)])
        widths = s.width * root * np.concatenate([[1.0], rng.uniform(0.4, 0.8, s.n_components - 1)])
        self._centers = mu
        self._weights = weights
        self._widths = widths

    def _rewards(self, X):
        d2 = np.sum((X[:, None, :] - self._centers[None, :, :]) ** 2, axis=2)
        return np.exp(-d2 / (2.0 * self._widths**2)) @ self._weights


class RotatedRastrigin(BatchObjective):
    """Negated Rastrigin function of a hidden orthogonal rotation of x."""

    def _setup(self, rng):
        A = rng.standard_normal((self.spec.dim, self.spec.dim))
        Q, R = np.linalg.qr(A)
        self._rotation = Q * np.sign(np.diag(R))

    def _rewards(self, X):
        Y = X @ self._rotation.T
        return -(10.0 * self.spec.dim + np.sum(Y**2 - 10.0 * np.cos(2 * np.pi * Y), axis=1))


class ToyFlow(BatchObjective):
    """Two-layer tanh map standing in for a generative model; the reward is the
    negative L1 distance of the generated sample to a reachable target."""

    def _setup(self, rng):
        M = self.spec.dim
        self._W1 = rng.standard_normal((2 * M, M)) / np.sqrt(M)
        self._W2 = rng.standard_normal((M, 2 * M)) * (2.0 / np.sqrt(2 * M))
        self._source = rng.standard_normal(M)
        self._target = self._generate(self._source[None, :])[0]

    def _generate(self, X):
        return np.tanh(np.tanh(X @ self._W1.T) @ self._W2.T)

    def _rewards(self, X):
        return -np.sum(np.abs(self._generate(X) - self._target), axis=1)


class DiscreteGrid(BatchObjective):
    """Seeded reward table on a uniform grid; candidates snap to the nearest node."""

    def _setup(self, rng):
        n = self.spec.grid_resolution
        self._table = rng.random((n,) * self.spec.dim)

    def nodes(self) -> np.ndarray:
        n, e = self.spec.grid_resolution, self.spec.extent
        return np.array([0.0]) if n == 1 else np.linspace(-e, e, n)

    def snap(self, X) -> np.ndarray:
        """Integer node indices of the nodes nearest to each row of ``X``."""
        n, e = self.spec.grid_resolution, self.spec.extent
        if n == 1:
            return np.zeros(np.shape(X), dtype=int)
        step = 2 * e / (n - 1)
        return np.clip(np.floor((np.asarray(X) + e) / step + 0.5), 0, n - 1).astype(int)

    def _rewards(self, X):
        idx = self.snap(X)
        return self._table[tuple(idx.T)]


_CLASSES = {
    "sphere": Sphere,
    "gaussian_mixture": GaussianMixture,
    "rotated_rastrigin": RotatedRastrigin,
    "toy_flow": ToyFlow,
    "discrete_grid": DiscreteGrid,
}


def make_objective(spec: ObjectiveSpec) -> BatchObjective:
    return _CLASSES[spec.kind](spec)


def hidden_parameters(spec: ObjectiveSpec) -> dict[str, np.ndarray]:
    """Oracle-only access to the hidden parameters of ``spec``."""
    obj = make_objective(spec)
    return {name.lstrip("_"): value for name, value in vars(obj).items()
            if name.startswith("_") and isinstance(value, np.ndarray)}


def brute_force_optimum(spec: ObjectiveSpec, resolution: int = 401):
    """Exhaustive grid argmax.

    ``discrete_grid`` scans its own nodes (``resolution`` is ignored);
    continuous kinds with ``dim <= 3`` scan ``resolution`` points per axis
    over ``[-extent, extent]``. Ties go to the lexicographically smallest
    node. Returns ``(location, reward)``.
    """
    obj = make_objective(spec)
    if spec.kind == "discrete_grid":
        axis = obj.nodes()
    else:
        if spec.dim > 3:
            raise ConfigError(f"dimension {spec.dim} too large for an exhaustive scan")
        if resolution < 2:
            raise ValueError("resolution must be at least 2")
        axis = np.linspace(-spec.extent, spec.extent, resolution)
    rest = spec.dim - 1
    # C-order flattening of an "ij" mesh is lexicographic order
    tail = np.stack([g.ravel() for g in np.meshgrid(*([axis] * rest), indexing="ij")], axis=1) if rest else np.empty((1, 0))
    best_x: Optional[np.ndarray] = None
    best_r = -np.inf
    for lead in axis:
        block = np.hstack([np.full((tail.shape[0], 1), lead), tail])
        r = np.asarray(obj._rewards(block))
        i = int(np.argmax(r))
        if r[i] > best_r:
            best_r, best_x = float(r[i]), block[i]
    return best_x, best_r
