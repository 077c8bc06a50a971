"""One-variable sweeps around a base TRS configuration.

Optimization sweeps (``warmup_fraction``, ``n_regions``, ``center_strategy``)
run the base TRS optimizer once per (value, seed) at the ablation budget.
``length_mask_grid`` only draws proposals and reports their statistics.
"""

from __future__ import annotations

import logging
import math
import statistics
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from trsearch.core import ConfigError, rng_stream
from trsearch.harness.config import ABLATION_KINDS, ExperimentConfig, NamedOptimizer
from trsearch.harness.experiment import Cell, CellResult, atomic_write, csv_text, mean, run_cells
from trsearch.optimizers import OptimizerConfig, _resolve_scheme
from trsearch.regions import CenterStrategy
from trsearch.sampling import MaskConfig, SobolEngine, propose_candidate

logger = logging.getLogger(__name__)

RUN_COLUMNS = ("variable", "value", "seed", "best_reward", "total_evaluations", "wall_time")
SWEEP_SUMMARY_COLUMNS = ("variable", "value", "n_runs", "mean_best", "median_best", "std_best")
GRID_COLUMNS = (
    "side_length",
    "mask_probability",
    "n_samples",
    "mean_fraction_perturbed",
    "binomial_sigma",
    "expected_fraction_nonempty",
    "mean_abs_displacement",
    "std_displacement",
    "max_abs_displacement",
    "mean_l2_displacement",
)


@dataclass
class AblationResult:
    kind: str
    output_dir: Path
    rows: list[tuple]
    summary: list[tuple]
    results: list[CellResult]

    @property
    def failures(self) -> list[CellResult]:
        return [r for r in self.results if not r.ok]


def base_trs(config: ExperimentConfig) -> NamedOptimizer:
    for opt in config.optimizers:
        if opt.config.algorithm == "trs":
            return opt
    opt = config.optimizers[0].config
    return NamedOptimizer("trs", OptimizerConfig(algorithm="trs", dim=opt.dim, batch_size=opt.batch_size))


def ablation_budget(config: ExperimentConfig) -> int:
    return config.ablation.budget or max(config.nfe_grid)


def sweep_values(kind: str, config: ExperimentConfig) -> list[tuple[Any, dict[str, Any]]]:
    """(reported value, OptimizerConfig changes) pairs for one sweep."""
    s = config.ablation
    if kind == "warmup_fraction":
        return [(f, {"warm_fraction": f}) for f in s.warmup_fractions]
    if kind == "n_regions":
        B = config.batch_size
        ks = sorted({min(k, B) for k in s.n_regions})
        return [(k, {"k_regions": k}) for k in ks]
    if kind == "center_strategy":
        return [(c.value, {"center_strategy": c}) for c in CenterStrategy]
    raise ConfigError(f"{kind!r} is not an optimization sweep")


def sweep_cells(kind: str, config: ExperimentConfig) -> list[tuple[Any, Cell]]:
    base = base_trs(config)
    budget = ablation_budget(config)
    out = []
    for value, changes in sweep_values(kind, config):
        for seed in config.seeds:
            try:
                cfg = replace(base.config, n_total=budget, seed=seed, **changes)
            except ValueError as exc:
                raise ConfigError(f"{kind}={value}: {exc}") from exc
            out.append((value, Cell(f"{base.name}/{kind}={value}", cfg, config.objective, config.evaluator)))
    return out


def summarize(kind: str, rows: Sequence[tuple]) -> list[tuple]:
    groups: dict[Any, list[float]] = {}
    for _var, value, _seed, best, _n, _wall in rows:
        groups.setdefault(value, []).append(best)
    return [
        (
            kind,
            value,
            len(v),
            mean(v),
            float(statistics.median(v)),
            statistics.stdev(v) if len(v) > 1 else 0.0,
        )
        for value, v in groups.items()
    ]


def run_sweep(kind: str, config: ExperimentConfig) -> AblationResult:
    pairs = sweep_cells(kind, config)
    logger.info("%s sweep: %d runs", kind, len(pairs))
    results = run_cells([c for _, c in pairs], config.jobs)
    rows = []
    for (value, cell), res in zip(pairs, results):
        if res.ok:
            r = res.report
            rows.append((kind, value, cell.seed, r.best_reward, r.total_evaluations, r.wall_time))
        else:
            logger.warning("%s=%s seed=%d failed: %s", kind, value, cell.seed, res.error)
    return AblationResult(kind, Path(config.output_dir), rows, summarize(kind, rows), results)


def proposal_statistics(
    side_length: float,
    p: float,
    dim: int,
    n_samples: int,
    scheme: str,
    seed: int,
    table=None,
) -> tuple:
    """Draw ``n_samples`` proposals around the origin at fixed mask probability ``p``."""
    cfg = MaskConfig(p, p, constraints_enabled=False)
    label = f"ablation/length_mask_grid/l={side_length!r}/p={p!r}"
    mask_rng = rng_stream(seed, label + "/mask")
    source = SobolEngine(dim, table) if scheme == "sobol" else rng_stream(seed, label + "/perturb")
    center = np.zeros(dim)
    D = np.empty((n_samples, dim))
    M = np.empty((n_samples, dim), dtype=bool)
    for i in range(n_samples):
        D[i], pert = propose_candidate(center, side_length, scheme, cfg, source, mask_rng)
        M[i] = pert.mask
    moved = D[M]
    fraction = float(M.mean())
    sigma = math.sqrt(p * (1.0 - p) / (n_samples * dim))
    expected = p / (1.0 - (1.0 - p) ** dim)
    return (
        side_length,
        p,
        n_samples,
        fraction,
        sigma,
        expected,
        float(np.abs(moved).mean()),
        float(moved.std()),
        float(np.abs(moved).max()),
        float(np.linalg.norm(D, axis=1).mean()),
    )


def run_length_mask_grid(config: ExperimentConfig) -> AblationResult:
    base = base_trs(config).config
    scheme, table = _resolve_scheme(base)
    s = config.ablation
    rows = [
        proposal_statistics(l, p, base.dim, s.grid_samples, scheme, config.seeds[0], table)
        for l in s.side_lengths
        for p in s.mask_probabilities
    ]
    return AblationResult("length_mask_grid", Path(config.output_dir), rows, [], [])


def run_ablation(kind: str, config: ExperimentConfig) -> AblationResult:
    """Run one sweep and write ``ablation_<kind>.csv`` (plus
    ``ablation_<kind>_summary.csv`` for optimization sweeps)."""
    if kind not in ABLATION_KINDS:
        raise ConfigError(f"unknown ablation kind {kind!r}; choose from {', '.join(ABLATION_KINDS)}")
    out = Path(config.output_dir)
    if kind == "length_mask_grid":
        result = run_length_mask_grid(config)
        atomic_write(out / f"ablation_{kind}.csv", csv_text(GRID_COLUMNS, result.rows))
        return result
    result = run_sweep(kind, config)
    atomic_write(out / f"ablation_{kind}.csv", csv_text(RUN_COLUMNS, result.rows))
    atomic_write(out / f"ablation_{kind}_summary.csv", csv_text(SWEEP_SUMMARY_COLUMNS, result.summary))
    return result


def best_value(result: AblationResult) -> Optional[Any]:
    if not result.summary:
        return None
    return max(result.summary, key=lambda row: row[3])[1]
