"""Run (optimizer x budget x seed) cells and write result artifacts."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import statistics
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from trsearch.core import ObjectiveError
from trsearch.evalproto import spawn_evaluator
from trsearch.harness.config import ExperimentConfig, NamedOptimizer
from trsearch.objectives import ObjectiveSpec, make_objective
from trsearch.optimizers import OptimizerConfig, RunReport, run_optimizer

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("algorithm", "budget", "seed", "best_reward", "wall_time")
SCALING_COLUMNS = ("algorithm", "budget", "n_runs", "mean_best", "median_best")
ERROR_COLUMNS = ("algorithm", "budget", "seed", "error")


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def csv_text(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def fmt(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return "" if value is None else str(value)


def mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


@dataclass(frozen=True)
class Cell:
    name: str
    config: OptimizerConfig
    objective: Optional[ObjectiveSpec]
    evaluator: Optional[str]

    @property
    def budget(self) -> int:
        return self.config.n_total

    @property
    def seed(self) -> int:
        return self.config.seed


@dataclass
class CellResult:
    cell: Cell
    report: Optional[RunReport] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.report is not None and self.report.valid


@dataclass
class ExperimentResult:
    output_dir: Path
    results: list[CellResult] = field(default_factory=list)

    @property
    def failures(self) -> list[CellResult]:
        return [r for r in self.results if not r.ok]


def make_cells(config: ExperimentConfig, optimizers: Optional[Sequence[NamedOptimizer]] = None) -> list[Cell]:
    cells = []
    for opt in optimizers or config.optimizers:
        for budget in config.nfe_grid:
            for seed in config.seeds:
                cells.append(Cell(opt.name, replace(opt.config, n_total=budget, seed=seed), config.objective, config.evaluator))
    return cells


def run_cell(cell: Cell) -> CellResult:
    """Execute one run; failures are captured, never raised."""
    try:
        if cell.evaluator is not None:
            with spawn_evaluator(cell.evaluator, dim=cell.config.dim) as handle:
                report = run_optimizer(cell.config, handle)
        else:
            report = run_optimizer(cell.config, make_objective(cell.objective))
    except (ObjectiveError, ValueError) as exc:
        return CellResult(cell, error=f"{type(exc).__name__}: {exc}")
    if not report.valid:
        return CellResult(cell, report=report, error=report.error)
    return CellResult(cell, report=report)


def run_cells(cells: Sequence[Cell], jobs: int = 1) -> list[CellResult]:
    if jobs <= 1 or len(cells) <= 1:
        return [run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_cell, cells, chunksize=max(1, len(cells) // (4 * jobs))))


def report_path(output_dir: Path, cell: Cell) -> Path:
    return output_dir / "runs" / cell.name / f"budget_{cell.budget}" / f"seed_{cell.seed}" / "report.json"


def report_document(result: CellResult, objective: dict[str, Any]) -> dict[str, Any]:
    doc = {"name": result.cell.name, "objective": objective}
    doc.update(result.report.to_dict())
    return doc


def write_report(path: Path, result: CellResult, objective: dict[str, Any]) -> None:
    atomic_write(path, json.dumps(report_document(result, objective), indent=1) + "\n")


def scaling_rows(summary: Sequence[tuple[str, int, int, float, float]]) -> list[tuple]:
    groups: dict[tuple[str, int], list[float]] = {}
    for name, budget, _seed, best, _wall in summary:
        groups.setdefault((name, budget), []).append(best)
    return [
        (name, budget, len(vals), mean(vals), float(statistics.median(vals)))
        for (name, budget), vals in groups.items()
    ]


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every cell of ``config`` and write report.json files, summary.csv,
    scaling.csv and errors.csv under ``config.output_dir``."""
    out = Path(config.output_dir)
    cells = make_cells(config)
    logger.info("running %d cells with %d job(s)", len(cells), config.jobs)
    results = run_cells(cells, config.jobs)
    objective = config.objective_descriptor()

    summary, errors = [], []
    for res in results:
        c = res.cell
        if res.report is not None:
            write_report(report_path(out, c), res, objective)
        if res.ok:
            summary.append((c.name, c.budget, c.seed, res.report.best_reward, res.report.wall_time))
        else:
            errors.append((c.name, c.budget, c.seed, res.error))
            logger.warning("cell %s budget=%d seed=%d failed: %s", c.name, c.budget, c.seed, res.error)

    atomic_write(out / "summary.csv", csv_text(SUMMARY_COLUMNS, summary))
    atomic_write(out / "scaling.csv", csv_text(SCALING_COLUMNS, scaling_rows(summary)))
    atomic_write(out / "errors.csv", csv_text(ERROR_COLUMNS, errors))
    return ExperimentResult(out, results)
