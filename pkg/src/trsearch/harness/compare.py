"""Tabulate report.json files side by side."""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence, TextIO, Union

from trsearch.core import ConfigError

COLUMNS = ("algorithm", "budget", "n_reports", "mean_best", "median_best", "std_best", "total_evaluations", "mean_wall_time")


@dataclass(frozen=True)
class CompareRow:
    algorithm: str
    budget: int
    bests: tuple[float, ...]
    total_evaluations: int
    wall_times: tuple[float, ...]

    @property
    def mean_best(self) -> float:
        return math.fsum(self.bests) / len(self.bests)

    @property
    def median_best(self) -> float:
        return float(statistics.median(self.bests))

    @property
    def std_best(self) -> float:
        return statistics.stdev(self.bests) if len(self.bests) > 1 else 0.0

    @property
    def mean_wall_time(self) -> float:
        return math.fsum(self.wall_times) / len(self.wall_times)


def load_report(path: Path) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"report not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def _label(doc: dict[str, Any]) -> str:
    return doc.get("name") or doc["config"]["algorithm"]


def _group(docs: Sequence[dict[str, Any]]) -> CompareRow:
    return CompareRow(
        algorithm=_label(docs[0]),
        budget=int(docs[0]["config"]["n_total"]),
        bests=tuple(float(d["best_reward"]) for d in docs),
        total_evaluations=sum(int(d["total_evaluations"]) for d in docs),
        wall_times=tuple(float(d.get("wall_time", 0.0)) for d in docs),
    )


def collect(report_paths: Sequence[Union[str, Path]]) -> list[CompareRow]:
    """One row per report file; a directory contributes one row per
    (name, budget) pooled over the valid report.json files beneath it."""
    rows: list[CompareRow] = []
    objective = None
    for raw in report_paths:
        path = Path(raw)
        files = sorted(path.rglob("report.json")) if path.is_dir() else [path]
        if not files:
            raise ConfigError(f"no report.json files under {path}")
        groups: dict[tuple[str, int], list[dict]] = {}
        for f in files:
            doc = load_report(f)
            if objective is None:
                objective = doc.get("objective")
            elif doc.get("objective") != objective:
                raise ConfigError(f"{f} was produced on a different objective than the first report")
            if not doc.get("valid", True) or doc.get("best_reward") is None:
                continue
            groups.setdefault((_label(doc), int(doc["config"]["n_total"])), []).append(doc)
        if not groups:
            raise ConfigError(f"no valid reports in {path}")
        rows.extend(_group(g) for g in groups.values())
    return rows


def format_table(rows: Sequence[CompareRow]) -> str:
    best = max(range(len(rows)), key=lambda i: rows[i].mean_best)
    cells = [list(COLUMNS) + [""]]
    for i, r in enumerate(rows):
        cells.append([
            r.algorithm,
            str(r.budget),
            str(len(r.bests)),
            f"{r.mean_best:.6g}",
            f"{r.median_best:.6g}",
            f"{r.std_best:.6g}",
            str(r.total_evaluations),
            f"{r.mean_wall_time:.3f}",
            "*" if i == best else "",
        ])
    widths = [max(len(row[j]) for row in cells) for j in range(len(cells[0]))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"


def compare(report_paths: Sequence[Union[str, Path]], out: TextIO = None) -> list[CompareRow]:
    rows = collect(report_paths)
    text = format_table(rows)
    if out is not None:
        out.write(text)
    return rows
