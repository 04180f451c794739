"""
OV-FER protocol driver
======================

Runs one task end to end and aggregates the results:

    task 1   7 classes   O(5:2) O(4:3) O(3:4) O(2:5)   × `repeats` random divisions
    task 2  11 classes   O(8:3) O(6:5) O(5:6) O(3:8)   × `repeats` random divisions
    task 3  12 classes   O(7:5)  the 7 basic emotions known   × `fixed_repeats` seeds
    task 4  16 classes   O(7:9)  the 7 basic emotions known   × `fixed_repeats` seeds
    custom  K known / U unknown from the config         × `repeats` random divisions

Each run gets its own directory ``<run>/O<K>-<U>_r<r>/`` holding the split
record, loss log, checkpoints, scores, report and plot.  The task directory
gets ``protocol_report.json`` and a text table laid out as
``O(K:U) … Mean`` for AUROC and OSCR.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from openfer.errors import ProtocolError
from openfer.evaluation import SCORES_FILE, EvalReport, aggregate, evaluate_run, plot_score_distributions
from openfer.ingest import (
    BASIC_EMOTIONS, Dataset, OpennessSplit, apply_split, generate_splits, load_source, openness,
    save_split,
)
from openfer.learning import train
from openfer.utils.paths import run_dir, with_values

_log = logging.getLogger(__name__)

REPORT_FILE = "protocol_report.json"
TABLE_FILE = "protocol_table.txt"


@dataclass(frozen=True)
class TaskSpec:
    classes: int
    cells: tuple[tuple[int, int], ...]
    fixed: bool = False


TASKS: dict[str, TaskSpec] = {
    "1": TaskSpec(7, ((5, 2), (4, 3), (3, 4), (2, 5))),
    "2": TaskSpec(11, ((8, 3), (6, 5), (5, 6), (3, 8))),
    "3": TaskSpec(12, ((7, 5),), fixed=True),
    "4": TaskSpec(16, ((7, 9),), fixed=True),
}


@dataclass
class CellResult:
    K: int
    U: int
    openness: float
    reports: list[EvalReport] = field(default_factory=list)

    @property
    def label(self) -> str:
        return f"O({self.K}:{self.U})"

    def means(self) -> tuple[float, float]:
        return aggregate(self.reports)


@dataclass
class ProtocolReport:
    task: str
    cells: list[CellResult]

    @property
    def reports(self) -> list[EvalReport]:
        return [r for c in self.cells for r in c.reports]

    def mean(self) -> tuple[float, float]:
        """Mean over openness cells of the per-cell means."""
        means = [c.means() for c in self.cells]
        return (sum(m[0] for m in means) / len(means), sum(m[1] for m in means) / len(means))

    def table(self) -> str:
        head = f"{'':8s}" + "".join(f"{c.label:>10s}" for c in self.cells) + f"{'Mean':>10s}"
        lines = [head]
        for i, name in enumerate(("AUROC", "OSCR")):
            vals = [c.means()[i] for c in self.cells] + [self.mean()[i]]
            lines.append(f"{name:8s}" + "".join(f"{100 * v:10.2f}" for v in vals))
        return "\n".join(lines)

    def to_dict(self) -> dict:
        mean_auroc, mean_oscr = self.mean()
        return {
            "task": self.task,
            "score_name": "max_p_h",
            "cells": [{"K": c.K, "U": c.U, "openness": c.openness,
                       "auroc": c.means()[0], "oscr": c.means()[1],
                       "runs": [r.to_dict() for r in c.reports]} for c in self.cells],
            "mean": {"auroc": mean_auroc, "oscr": mean_oscr},
        }


def task_spec(config, class_count: int) -> TaskSpec:
    task = str(config.protocol.task)
    if task == "custom":
        K, U = config.protocol.known, config.protocol.unknown
        if K + U > class_count:
            raise ProtocolError(f"custom K={K}, U={U} needs {K + U} classes, dataset has {class_count}")
        return TaskSpec(class_count, ((K, U),))
    spec = TASKS[task]
    if class_count != spec.classes:
        raise ProtocolError(f"task {task} needs {spec.classes} classes, dataset has {class_count}")
    return spec


def fixed_partition(class_names, K: int) -> tuple[list[int], list[int]]:
    """Basic emotions known when all present, otherwise the first K classes."""
    names = list(class_names)
    if K == len(BASIC_EMOTIONS) and all(n in names for n in BASIC_EMOTIONS):
        known = [names.index(n) for n in BASIC_EMOTIONS]
    else:
        known = list(range(K))
    return known, [c for c in range(len(names)) if c not in known]


def cell_splits(config, spec: TaskSpec, dataset: Dataset, K: int, U: int) -> list[OpennessSplit]:
    p = config.protocol
    if spec.fixed:
        known, unknown = fixed_partition(dataset.class_names, K)
        return [OpennessSplit.of(known, unknown[:U], p.seed * 1000 + r) for r in range(p.fixed_repeats)]
    return generate_splits(len(dataset.class_names), K, p.repeats, p.seed, U)


def default_split(config, dataset: Dataset | None = None):
    """``(train, test, split)`` for the first division of the configured task."""
    dataset = dataset if dataset is not None else load_source(config)
    spec = task_spec(config, len(dataset.class_names))
    K, U = spec.cells[0]
    split = cell_splits(config, spec, dataset, K, U)[0]
    train_set, test_set = apply_split(dataset, split, config.data.test_fraction)
    return train_set, test_set, split


def run_protocol(config, dataset: Dataset | None = None, *,
                 trainer: Callable = train, evaluator: Callable = evaluate_run) -> ProtocolReport:
    """Train and evaluate every division of the configured task; aggregate."""
    config.validate()
    dataset = dataset if dataset is not None else load_source(config)
    spec = task_spec(config, len(dataset.class_names))
    task = str(config.protocol.task)

    cells = []
    for K, U in spec.cells:
        cell = CellResult(K, U, openness(K, U))
        for r, split in enumerate(cell_splits(config, spec, dataset, K, U)):
            name = f"O{K}-{U}_r{r}"
            out = run_dir(config, name)
            save_split(split, out / "split.json")
            train_set, test_set = apply_split(dataset, split, config.data.test_fraction)
            cfg = with_values(config, run={"seed": config.run.seed + r})
            _log.info("task %s  %s  run %d  (%d train / %d test)", task, cell.label, r,
                      len(train_set), len(test_set))
            ckpt = trainer(cfg, train_set, run_dir=out, split=split)
            report = evaluator(cfg, ckpt, test_set, out_dir=out)
            if (out / SCORES_FILE).exists():
                plot_score_distributions(out / SCORES_FILE)
            cell.reports.append(report)
        cells.append(cell)

    result = ProtocolReport(task, cells)
    out = run_dir(config)
    (out / REPORT_FILE).write_text(json.dumps(result.to_dict(), indent=2), encoding="utf-8")
    (out / TABLE_FILE).write_text(result.table() + "\n", encoding="utf-8")
    print(result.table())
    print(f"✓ protocol report → {out / REPORT_FILE}")
    return result


def load_protocol_report(path: str | Path) -> dict:
    path = Path(path)
    return json.loads((path / REPORT_FILE if path.is_dir() else path).read_text(encoding="utf-8"))
