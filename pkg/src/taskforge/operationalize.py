"""From templates to labeled training data.

Operationalizing a template means: propose concrete filter thresholds,
lay a grid of back-to-back prediction windows over the table's time span,
compute one label per (entity, window) pair, and split the examples in
time.  A window start is the cutoff time: feature construction may only
see strictly earlier data, the label only the window itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .event_table import EventTable, WindowError, slice_window
from .task_space import (
    Epsilon,
    ExecutableTask,
    FilterOp,
    Label,
    MISSING,
    TaskTemplate,
    compute_label,
    make_task,
)

# A template is usable only if at least one of its tasks clears these floors.
MIN_TRAIN = 10
MIN_VALIDATION = 5

TARGET_KEEP_RATIOS = (0.25, 0.50, 0.75)
TOP_CATEGORIES = 3
SAMPLE_CAP = 10_000
DEFAULT_TRAIN_FRACTION = 0.7


@dataclass(frozen=True)
class CutoffTable:
    """The (entity, t_st, t_ed) grid shared by every task of one entity choice."""

    entities: tuple[str, ...]
    windows: tuple[tuple[int, int], ...]
    t_base: int
    t_terminate: int
    p_w: int
    t_star: int

    @property
    def rows(self) -> list[tuple[str, int, int]]:
        return [(e, st, ed) for e in self.entities for st, ed in self.windows]

    def __len__(self) -> int:
        return len(self.entities) * len(self.windows)


@dataclass(frozen=True)
class LabeledExample:
    entity: str
    t_st: int
    t_ed: int
    label: Label

    def to_dict(self) -> dict:
        return {
            "entity": self.entity,
            "t_st": self.t_st,
            "t_ed": self.t_ed,
            "label": self.label,
        }


@dataclass
class TaskDataset:
    task: ExecutableTask
    train: list[LabeledExample] = field(default_factory=list)
    validation: list[LabeledExample] = field(default_factory=list)

    @property
    def examples(self) -> list[LabeledExample]:
        return self.train + self.validation


def is_valid(dataset: TaskDataset) -> bool:
    return len(dataset.train) >= MIN_TRAIN and len(dataset.validation) >= MIN_VALIDATION


def _threshold_proposals(
    values: np.ndarray, filter_op: FilterOp, rng: np.random.Generator
) -> list[float]:
    finite = values[~np.isnan(values)]
    if finite.size == 0:
        return []
    if finite.size > SAMPLE_CAP:
        finite = rng.choice(finite, size=SAMPLE_CAP, replace=False)
    uniques, counts = np.unique(finite, return_counts=True)
    n = finite.size
    cum = np.cumsum(counts)
    if filter_op is FilterOp.GREATER:
        kept = (n - cum) / n  # strictly greater than each candidate
    else:
        kept = (cum - counts) / n  # strictly less than each candidate
    out: list[float] = []
    for target in TARGET_KEEP_RATIOS:
        best = uniques[int(np.argmin(np.abs(kept - target)))]
        if float(best) not in out:
            out.append(float(best))
    return out


def _category_proposals(values: np.ndarray) -> list[str]:
    if values.size == 0:
        return []
    uniques, counts = np.unique(values.astype(str), return_counts=True)
    ranked = sorted(zip(uniques.tolist(), counts.tolist()), key=lambda p: (-p[1], p[0]))
    return [v for v, _ in ranked[:TOP_CATEGORIES]]


def propose_hyperparameters(
    template: TaskTemplate, table: EventTable, seed: int = 0
) -> list[Epsilon]:
    """Candidate epsilons for one template.

    Numerical filters get up to three thresholds whose kept-row fraction
    is closest to 25/50/75% on a capped sample; categorical filters get
    the most frequent categories.  all_fil needs no hyperparameter and
    yields the single entry None.
    """
    op = template.filter_op
    if not op.needs_epsilon:
        return [None]
    values = table.columns[template.filter_col]
    if op in (FilterOp.GREATER, FilterOp.LESS):
        rng = np.random.default_rng(seed)
        return list(_threshold_proposals(values, op, rng))
    return list(_category_proposals(values))


def default_split_time(t_base: int, t_terminate: int, p_w: int, train_fraction: float = DEFAULT_TRAIN_FRACTION) -> int:
    """Window-aligned split instant keeping ~train_fraction of windows for training."""
    k = (t_terminate - t_base) // p_w
    if k <= 0:
        raise WindowError(f"no window of {p_w}s fits in [{t_base}, {t_terminate}]")
    return t_base + int(math.ceil(train_fraction * k)) * p_w


def build_cutoff_table(
    table: EventTable,
    e_star: Optional[str],
    p_w: int,
    t_base: Optional[int] = None,
    t_terminate: Optional[int] = None,
    t_star: Optional[int] = None,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
) -> CutoffTable:
    """Fit k back-to-back windows into [t_base, t_terminate] for every entity.

    Defaults: t_base/t_terminate are the table's time extremes and t_star
    is the window-aligned ~70% point.
    """
    if p_w <= 0:
        raise WindowError(f"window must be positive, got {p_w}")
    t_base = table.t_min if t_base is None else int(t_base)
    t_terminate = table.t_max if t_terminate is None else int(t_terminate)
    k = (t_terminate - t_base) // p_w
    if k <= 0:
        raise WindowError(
            f"no window of {p_w}s fits between {t_base} and {t_terminate}"
        )
    if t_star is None:
        t_star = default_split_time(t_base, t_terminate, p_w, train_fraction)
    if not (t_base <= t_star <= t_terminate):
        raise WindowError(f"t_star={t_star} outside [{t_base}, {t_terminate}]")
    windows = tuple(
        (t_base + i * p_w, t_base + (i + 1) * p_w) for i in range(int(k))
    )
    return CutoffTable(
        entities=tuple(table.entity_values(e_star)),
        windows=windows,
        t_base=t_base,
        t_terminate=t_terminate,
        p_w=int(p_w),
        t_star=int(t_star),
    )


def instantiate_tasks(
    template: TaskTemplate,
    table: EventTable,
    p_w: int,
    t_base: Optional[int] = None,
    t_terminate: Optional[int] = None,
    seed: int = 0,
) -> list[ExecutableTask]:
    """One executable task per proposed hyperparameter.

    Time bounds default to the table's extremes; an empty proposal list
    (e.g. an all-missing filter column) yields no tasks.
    """
    t_base = table.t_min if t_base is None else int(t_base)
    t_terminate = table.t_max if t_terminate is None else int(t_terminate)
    if t_base + p_w > t_terminate:
        raise WindowError(
            f"no window of {p_w}s fits between {t_base} and {t_terminate}"
        )
    return [
        make_task(template, eps, p_w, t_base, t_terminate)
        for eps in propose_hyperparameters(template, table, seed=seed)
    ]


def materialize(
    task: ExecutableTask, table: EventTable, cutoffs: CutoffTable
) -> TaskDataset:
    """Label every cutoff row, drop missing labels, split in time at t_star."""
    dataset = TaskDataset(task=task)
    for entity, t_st, t_ed in cutoffs.rows:
        rows = slice_window(table, task.template.entity, entity, t_st, t_ed)
        label = compute_label(rows, task.template, task.epsilon)
        if label is MISSING:
            continue
        example = LabeledExample(entity=entity, t_st=t_st, t_ed=t_ed, label=label)
        if t_st < cutoffs.t_star:
            dataset.train.append(example)
        else:
            dataset.validation.append(example)
    return dataset


@dataclass
class TemplateReport:
    """Per-template validity summary (`taskforge materialize` output)."""

    template: TaskTemplate
    n_tasks: int
    n_valid: int


def materialize_template(
    template: TaskTemplate,
    table: EventTable,
    cutoffs: CutoffTable,
    seed: int = 0,
) -> list[tuple[ExecutableTask, TaskDataset]]:
    tasks = instantiate_tasks(
        template, table, cutoffs.p_w, cutoffs.t_base, cutoffs.t_terminate, seed=seed
    )
    return [(task, materialize(task, table, cutoffs)) for task in tasks]


def build_task_pool(
    templates: Iterable[TaskTemplate],
    table: EventTable,
    cutoffs: CutoffTable,
    seed: int = 0,
    valid_only: bool = True,
) -> tuple[list[tuple[ExecutableTask, TaskDataset]], list[TemplateReport]]:
    """Materialize every template; keep tasks clearing the validity floors."""
    pool: list[tuple[ExecutableTask, TaskDataset]] = []
    reports: list[TemplateReport] = []
    for template in templates:
        pairs = materialize_template(template, table, cutoffs, seed=seed)
        n_valid = sum(1 for _, ds in pairs if is_valid(ds))
        reports.append(TemplateReport(template=template, n_tasks=len(pairs), n_valid=n_valid))
        for task, ds in pairs:
            if not valid_only or is_valid(ds):
                pool.append((task, ds))
    return pool, reports
