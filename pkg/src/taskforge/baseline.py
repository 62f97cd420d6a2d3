"""Minimal native solver for materialized tasks.

One fixed linear pipeline stands in for an AutoML stack: lag/rolling
features built strictly from data before each example's cutoff time, a
closed-form ridge model for regression, and a one-vs-rest ridge scorer
for classification.  Reports carry the trivial-baseline metric (mean
predictor / majority class) next to the model's.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from .event_table import EventTable, history_before, slice_window
from .operationalize import LabeledExample, TaskDataset
from .task_space import ExecutableTask, TaskKind, task_kind

RIDGE_ALPHA = 1.0
MAX_CLASSES = 20
OTHER_CLASS = "__other__"

N_LAGS = 3


@dataclass(frozen=True)
class ModelReport:
    task_id: str
    kind: TaskKind
    metric_name: str
    train_size: int
    validation_size: int
    metric_value: Optional[float]
    baseline_value: Optional[float]
    note: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "kind": self.kind.value,
            "metric_name": self.metric_name,
            "train_size": self.train_size,
            "validation_size": self.validation_size,
            "metric_value": self.metric_value,
            "baseline_value": self.baseline_value,
            "note": self.note,
        }


def ridge_solve(X: np.ndarray, y: np.ndarray, alpha: float) -> np.ndarray:
    """Least squares with an L2 penalty on everything but the intercept.

    Returns (d+1,) weights for X augmented with a trailing bias column.
    """
    n, d = X.shape
    Xb = np.hstack([X, np.ones((n, 1))])
    penalty = alpha * np.eye(d + 1)
    penalty[d, d] = 0.0
    return np.linalg.solve(Xb.T @ Xb + penalty, Xb.T @ y)


def ridge_predict(X: np.ndarray, weights: np.ndarray) -> np.ndarray:
    Xb = np.hstack([X, np.ones((X.shape[0], 1))])
    return Xb @ weights


class FeatureBuilder:
    """Per-task feature extractor; everything derives from data before t_st."""

    def __init__(
        self,
        task: ExecutableTask,
        table: EventTable,
        classes: Optional[Sequence[str]] = None,
    ):
        self.task = task
        self.table = table
        self.kind = task_kind(task.template)
        self.classes = list(classes) if classes is not None else None
        if self.kind is TaskKind.CLASSIFICATION and self.classes is None:
            raise ValueError("classification features need a class vocabulary")

    def build(
        self, example: LabeledExample, prior_examples: Sequence[LabeledExample]
    ) -> np.ndarray:
        priors = [p.label for p in prior_examples]
        feats: list[float] = []
        if self.kind is TaskKind.REGRESSION:
            lags = [float(v) for v in reversed(priors[-N_LAGS:])]
            feats.extend(lags + [0.0] * (N_LAGS - len(lags)))
            feats.append(float(np.mean(lags)) if lags else 0.0)
        else:
            last = str(priors[-1]) if priors else None
            for cls in self.classes:
                feats.append(1.0 if last == cls else 0.0)
            feats.append(1.0 if (last is not None and last not in self.classes) else 0.0)

        entity_col = self.task.template.entity
        prev_window = slice_window(
            self.table,
            entity_col,
            example.entity,
            example.t_st - self.task.window_seconds,
            example.t_st,
        )
        history = history_before(self.table, entity_col, example.entity, example.t_st)
        feats.append(float(len(prev_window)))
        feats.append(float(len(history)))

        at = datetime.fromtimestamp(example.t_st, tz=timezone.utc)
        feats.append(float(at.weekday()))
        feats.append(float(at.month))
        feats.append(1.0 if prior_examples else 0.0)
        return np.array(feats, dtype=np.float64)


def build_features(
    task: ExecutableTask,
    table: EventTable,
    example: LabeledExample,
    prior_examples: Sequence[LabeledExample],
    classes: Optional[Sequence[str]] = None,
) -> np.ndarray:
    return FeatureBuilder(task, table, classes=classes).build(example, prior_examples)


def class_vocabulary(train: Sequence[LabeledExample]) -> list[str]:
    """Most frequent train classes, capped; rarer labels map to OTHER_CLASS."""
    counts: dict[str, int] = {}
    for ex in train:
        counts[str(ex.label)] = counts.get(str(ex.label), 0) + 1
    ranked = sorted(counts.items(), key=lambda p: (-p[1], p[0]))
    return [c for c, _ in ranked[:MAX_CLASSES]]


def _feature_matrix(
    builder: FeatureBuilder, dataset: TaskDataset
) -> tuple[np.ndarray, np.ndarray, list[LabeledExample], list[LabeledExample]]:
    """Features for train and validation, with per-entity label history.

    Priors for an example are all earlier examples of the same entity,
    train or validation alike: earlier window labels are observable at
    prediction time.
    """
    by_entity: dict[str, list[LabeledExample]] = {}
    for ex in dataset.examples:
        by_entity.setdefault(ex.entity, []).append(ex)
    for seq in by_entity.values():
        seq.sort(key=lambda ex: ex.t_st)

    def rows(examples: list[LabeledExample]) -> np.ndarray:
        out = []
        for ex in examples:
            seq = by_entity[ex.entity]
            priors = [p for p in seq if p.t_st < ex.t_st]
            out.append(builder.build(ex, priors))
        return np.array(out, dtype=np.float64)

    train = sorted(dataset.train, key=lambda ex: (ex.t_st, ex.entity))
    validation = sorted(dataset.validation, key=lambda ex: (ex.t_st, ex.entity))
    return rows(train), rows(validation), train, validation


class _Standardizer:
    def __init__(self, X: np.ndarray):
        self.mean = X.mean(axis=0)
        std = X.std(axis=0)
        std[std == 0.0] = 1.0
        self.std = std

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


def r_squared(y_true: np.ndarray, y_pred: np.ndarray) -> Optional[float]:
    ss_tot = float(((y_true - y_true.mean()) ** 2).sum())
    if ss_tot == 0.0:
        return None
    ss_res = float(((y_true - y_pred) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def train_and_evaluate(
    task: ExecutableTask,
    dataset: TaskDataset,
    table: EventTable,
    alpha: float = RIDGE_ALPHA,
    seed: int = 0,
) -> ModelReport:
    """Fit the fixed pipeline and score it on the temporal validation split.

    The pipeline is closed-form, so the result is a pure function of the
    dataset; ``seed`` is accepted for interface stability only.
    """
    kind = task_kind(task.template)
    if kind is TaskKind.CLASSIFICATION:
        return _evaluate_classification(task, dataset, table, alpha)
    return _evaluate_regression(task, dataset, table, alpha)


def _evaluate_regression(
    task: ExecutableTask, dataset: TaskDataset, table: EventTable, alpha: float
) -> ModelReport:
    builder = FeatureBuilder(task, table)
    X_train, X_val, train, validation = _feature_matrix(builder, dataset)
    y_train = np.array([float(ex.label) for ex in train])
    y_val = np.array([float(ex.label) for ex in validation])

    scale = _Standardizer(X_train)
    weights = ridge_solve(scale(X_train), y_train, alpha)
    y_pred = ridge_predict(scale(X_val), weights)

    metric = r_squared(y_val, y_pred)
    baseline = r_squared(y_val, np.full_like(y_val, y_train.mean()))
    note = "validation labels constant; R2 undefined" if metric is None else None
    return ModelReport(
        task_id=task.task_id,
        kind=TaskKind.REGRESSION,
        metric_name="r2",
        train_size=len(train),
        validation_size=len(validation),
        metric_value=metric,
        baseline_value=baseline,
        note=note,
    )


def _evaluate_classification(
    task: ExecutableTask, dataset: TaskDataset, table: EventTable, alpha: float
) -> ModelReport:
    classes = class_vocabulary(dataset.train)
    builder = FeatureBuilder(task, table, classes=classes)
    X_train, X_val, train, validation = _feature_matrix(builder, dataset)

    def encode(examples: list[LabeledExample]) -> list[str]:
        return [
            str(ex.label) if str(ex.label) in classes else OTHER_CLASS
            for ex in examples
        ]

    labels = classes + [OTHER_CLASS]
    y_train = encode(train)
    y_val = encode(validation)

    scale = _Standardizer(X_train)
    Xs_train, Xs_val = scale(X_train), scale(X_val)
    targets = np.array(
        [[1.0 if y == cls else 0.0 for cls in labels] for y in y_train]
    )
    weights = np.column_stack(
        [ridge_solve(Xs_train, targets[:, j], alpha) for j in range(len(labels))]
    )
    scores = ridge_predict(Xs_val, weights)
    predicted = [labels[j] for j in np.argmax(scores, axis=1)]

    accuracy = float(np.mean([p == t for p, t in zip(predicted, y_val)]))
    majority = max(set(y_train), key=lambda c: (y_train.count(c), c))
    baseline = float(np.mean([t == majority for t in y_val]))
    return ModelReport(
        task_id=task.task_id,
        kind=TaskKind.CLASSIFICATION,
        metric_name="accuracy",
        train_size=len(train),
        validation_size=len(validation),
        metric_value=accuracy,
        baseline_value=baseline,
    )


def metric_histogram(reports: Sequence[ModelReport], bin_width: float = 0.1) -> dict:
    """Counts of metric values per bin; negatives pool into the lowest bin."""
    bins: dict[str, int] = {}
    for report in reports:
        if report.metric_value is None:
            bins["n/a"] = bins.get("n/a", 0) + 1
            continue
        v = report.metric_value
        if v < 0:
            key = "<0.0"
        else:
            lo = min(int(v / bin_width) * bin_width, 1.0 - bin_width)
            key = f"{lo:.1f}-{lo + bin_width:.1f}"
        bins[key] = bins.get(key, 0) + 1
    return bins
