"""The prediction-task operation language and its enumeration.

A task template is the 5-tuple (entity choice, filter op, filter column,
aggregate op, aggregate column).  An executable task adds the filter
hyperparameter, the prediction window and the time bounds.  Labels are
produced by one filter followed by one aggregate over a window slice.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from .event_table import (
    ROOT,
    ColumnRole,
    ENTITY_LIKE_ROLES,
    RowSubset,
    Schema,
    entity_candidates,
)

# Missing label sentinel: aggregates other than count produce it on empty input.
MISSING = None

Label = Union[float, str, None]
Epsilon = Union[float, str, None]


class TaskDefinitionError(ValueError):
    """Template/epsilon combination is not well-typed."""


class FilterOp(str, Enum):
    # Declaration order is the canonical enumeration order.
    ALL = "all_fil"
    GREATER = "greater_fil"
    LESS = "less_fil"
    EQ = "eq_fil"
    NEQ = "neq_fil"

    @property
    def needs_epsilon(self) -> bool:
        return self is not FilterOp.ALL

    @property
    def column_roles(self) -> tuple[ColumnRole, ...]:
        if self is FilterOp.ALL:
            return ()
        if self in (FilterOp.GREATER, FilterOp.LESS):
            return (ColumnRole.NUMERICAL,)
        return ENTITY_LIKE_ROLES


class AggOp(str, Enum):
    COUNT = "count_agg"
    SUM = "sum_agg"
    AVG = "avg_agg"
    MIN = "min_agg"
    MAX = "max_agg"
    MAJORITY = "majority_agg"

    @property
    def column_roles(self) -> tuple[ColumnRole, ...]:
        if self is AggOp.COUNT:
            return ()
        if self is AggOp.MAJORITY:
            return ENTITY_LIKE_ROLES
        return (ColumnRole.NUMERICAL,)


class TaskKind(str, Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


@dataclass(frozen=True)
class TaskTemplate:
    """(e*, fil_op, d_f, agg_op, d_g) with None for column-less operations."""

    entity: Optional[str]
    filter_op: FilterOp
    filter_col: Optional[str]
    agg_op: AggOp
    agg_col: Optional[str]

    def validate(self, schema: Schema) -> None:
        candidates = entity_candidates(schema)
        if self.entity not in candidates:
            raise TaskDefinitionError(f"invalid entity choice {self.entity!r}")
        for op_roles, col, side in (
            (self.filter_op.column_roles, self.filter_col, "filter"),
            (self.agg_op.column_roles, self.agg_col, "aggregate"),
        ):
            if not op_roles:
                if col is not None:
                    raise TaskDefinitionError(f"{side} op takes no column, got {col!r}")
                continue
            if col is None:
                raise TaskDefinitionError(f"{side} op requires a column")
            if schema.role_of(col) not in op_roles:
                raise TaskDefinitionError(
                    f"{side} column {col!r} has unsupported role {schema.role_of(col).value}"
                )
            if col == self.entity:
                raise TaskDefinitionError(f"{side} column equals the entity column")


def task_kind(template: TaskTemplate) -> TaskKind:
    if template.agg_op is AggOp.MAJORITY:
        return TaskKind.CLASSIFICATION
    return TaskKind.REGRESSION


@dataclass(frozen=True)
class ExecutableTask:
    """Template plus hyperparameter, window and time bounds.

    ``task_id`` is a content hash of every other field, so re-running
    enumeration on identical inputs yields identical identifiers.
    """

    template: TaskTemplate
    epsilon: Epsilon
    window_seconds: int
    t_base: int
    t_terminate: int
    task_id: str

    def __post_init__(self) -> None:
        if self.template.filter_op.needs_epsilon and self.epsilon is None:
            raise TaskDefinitionError(
                f"{self.template.filter_op.value} requires a hyperparameter"
            )
        if not self.template.filter_op.needs_epsilon and self.epsilon is not None:
            raise TaskDefinitionError("all_fil takes no hyperparameter")
        if self.t_base + self.window_seconds > self.t_terminate:
            raise TaskDefinitionError(
                "no window fits: t_base + window exceeds t_terminate"
            )

    def to_export_dict(self) -> dict:
        t = self.template
        return {
            "task_id": self.task_id,
            "entity": t.entity,
            "filter_op": t.filter_op.value,
            "filter_col": t.filter_col,
            "epsilon": self.epsilon,
            "agg_op": t.agg_op.value,
            "agg_col": t.agg_col,
            "window_seconds": self.window_seconds,
            "kind": task_kind(t).value,
        }

    @classmethod
    def from_export_dict(
        cls, obj: dict, t_base: int = 0, t_terminate: Optional[int] = None
    ) -> "ExecutableTask":
        """Rebuild from an export record; verifies a stored task_id if present."""
        template = TaskTemplate(
            entity=obj["entity"],
            filter_op=FilterOp(obj["filter_op"]),
            filter_col=obj["filter_col"],
            agg_op=AggOp(obj["agg_op"]),
            agg_col=obj["agg_col"],
        )
        window = int(obj["window_seconds"])
        t_term = obj.get("t_terminate", t_terminate)
        if t_term is None:
            t_term = t_base + window
        task = make_task(
            template, obj["epsilon"], window, obj.get("t_base", t_base), int(t_term)
        )
        stored = obj.get("task_id")
        if stored is not None and stored != task.task_id:
            raise TaskDefinitionError(
                f"task record {stored!r} does not match its recomputed id "
                f"{task.task_id!r}; record is corrupt or missing time bounds"
            )
        return task


def make_task(
    template: TaskTemplate,
    epsilon: Epsilon,
    window_seconds: int,
    t_base: int,
    t_terminate: int,
) -> ExecutableTask:
    payload = json.dumps(
        [
            template.entity,
            template.filter_op.value,
            template.filter_col,
            template.agg_op.value,
            template.agg_col,
            epsilon if not isinstance(epsilon, float) else repr(epsilon),
            int(window_seconds),
            int(t_base),
            int(t_terminate),
        ],
        separators=(",", ":"),
    )
    digest = hashlib.sha1(payload.encode("utf-8")).hexdigest()[:12]
    return ExecutableTask(
        template=template,
        epsilon=epsilon,
        window_seconds=int(window_seconds),
        t_base=int(t_base),
        t_terminate=int(t_terminate),
        task_id=f"t{digest}",
    )


def _column_candidates(
    schema: Schema, e_star: Optional[str], roles: tuple[ColumnRole, ...]
) -> list[Optional[str]]:
    if not roles:
        return [None]
    cols = schema.columns_with_role(*roles)
    # A column entity choice is excluded from its own filter/aggregate slots;
    # numerical columns are unaffected since an entity choice is never numerical.
    return [c for c in cols if c != e_star]


def enumerate_templates(schema: Schema, e_star: Optional[str]) -> list[TaskTemplate]:
    """All well-typed templates for one entity choice, in canonical order.

    Order: filter ops in declaration order, then filter columns in schema
    order, then aggregate ops, then aggregate columns.  An entity choice
    that is neither the root nor an entity/categorical column yields [].
    """
    if e_star is not ROOT and (
        e_star not in dict(schema.columns)
        or schema.role_of(e_star) not in ENTITY_LIKE_ROLES
    ):
        return []
    out: list[TaskTemplate] = []
    for fil_op in FilterOp:
        for d_f in _column_candidates(schema, e_star, fil_op.column_roles):
            for agg_op in AggOp:
                for d_g in _column_candidates(schema, e_star, agg_op.column_roles):
                    out.append(
                        TaskTemplate(
                            entity=e_star,
                            filter_op=fil_op,
                            filter_col=d_f,
                            agg_op=agg_op,
                            agg_col=d_g,
                        )
                    )
    return out


def template_count_bound(schema: Schema, e_star: Optional[str]) -> int:
    """Closed-form size of the template space: (2M + 2Nn + 1) * (M + 4Nn + 1).

    M counts entity+categorical columns available as operation columns,
    i.e. all of them for the root choice and all but e* otherwise.
    """
    if e_star is not ROOT and (
        e_star not in dict(schema.columns)
        or schema.role_of(e_star) not in ENTITY_LIKE_ROLES
    ):
        return 0
    m = schema.n_entity + schema.n_categorical - (0 if e_star is ROOT else 1)
    n_n = schema.n_numerical
    return (2 * m + 2 * n_n + 1) * (m + 4 * n_n + 1)


def classification_count_bound(schema: Schema, e_star: Optional[str]) -> int:
    """Templates whose aggregate is majority (the classification tasks)."""
    if template_count_bound(schema, e_star) == 0:
        return 0
    m = schema.n_entity + schema.n_categorical - (0 if e_star is ROOT else 1)
    n_n = schema.n_numerical
    return (2 * m + 2 * n_n + 1) * m


def _filter_mask(
    rows: RowSubset, filter_op: FilterOp, d_f: Optional[str], epsilon: Epsilon
) -> np.ndarray:
    if filter_op is FilterOp.ALL:
        return np.ones(len(rows), dtype=bool)
    values = rows.values(d_f)
    if filter_op in (FilterOp.GREATER, FilterOp.LESS):
        if not isinstance(epsilon, (int, float)) or isinstance(epsilon, bool):
            raise TaskDefinitionError(
                f"{filter_op.value} needs a numerical threshold, got {epsilon!r}"
            )
        with np.errstate(invalid="ignore"):
            if filter_op is FilterOp.GREATER:
                return values > epsilon
            return values < epsilon
    if not isinstance(epsilon, str):
        raise TaskDefinitionError(
            f"{filter_op.value} needs a category value, got {epsilon!r}"
        )
    if filter_op is FilterOp.EQ:
        return values == epsilon
    return values != epsilon


def compute_label(
    rows: RowSubset, template: TaskTemplate, epsilon: Epsilon = None
) -> Label:
    """Apply the template's filter then aggregate to a window slice.

    count over an empty filtered set is 0; every other aggregate over an
    empty (or all-missing) set is MISSING.  Missing numerical cells are
    skipped by the numerical aggregates.
    """
    mask = _filter_mask(rows, template.filter_op, template.filter_col, epsilon)
    kept = int(mask.sum())
    agg = template.agg_op
    if agg is AggOp.COUNT:
        return float(kept)
    if kept == 0:
        return MISSING
    values = rows.values(template.agg_col)[mask]
    if agg is AggOp.MAJORITY:
        uniques, counts = np.unique(values.astype(str), return_counts=True)
        # np.unique sorts lexicographically, so argmax lands on the smallest
        # value among tied counts.
        return str(uniques[np.argmax(counts)])
    finite = values[~np.isnan(values.astype(np.float64))]
    if finite.size == 0:
        return MISSING
    if agg is AggOp.SUM:
        return float(finite.sum())
    if agg is AggOp.AVG:
        return float(finite.mean())
    if agg is AggOp.MIN:
        return float(finite.min())
    return float(finite.max())
