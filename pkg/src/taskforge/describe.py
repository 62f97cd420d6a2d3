"""Deterministic natural-language rendering of tasks and templates."""

from __future__ import annotations

from typing import Optional, Union

from .event_table import ROOT
from .task_space import AggOp, Epsilon, ExecutableTask, FilterOp, TaskTemplate

_AGG_PHRASES = {
    AggOp.COUNT: "the number of records",
    AggOp.SUM: "the total of {col}",
    AggOp.AVG: "the average of {col}",
    AggOp.MIN: "the minimum of {col}",
    AggOp.MAX: "the maximum of {col}",
    AggOp.MAJORITY: "the most common {col}",
}

_FILTER_PHRASES = {
    FilterOp.EQ: "{col} is {eps}",
    FilterOp.NEQ: "{col} is not {eps}",
    FilterOp.GREATER: "{col} is greater than {eps}",
    FilterOp.LESS: "{col} is less than {eps}",
}

_UNITS = (("day", 86_400), ("hour", 3_600), ("minute", 60), ("second", 1))


def format_duration(seconds: int) -> str:
    """Largest unit that divides the duration evenly: 604800 -> '7 days'."""
    for unit, size in _UNITS:
        if seconds % size == 0:
            n = seconds // size
            return f"{n} {unit}" if n == 1 else f"{n} {unit}s"
    return f"{seconds} seconds"


def _format_epsilon(epsilon: Epsilon, filter_op: FilterOp) -> str:
    if epsilon is None:
        return "<threshold>" if filter_op in (FilterOp.GREATER, FilterOp.LESS) else "<value>"
    if isinstance(epsilon, float) and epsilon == int(epsilon):
        return str(int(epsilon))
    return str(epsilon)


def describe(
    task: Union[ExecutableTask, TaskTemplate], window_seconds: Optional[int] = None
) -> str:
    """One English sentence per task, injective over distinct (template, epsilon)."""
    if isinstance(task, ExecutableTask):
        template = task.template
        epsilon = task.epsilon
        window_seconds = task.window_seconds
    else:
        template = task
        epsilon = None

    if template.entity is ROOT:
        lead = "Over all records, predict"
    else:
        lead = f"For each {template.entity}, predict"

    agg = _AGG_PHRASES[template.agg_op].format(col=template.agg_col)

    window = format_duration(window_seconds) if window_seconds is not None else "<window>"

    if template.filter_op is FilterOp.ALL:
        return f"{lead} {agg} in the next {window}."
    clause = _FILTER_PHRASES[template.filter_op].format(
        col=template.filter_col, eps=_format_epsilon(epsilon, template.filter_op)
    )
    return f"{lead} {agg} where {clause}, in the next {window}."
