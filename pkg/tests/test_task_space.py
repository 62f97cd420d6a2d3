"""Operation language, enumeration counts, and label computation."""

from __future__ import annotations

import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taskforge.event_table import ROOT, ROOT_VALUE, Schema, slice_window
from taskforge.task_space import (
    AggOp,
    FilterOp,
    MISSING,
    TaskDefinitionError,
    TaskKind,
    TaskTemplate,
    classification_count_bound,
    compute_label,
    enumerate_templates,
    make_task,
    task_kind,
    template_count_bound,
)

from helpers import DAY, build_schema, random_event_rows, table_from_rows

YOUTUBE = build_schema(1, 1, 4, "youtube")
FLIGHT = build_schema(4, 4, 10, "flight")
CHICAGO = build_schema(2, 3, 4, "chicago")


# -- independent naive evaluator ----------------------------------------------


def naive_label(rows: list[dict], template: TaskTemplate, epsilon):
    """Plain-Python double loop; the oracle for compute_label."""
    kept = []
    for row in rows:
        op = template.filter_op
        if op is FilterOp.ALL:
            keep = True
        else:
            value = row.get(template.filter_col)
            if op is FilterOp.GREATER:
                keep = value is not None and value > epsilon
            elif op is FilterOp.LESS:
                keep = value is not None and value < epsilon
            elif op is FilterOp.EQ:
                keep = value == epsilon
            else:
                keep = value != epsilon
        if keep:
            kept.append(row)

    agg = template.agg_op
    if agg is AggOp.COUNT:
        return float(len(kept))
    if not kept:
        return MISSING
    if agg is AggOp.MAJORITY:
        counts = Counter(str(row[template.agg_col]) for row in kept)
        top = max(counts.values())
        return min(v for v, c in counts.items() if c == top)
    values = [row[template.agg_col] for row in kept if row[template.agg_col] is not None]
    if not values:
        return MISSING
    if agg is AggOp.SUM:
        return float(sum(values))
    if agg is AggOp.AVG:
        return float(sum(values)) / len(values)
    if agg is AggOp.MIN:
        return float(min(values))
    return float(max(values))


def subset_to_dicts(table, indices) -> list[dict]:
    out = []
    for i in indices:
        row = {}
        for name in table.columns:
            v = table.columns[name][i]
            if isinstance(v, float) and v != v:  # NaN
                v = None
            row[name] = v
        out.append(row)
    return out


# -- enumeration counts --------------------------------------------------------


@pytest.mark.parametrize(
    "schema,e_star,expected",
    [
        (YOUTUBE, "c0", 198),
        (YOUTUBE, "e0", 198),
        (YOUTUBE, ROOT, 247),
        (FLIGHT, "e0", 1680),
        (FLIGHT, "e2", 1680),
        (CHICAGO, "e0", 357),
        (CHICAGO, ROOT, 418),
    ],
)
def test_template_counts_match_published_sizes(schema, e_star, expected):
    assert template_count_bound(schema, e_star) == expected
    assert len(enumerate_templates(schema, e_star)) == expected


def test_bound_factors_flight_airline():
    # N_e=4, N_c=4, N_n=10, column entity: M=7 -> 35 x 48
    assert template_count_bound(FLIGHT, "e0") == 35 * 48


def test_bound_trivial_schema():
    schema = build_schema(1, 0, 0)
    assert template_count_bound(schema, "e0") == 1
    templates = enumerate_templates(schema, "e0")
    assert len(templates) == 1
    only = templates[0]
    assert only.filter_op is FilterOp.ALL and only.agg_op is AggOp.COUNT
    assert only.filter_col is None and only.agg_col is None


def test_enumerate_invalid_entity_type_returns_empty():
    schema = build_schema(1, 1, 2)
    assert enumerate_templates(schema, "n0") == []
    assert template_count_bound(schema, "n0") == 0
    assert enumerate_templates(schema, "nope") == []


def test_enumeration_is_deterministic():
    a = enumerate_templates(CHICAGO, ROOT)
    b = enumerate_templates(CHICAGO, ROOT)
    assert a == b


def test_entity_column_never_used_as_operand():
    for template in enumerate_templates(YOUTUBE, "c0"):
        assert template.filter_col != "c0"
        assert template.agg_col != "c0"
        assert template.filter_col != "ts"
        assert template.agg_col != "ts"


def test_classification_split_youtube():
    templates = enumerate_templates(YOUTUBE, "c0")
    n_cls = sum(1 for t in templates if task_kind(t) is TaskKind.CLASSIFICATION)
    assert n_cls == 11
    assert len(templates) - n_cls == 187
    assert classification_count_bound(YOUTUBE, "c0") == 11


@settings(max_examples=60, deadline=None)
@given(
    n_entity=st.integers(0, 3),
    n_categorical=st.integers(0, 3),
    n_numerical=st.integers(0, 3),
    pick=st.integers(0, 10),
)
def test_enumeration_size_equals_bound(n_entity, n_categorical, n_numerical, pick):
    schema = build_schema(n_entity, n_categorical, n_numerical)
    candidates = [ROOT] + schema.entity_columns + schema.categorical_columns
    e_star = candidates[pick % len(candidates)]
    templates = enumerate_templates(schema, e_star)
    assert len(templates) == template_count_bound(schema, e_star)
    n_cls = sum(1 for t in templates if task_kind(t) is TaskKind.CLASSIFICATION)
    assert n_cls == classification_count_bound(schema, e_star)
    assert len(set(templates)) == len(templates)


def test_task_kind_values():
    assert (
        task_kind(
            TaskTemplate(
                entity=ROOT,
                filter_op=FilterOp.ALL,
                filter_col=None,
                agg_op=AggOp.COUNT,
                agg_col=None,
            )
        )
        is TaskKind.REGRESSION
    )
    assert (
        task_kind(
            TaskTemplate(
                entity="e0",
                filter_op=FilterOp.EQ,
                filter_col="c0",
                agg_op=AggOp.MAJORITY,
                agg_col="c1",
            )
        )
        is TaskKind.CLASSIFICATION
    )


# -- label computation ----------------------------------------------------------


def delayed_table():
    schema = Schema.from_dict(
        {
            "name": "delays",
            "time": "ts",
            "entity": ["airline"],
            "categorical": ["is_delayed"],
            "numerical": [],
        }
    )
    rows = [
        {"ts": 10, "airline": "AA", "is_delayed": "1"},
        {"ts": 20, "airline": "AA", "is_delayed": "0"},
        {"ts": 30, "airline": "AA", "is_delayed": "1"},
        {"ts": 40, "airline": "DL", "is_delayed": "1"},
    ]
    return table_from_rows(schema, rows)


def test_eq_filter_count_label():
    table = delayed_table()
    rows = slice_window(table, "airline", "AA", 0, 100)
    template = TaskTemplate(
        entity="airline",
        filter_op=FilterOp.EQ,
        filter_col="is_delayed",
        agg_op=AggOp.COUNT,
        agg_col=None,
    )
    assert compute_label(rows, template, "1") == 2.0


def test_count_on_empty_window_is_zero():
    table = delayed_table()
    rows = slice_window(table, "airline", "AA", 1000, 2000)
    template = TaskTemplate(
        entity="airline",
        filter_op=FilterOp.ALL,
        filter_col=None,
        agg_op=AggOp.COUNT,
        agg_col=None,
    )
    assert compute_label(rows, template, None) == 0.0


def test_greater_filter_then_avg():
    schema = build_schema(0, 0, 2)
    rows = [
        {"ts": i, "n0": float(v), "n1": float(v)} for i, v in enumerate([1, 2, 3, 4])
    ]
    table = table_from_rows(schema, rows)
    subset = slice_window(table, ROOT, ROOT_VALUE, 0, 10)
    template = TaskTemplate(
        entity=ROOT,
        filter_op=FilterOp.GREATER,
        filter_col="n0",
        agg_op=AggOp.AVG,
        agg_col="n1",
    )
    assert compute_label(subset, template, 2.0) == pytest.approx(3.5)


def test_non_count_aggregates_on_empty_are_missing():
    schema = build_schema(0, 1, 1)
    table = table_from_rows(schema, [{"ts": 1, "c0": "x", "n0": 1.0}])
    subset = slice_window(table, ROOT, ROOT_VALUE, 50, 60)
    for agg, col in [
        (AggOp.SUM, "n0"),
        (AggOp.AVG, "n0"),
        (AggOp.MIN, "n0"),
        (AggOp.MAX, "n0"),
        (AggOp.MAJORITY, "c0"),
    ]:
        template = TaskTemplate(
            entity=ROOT, filter_op=FilterOp.ALL, filter_col=None, agg_op=agg, agg_col=col
        )
        assert compute_label(subset, template, None) is MISSING


def test_sum_over_all_missing_values_is_missing():
    schema = build_schema(0, 0, 1)
    table = table_from_rows(schema, [{"ts": 1, "n0": None}, {"ts": 2, "n0": None}])
    subset = slice_window(table, ROOT, ROOT_VALUE, 0, 10)
    template = TaskTemplate(
        entity=ROOT, filter_op=FilterOp.ALL, filter_col=None, agg_op=AggOp.SUM, agg_col="n0"
    )
    assert compute_label(subset, template, None) is MISSING


def test_majority_tie_breaks_to_smallest_value():
    schema = build_schema(0, 1, 0)
    table = table_from_rows(
        schema,
        [{"ts": 1, "c0": "b"}, {"ts": 2, "c0": "a"}, {"ts": 3, "c0": "b"}, {"ts": 4, "c0": "a"}],
    )
    subset = slice_window(table, ROOT, ROOT_VALUE, 0, 10)
    template = TaskTemplate(
        entity=ROOT,
        filter_op=FilterOp.ALL,
        filter_col=None,
        agg_op=AggOp.MAJORITY,
        agg_col="c0",
    )
    assert compute_label(subset, template, None) == "a"


def test_epsilon_type_mismatch_is_error():
    table = delayed_table()
    rows = slice_window(table, "airline", "AA", 0, 100)
    template = TaskTemplate(
        entity="airline",
        filter_op=FilterOp.EQ,
        filter_col="is_delayed",
        agg_op=AggOp.COUNT,
        agg_col=None,
    )
    with pytest.raises(TaskDefinitionError):
        compute_label(rows, template, 1.0)


def test_all_fil_count_equals_window_size():
    rng = random.Random(5)
    schema = build_schema(1, 1, 1)
    table = table_from_rows(schema, random_event_rows(rng, schema, 150))
    template = TaskTemplate(
        entity=ROOT, filter_op=FilterOp.ALL, filter_col=None, agg_op=AggOp.COUNT, agg_col=None
    )
    subset = slice_window(table, ROOT, ROOT_VALUE, 0, 10 * DAY)
    assert compute_label(subset, template, None) == float(len(subset))


def _random_triple(rng: random.Random):
    schema = build_schema(rng.randint(0, 2), rng.randint(0, 2), rng.randint(0, 2))
    candidates = [ROOT] + schema.entity_columns + schema.categorical_columns
    e_star = rng.choice(candidates)
    templates = enumerate_templates(schema, e_star)
    if not templates:
        return None
    template = rng.choice(templates)
    rows = random_event_rows(rng, schema, rng.randint(1, 200), missing_rate=0.2)
    table = table_from_rows(schema, rows)
    if template.filter_op in (FilterOp.GREATER, FilterOp.LESS):
        epsilon = round(rng.uniform(-60, 60), 2)
    elif template.filter_op in (FilterOp.EQ, FilterOp.NEQ):
        epsilon = f"{template.filter_col}-v{rng.randrange(4)}"
    else:
        epsilon = None
    entity = ROOT_VALUE if e_star is ROOT else rng.choice(table.entity_values(e_star))
    t_st = rng.randrange(0, 20 * DAY)
    return table, template, epsilon, e_star, entity, t_st, t_st + rng.randrange(1, 15 * DAY)


def test_compute_label_matches_naive_oracle_sample():
    rng = random.Random(2024)
    checked = 0
    while checked < 250:
        triple = _random_triple(rng)
        if triple is None:
            continue
        table, template, epsilon, e_star, entity, t_st, t_ed = triple
        subset = slice_window(table, e_star, entity, t_st, t_ed)
        expected = naive_label(subset_to_dicts(table, subset.indices), template, epsilon)
        actual = compute_label(subset, template, epsilon)
        if expected is MISSING:
            assert actual is MISSING
        elif isinstance(expected, str):
            assert actual == expected
        else:
            assert actual == pytest.approx(expected, abs=1e-12)
        checked += 1


# -- executable tasks ------------------------------------------------------------


def test_task_id_is_deterministic_and_content_sensitive():
    template = TaskTemplate(
        entity="e0", filter_op=FilterOp.GREATER, filter_col="n0", agg_op=AggOp.COUNT, agg_col=None
    )
    t1 = make_task(template, 1.5, DAY, 0, 10 * DAY)
    t2 = make_task(template, 1.5, DAY, 0, 10 * DAY)
    t3 = make_task(template, 2.5, DAY, 0, 10 * DAY)
    assert t1.task_id == t2.task_id
    assert t1.task_id != t3.task_id


def test_epsilon_arity_enforced():
    greater = TaskTemplate(
        entity="e0", filter_op=FilterOp.GREATER, filter_col="n0", agg_op=AggOp.COUNT, agg_col=None
    )
    allf = TaskTemplate(
        entity="e0", filter_op=FilterOp.ALL, filter_col=None, agg_op=AggOp.COUNT, agg_col=None
    )
    with pytest.raises(TaskDefinitionError):
        make_task(greater, None, DAY, 0, 10 * DAY)
    with pytest.raises(TaskDefinitionError):
        make_task(allf, 5.0, DAY, 0, 10 * DAY)
    with pytest.raises(TaskDefinitionError):
        make_task(allf, None, 10 * DAY, 0, DAY)


def test_template_validate_against_schema():
    schema = build_schema(1, 1, 1)
    good = TaskTemplate(
        entity="e0", filter_op=FilterOp.EQ, filter_col="c0", agg_op=AggOp.SUM, agg_col="n0"
    )
    good.validate(schema)
    with pytest.raises(TaskDefinitionError):
        TaskTemplate(
            entity="e0", filter_op=FilterOp.EQ, filter_col="e0", agg_op=AggOp.SUM, agg_col="n0"
        ).validate(schema)
    with pytest.raises(TaskDefinitionError):
        TaskTemplate(
            entity="e0", filter_op=FilterOp.GREATER, filter_col="c0", agg_op=AggOp.SUM, agg_col="n0"
        ).validate(schema)
