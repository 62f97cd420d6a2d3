"""Table builders shared across test modules."""

from __future__ import annotations

import random

import numpy as np

from taskforge.event_table import ColumnRole, EventTable, Schema

DAY = 86_400


def build_schema(
    n_entity: int, n_categorical: int, n_numerical: int, name: str = "synthetic"
) -> Schema:
    cols = [("ts", ColumnRole.TIME)]
    cols += [(f"e{i}", ColumnRole.ENTITY) for i in range(n_entity)]
    cols += [(f"c{i}", ColumnRole.CATEGORICAL) for i in range(n_categorical)]
    cols += [(f"n{i}", ColumnRole.NUMERICAL) for i in range(n_numerical)]
    return Schema(name=name, columns=tuple(cols))


def table_from_rows(schema: Schema, rows: list[dict]) -> EventTable:
    """Construct an EventTable directly from row dicts (timestamps in seconds)."""
    time_col = schema.time_column
    timestamps = np.array([int(r[time_col]) for r in rows], dtype=np.int64)
    columns: dict[str, np.ndarray] = {}
    for name in schema.entity_columns + schema.categorical_columns:
        columns[name] = np.array([str(r[name]) for r in rows], dtype=object)
    for name in schema.numerical_columns:
        columns[name] = np.array(
            [float("nan") if r.get(name) is None else float(r[name]) for r in rows],
            dtype=np.float64,
        )
    return EventTable(
        schema=schema,
        timestamps=timestamps,
        columns=columns,
        loaded_count=len(rows),
        dropped_count=0,
    )


def drop_rows(table: EventTable, keep_mask: np.ndarray) -> EventTable:
    """A copy of the table without the masked-out rows."""
    return EventTable(
        schema=table.schema,
        timestamps=table.timestamps[keep_mask],
        columns={name: vals[keep_mask] for name, vals in table.columns.items()},
        loaded_count=int(keep_mask.sum()),
        dropped_count=0,
    )


def random_event_rows(
    rng: random.Random,
    schema: Schema,
    n_rows: int,
    t_lo: int = 0,
    t_hi: int = 30 * DAY,
    missing_rate: float = 0.1,
) -> list[dict]:
    rows = []
    for _ in range(n_rows):
        row: dict = {"ts": rng.randrange(t_lo, t_hi)}
        for c in schema.entity_columns:
            row[c] = f"{c}-v{rng.randrange(4)}"
        for c in schema.categorical_columns:
            row[c] = f"{c}-v{rng.randrange(3)}"
        for c in schema.numerical_columns:
            row[c] = (
                None if rng.random() < missing_rate else round(rng.uniform(-50, 50), 3)
            )
        rows.append(row)
    return rows
