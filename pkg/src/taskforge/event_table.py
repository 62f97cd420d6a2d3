"""Ingestion and window slicing for event-driven time-series tables.

An event table is an append-only table where every row is a timestamped
event.  One column carries the timestamp, some columns identify entities
(flight number, airline, station, ...), and the remaining columns are
categorical or numerical attributes of the event.  Tables are immutable
after load and safe to share across threads.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import BinaryIO, Iterator, Optional, Union

import numpy as np

# Entity choice for "make one prediction stream over all records".
ROOT: Optional[str] = None

# Entity value assigned to every row when the root pseudo entity is chosen.
ROOT_VALUE = "__root__"


class SchemaError(ValueError):
    """Schema is malformed or does not match the data header."""


class EmptyTableError(ValueError):
    """No row of the source survived parsing."""


class WindowError(ValueError):
    """Degenerate time window (t_st >= t_ed, or no window fits the span)."""


class ColumnRole(str, Enum):
    TIME = "time"
    ENTITY = "entity"
    CATEGORICAL = "categorical"
    NUMERICAL = "numerical"


# Roles whose columns may serve as an entity choice beside the root.
ENTITY_LIKE_ROLES = (ColumnRole.ENTITY, ColumnRole.CATEGORICAL)


@dataclass(frozen=True)
class Schema:
    """Column-role declaration for one event table.

    ``columns`` preserves declaration order; that order is what makes task
    enumeration deterministic downstream.
    """

    name: str
    columns: tuple[tuple[str, ColumnRole], ...]

    def __post_init__(self) -> None:
        names = [c for c, _ in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate column names in schema {self.name!r}")
        n_time = sum(1 for _, role in self.columns if role is ColumnRole.TIME)
        if n_time != 1:
            raise SchemaError(
                f"schema {self.name!r} must declare exactly one time column, got {n_time}"
            )

    @property
    def time_column(self) -> str:
        return next(c for c, role in self.columns if role is ColumnRole.TIME)

    def columns_with_role(self, *roles: ColumnRole) -> list[str]:
        return [c for c, role in self.columns if role in roles]

    @property
    def entity_columns(self) -> list[str]:
        return self.columns_with_role(ColumnRole.ENTITY)

    @property
    def categorical_columns(self) -> list[str]:
        return self.columns_with_role(ColumnRole.CATEGORICAL)

    @property
    def numerical_columns(self) -> list[str]:
        return self.columns_with_role(ColumnRole.NUMERICAL)

    @property
    def n_entity(self) -> int:
        return len(self.entity_columns)

    @property
    def n_categorical(self) -> int:
        return len(self.categorical_columns)

    @property
    def n_numerical(self) -> int:
        return len(self.numerical_columns)

    def role_of(self, column: str) -> ColumnRole:
        for c, role in self.columns:
            if c == column:
                return role
        raise SchemaError(f"unknown column {column!r} in schema {self.name!r}")

    @classmethod
    def from_dict(cls, obj: dict) -> "Schema":
        """Build from the JSON schema-file layout.

        Expected keys: ``name``, ``time`` (one column), ``entity``,
        ``categorical``, ``numerical`` (lists, may be absent).
        """
        try:
            time_col = obj["time"]
        except KeyError as exc:
            raise SchemaError("schema file missing required key 'time'") from exc
        cols: list[tuple[str, ColumnRole]] = [(time_col, ColumnRole.TIME)]
        for key, role in (
            ("entity", ColumnRole.ENTITY),
            ("categorical", ColumnRole.CATEGORICAL),
            ("numerical", ColumnRole.NUMERICAL),
        ):
            for c in obj.get(key, []):
                cols.append((c, role))
        return cls(name=obj.get("name", "unnamed"), columns=tuple(cols))

    @classmethod
    def from_json(cls, source: Union[str, Path]) -> "Schema":
        text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
        try:
            obj = json.loads(text)
        except json.JSONDecodeError:
            # Treat a non-JSON string argument as a file path.
            obj = json.loads(Path(text).read_text(encoding="utf-8"))
        return cls.from_dict(obj)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "time": self.time_column,
            "entity": self.entity_columns,
            "categorical": self.categorical_columns,
            "numerical": self.numerical_columns,
        }


_TS_FORMATS = ("%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M", "%Y/%m/%d %H:%M:%S", "%Y/%m/%d")


def parse_timestamp(text: str) -> Optional[int]:
    """Parse an ISO-8601 / ``YYYY-MM-DD HH:MM:SS`` timestamp to UTC epoch seconds.

    Naive timestamps are taken as UTC.  Returns None when unparseable.
    """
    raw = text.strip()
    if not raw:
        return None
    if raw.lstrip("-").isdigit():
        return int(raw)
    candidate = raw.replace("Z", "+00:00") if raw.endswith("Z") else raw
    dt: Optional[datetime] = None
    try:
        dt = datetime.fromisoformat(candidate)
    except ValueError:
        for fmt in _TS_FORMATS:
            try:
                dt = datetime.strptime(raw, fmt)
                break
            except ValueError:
                continue
    if dt is None:
        return None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_timestamp(epoch_seconds: int) -> str:
    return datetime.fromtimestamp(int(epoch_seconds), tz=timezone.utc).strftime(
        "%Y-%m-%dT%H:%M:%SZ"
    )


_DURATION_UNITS = {"w": 604_800, "d": 86_400, "h": 3_600, "m": 60, "s": 1}


def parse_duration(text: Union[str, int]) -> int:
    """'7d' / '12h' / '90m' / '3600' -> seconds."""
    if isinstance(text, int):
        seconds = text
    else:
        raw = text.strip().lower()
        if raw and raw[-1] in _DURATION_UNITS:
            try:
                seconds = int(float(raw[:-1]) * _DURATION_UNITS[raw[-1]])
            except ValueError:
                raise WindowError(f"cannot parse duration {text!r}")
        else:
            try:
                seconds = int(raw)
            except ValueError:
                raise WindowError(f"cannot parse duration {text!r}")
    if seconds <= 0:
        raise WindowError(f"duration must be positive, got {text!r}")
    return seconds


class EventTable:
    """Immutable, time-sorted view of an ingested event table.

    Storage is columnar: the time column as an int64 epoch-seconds array,
    text columns (entity/categorical) as object arrays of ``str``, and
    numerical columns as float64 arrays with NaN marking missing cells.
    """

    def __init__(
        self,
        schema: Schema,
        timestamps: np.ndarray,
        columns: dict[str, np.ndarray],
        loaded_count: int,
        dropped_count: int,
    ):
        order = np.argsort(timestamps, kind="stable")
        self.schema = schema
        self.timestamps = timestamps[order]
        self.columns = {name: values[order] for name, values in columns.items()}
        self.loaded_count = loaded_count
        self.dropped_count = dropped_count

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def t_min(self) -> int:
        return int(self.timestamps[0])

    @property
    def t_max(self) -> int:
        return int(self.timestamps[-1])

    def entity_values(self, e_star: Optional[str]) -> list[str]:
        """Distinct values of an entity choice, sorted for determinism."""
        if e_star is ROOT:
            return [ROOT_VALUE]
        return sorted(set(self.columns[e_star].tolist()))

    def to_records(self) -> Iterator[dict]:
        """Rows as dicts; missing numerical cells become None."""
        names = [c for c, _ in self.schema.columns]
        time_col = self.schema.time_column
        for i in range(len(self)):
            rec: dict = {}
            for name in names:
                if name == time_col:
                    rec[name] = int(self.timestamps[i])
                else:
                    v = self.columns[name][i]
                    if isinstance(v, (float, np.floating)) and np.isnan(v):
                        rec[name] = None
                    elif isinstance(v, np.floating):
                        rec[name] = float(v)
                    else:
                        rec[name] = v
            yield rec

    def summary(self) -> dict:
        """Per-column cardinality/range digest for `taskforge load --validate`."""
        out: dict = {
            "name": self.schema.name,
            "rows": len(self),
            "loaded": self.loaded_count,
            "dropped": self.dropped_count,
            "time_range": [format_timestamp(self.t_min), format_timestamp(self.t_max)],
            "columns": {},
        }
        for name, role in self.schema.columns:
            if role is ColumnRole.TIME:
                continue
            if role is ColumnRole.NUMERICAL:
                values = self.columns[name]
                finite = values[~np.isnan(values)]
                out["columns"][name] = {
                    "role": role.value,
                    "missing": int(np.isnan(values).sum()),
                    "min": float(finite.min()) if finite.size else None,
                    "max": float(finite.max()) if finite.size else None,
                }
            else:
                out["columns"][name] = {
                    "role": role.value,
                    "cardinality": len(set(self.columns[name].tolist())),
                }
        return out


@dataclass(frozen=True)
class RowSubset:
    """A slice of an EventTable identified by row indices (time-sorted)."""

    table: EventTable
    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def values(self, column: str) -> np.ndarray:
        return self.table.columns[column][self.indices]

    def timestamps(self) -> np.ndarray:
        return self.table.timestamps[self.indices]


CsvSource = Union[str, Path, bytes, BinaryIO, io.TextIOBase]


def _open_text(csv_source: CsvSource) -> io.TextIOBase:
    if isinstance(csv_source, (str, Path)):
        return open(csv_source, "r", encoding="utf-8", newline="")
    if isinstance(csv_source, bytes):
        return io.StringIO(csv_source.decode("utf-8"))
    if isinstance(csv_source, io.TextIOBase):
        return csv_source
    return io.TextIOWrapper(csv_source, encoding="utf-8", newline="")


def load_table(csv_source: CsvSource, schema: Schema) -> EventTable:
    """Parse a CSV source against a schema.

    Rows whose timestamp cannot be parsed are dropped (and counted);
    unparseable or empty numerical cells are kept as missing.  Extra CSV
    columns not named by the schema are ignored.
    """
    fh = _open_text(csv_source)
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("CSV source has no header row")
    header = [h.strip() for h in header]
    positions: dict[str, int] = {}
    for name, _ in schema.columns:
        if name not in header:
            raise SchemaError(
                f"schema column {name!r} not found in CSV header {header!r}"
            )
        positions[name] = header.index(name)

    time_col = schema.time_column
    text_cols = schema.entity_columns + schema.categorical_columns
    num_cols = schema.numerical_columns

    times: list[int] = []
    text_data: dict[str, list[str]] = {c: [] for c in text_cols}
    num_data: dict[str, list[float]] = {c: [] for c in num_cols}
    dropped = 0

    for row in reader:
        if not row:
            continue
        ts = parse_timestamp(row[positions[time_col]]) if len(row) > positions[time_col] else None
        if ts is None:
            dropped += 1
            continue
        times.append(ts)
        for c in text_cols:
            pos = positions[c]
            text_data[c].append(row[pos] if pos < len(row) else "")
        for c in num_cols:
            pos = positions[c]
            cell = row[pos].strip() if pos < len(row) else ""
            try:
                num_data[c].append(float(cell))
            except ValueError:
                num_data[c].append(float("nan"))

    if not times:
        raise EmptyTableError(
            f"no parseable rows in CSV source for schema {schema.name!r} ({dropped} dropped)"
        )

    columns: dict[str, np.ndarray] = {}
    for c in text_cols:
        columns[c] = np.array(text_data[c], dtype=object)
    for c in num_cols:
        columns[c] = np.array(num_data[c], dtype=np.float64)

    return EventTable(
        schema=schema,
        timestamps=np.array(times, dtype=np.int64),
        columns=columns,
        loaded_count=len(times),
        dropped_count=dropped,
    )


def entity_candidates(schema: Schema) -> list[Optional[str]]:
    """Root plus every entity/categorical column, in schema order."""
    return [ROOT] + schema.columns_with_role(*ENTITY_LIKE_ROLES)


def slice_window(
    table: EventTable,
    e_star: Optional[str],
    e: str,
    t_st: int,
    t_ed: int,
) -> RowSubset:
    """Rows of entity ``e`` with timestamp in the half-open window [t_st, t_ed).

    For the root choice the entity predicate is vacuous and every row in
    the window is returned.
    """
    if t_st >= t_ed:
        raise WindowError(f"empty window: t_st={t_st} >= t_ed={t_ed}")
    lo = int(np.searchsorted(table.timestamps, t_st, side="left"))
    hi = int(np.searchsorted(table.timestamps, t_ed, side="left"))
    indices = np.arange(lo, hi, dtype=np.int64)
    if e_star is not ROOT:
        mask = table.columns[e_star][lo:hi] == e
        indices = indices[mask.astype(bool)]
    return RowSubset(table=table, indices=indices)


def history_before(
    table: EventTable, e_star: Optional[str], e: str, t_cut: int
) -> RowSubset:
    """Rows of entity ``e`` strictly before ``t_cut`` (feature side of a cutoff)."""
    hi = int(np.searchsorted(table.timestamps, t_cut, side="left"))
    indices = np.arange(0, hi, dtype=np.int64)
    if e_star is not ROOT:
        mask = table.columns[e_star][:hi] == e
        indices = indices[mask.astype(bool)]
    return RowSubset(table=table, indices=indices)
