"""Interactive task recommendation with a self-updating linear meta-model.

Each shown task gets a binary useful/not-useful rating.  Tasks are
featurized as one-hot blocks for their five attributes (entity choice,
filter column, aggregate column, filter op, aggregate op), each block
followed by that attribute value's smoothed goodness — the fraction
(n_good + 1)/(n + 1) of positive ratings among rated tasks sharing the
value.  A ridge regression over this representation scores the unseen
pool and the top-k are proposed next.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .event_table import Schema, entity_candidates
from .task_space import AggOp, ExecutableTask, FilterOp

ATTRIBUTES = ("entity_col", "fil_col", "agg_col", "fil_op", "agg_op")

DEFAULT_ALPHA = 1.0
DEFAULT_K = 10

Seed = Union[int, str]


class FeedbackError(ValueError):
    """Rating referenced a task outside the open batch, or a stale batch."""


class ColdStartError(ValueError):
    """No feedback yet; the caller should fall back to a random batch."""


def task_attribute(task: ExecutableTask, attribute: str) -> Optional[str]:
    t = task.template
    if attribute == "entity_col":
        return t.entity
    if attribute == "fil_col":
        return t.filter_col
    if attribute == "agg_col":
        return t.agg_col
    if attribute == "fil_op":
        return t.filter_op.value
    if attribute == "agg_op":
        return t.agg_op.value
    raise KeyError(attribute)


def _slot_sort_key(value: Optional[str]) -> tuple[int, str]:
    return (0, "") if value is None else (1, value)


@dataclass(frozen=True)
class FeatureLayout:
    """One-hot slot assignments for the five task attributes.

    Column slots include a None slot so column-less operations get their
    own position.  Feature dimension is the total slot count plus one
    goodness scalar per attribute.
    """

    entity_slots: tuple[Optional[str], ...]
    column_slots: tuple[Optional[str], ...]
    fil_op_slots: tuple[str, ...] = tuple(op.value for op in FilterOp)
    agg_op_slots: tuple[str, ...] = tuple(op.value for op in AggOp)

    @classmethod
    def from_schema(cls, schema: Schema) -> "FeatureLayout":
        return cls(
            entity_slots=tuple(entity_candidates(schema)),
            column_slots=(None,) + tuple(c for c, _ in schema.columns),
        )

    @classmethod
    def from_tasks(cls, tasks: Iterable[ExecutableTask]) -> "FeatureLayout":
        entities: set = set()
        columns: set = set()
        for task in tasks:
            entities.add(task.template.entity)
            columns.update({task.template.filter_col, task.template.agg_col})
        columns.discard(None)
        return cls(
            entity_slots=tuple(sorted(entities, key=_slot_sort_key)),
            column_slots=(None,) + tuple(sorted(columns)),
        )

    def _blocks(self) -> list[tuple[str, tuple]]:
        return [
            ("entity_col", self.entity_slots),
            ("fil_col", self.column_slots),
            ("agg_col", self.column_slots),
            ("fil_op", self.fil_op_slots),
            ("agg_op", self.agg_op_slots),
        ]

    @property
    def dimension(self) -> int:
        return sum(len(slots) + 1 for _, slots in self._blocks())

    def featurize(
        self, task: ExecutableTask, goodness: dict[str, float]
    ) -> np.ndarray:
        """goodness maps attribute name -> smoothed goodness of this task's value."""
        parts: list[np.ndarray] = []
        for attribute, slots in self._blocks():
            block = np.zeros(len(slots) + 1)
            value = task_attribute(task, attribute)
            block[slots.index(value)] = 1.0
            block[-1] = goodness[attribute]
            parts.append(block)
        return np.concatenate(parts)


@dataclass
class MetaModel:
    weights: np.ndarray
    alpha: float

    def score(self, features: np.ndarray) -> float:
        return float(features @ self.weights)


def fit_meta_model(
    features: Sequence[np.ndarray], ratings: Sequence[int], alpha: float
) -> MetaModel:
    """Closed-form ridge fit: (X'X + alpha*I) theta = X'y."""
    if len(features) == 0:
        raise ColdStartError("no feedback to fit on")
    if len(features) != len(ratings):
        raise ValueError("features and ratings length mismatch")
    X = np.array(features, dtype=np.float64)
    y = np.array(ratings, dtype=np.float64)
    gram = X.T @ X + alpha * np.eye(X.shape[1])
    theta = np.linalg.solve(gram, X.T @ y)
    return MetaModel(weights=theta, alpha=alpha)


@dataclass(frozen=True)
class FeedbackRecord:
    task_id: str
    rating: int
    iteration: int
    timestamp: float


class RecommendationSession:
    """One analyst's iterative walk over a fixed candidate pool.

    Batches and feedback strictly alternate; a task is shown at most once
    and rated at most once.  Batch generation is a pure function of
    (seed, iteration, feedback so far), so a session rebuilt by replaying
    its log continues identically.
    """

    def __init__(
        self,
        tasks: Sequence[ExecutableTask],
        layout: Optional[FeatureLayout] = None,
        k: int = DEFAULT_K,
        alpha: float = DEFAULT_ALPHA,
        seed: Seed = 0,
    ):
        self.tasks = {t.task_id: t for t in tasks}
        if len(self.tasks) != len(tasks):
            raise ValueError("duplicate task_ids in candidate pool")
        self.layout = layout if layout is not None else FeatureLayout.from_tasks(tasks)
        self.k = k
        self.alpha = alpha
        self.seed = seed
        self.iteration = 0  # completed feedback rounds
        self.batches: list[list[str]] = []
        self.open_batch: Optional[list[str]] = None
        self.feedback: dict[str, FeedbackRecord] = {}

    # -- goodness --------------------------------------------------------

    def _goodness_tables(self) -> dict[str, dict[Optional[str], float]]:
        counts: dict[str, dict[Optional[str], list[int]]] = {a: {} for a in ATTRIBUTES}
        for record in self.feedback.values():
            task = self.tasks[record.task_id]
            for attribute in ATTRIBUTES:
                value = task_attribute(task, attribute)
                pair = counts[attribute].setdefault(value, [0, 0])
                pair[0] += 1
                pair[1] += record.rating
        return {
            attribute: {
                value: (n_good + 1) / (n + 1) for value, (n, n_good) in table.items()
            }
            for attribute, table in counts.items()
        }

    def attribute_goodness(self, attribute: str, value: Optional[str]) -> float:
        if attribute not in ATTRIBUTES:
            raise KeyError(attribute)
        return self._goodness_tables()[attribute].get(value, 1.0)

    def featurize(self, task: ExecutableTask) -> np.ndarray:
        tables = self._goodness_tables()
        goodness = {
            attribute: tables[attribute].get(task_attribute(task, attribute), 1.0)
            for attribute in ATTRIBUTES
        }
        return self.layout.featurize(task, goodness)

    def _featurize_all(self, task_ids: Sequence[str]) -> list[np.ndarray]:
        tables = self._goodness_tables()
        out = []
        for task_id in task_ids:
            task = self.tasks[task_id]
            goodness = {
                attribute: tables[attribute].get(task_attribute(task, attribute), 1.0)
                for attribute in ATTRIBUTES
            }
            out.append(self.layout.featurize(task, goodness))
        return out

    # -- batch generation --------------------------------------------------

    @property
    def shown_ids(self) -> set[str]:
        seen = {tid for batch in self.batches for tid in batch}
        if self.open_batch:
            seen.update(self.open_batch)
        return seen

    def unseen_ids(self) -> list[str]:
        seen = self.shown_ids
        return sorted(tid for tid in self.tasks if tid not in seen)

    def recommend_batch(self) -> list[ExecutableTask]:
        """Next k tasks: seeded-random on cold start, else top-k by meta-model."""
        if self.open_batch is not None:
            raise FeedbackError("previous batch still awaits feedback")
        unseen = self.unseen_ids()
        if not unseen:
            return []
        if not self.feedback:
            rng = random.Random(f"{self.seed}:{self.iteration + 1}")
            batch = rng.sample(unseen, min(self.k, len(unseen)))
        else:
            rated_ids = sorted(self.feedback)
            model = fit_meta_model(
                self._featurize_all(rated_ids),
                [self.feedback[tid].rating for tid in rated_ids],
                self.alpha,
            )
            scored = [
                (model.score(features), tid)
                for tid, features in zip(unseen, self._featurize_all(unseen))
            ]
            scored.sort(key=lambda pair: (-pair[0], pair[1]))
            batch = [tid for _, tid in scored[: self.k]]
        self.open_batch = batch
        return [self.tasks[tid] for tid in batch]

    def record_feedback(self, ratings: Sequence[tuple[str, int]]) -> None:
        """Close the open batch; unrated tasks in it default to 0."""
        if self.open_batch is None:
            raise FeedbackError("no open batch to rate")
        explicit: dict[str, int] = {}
        for task_id, rating in ratings:
            if task_id not in self.open_batch:
                raise FeedbackError(f"task {task_id!r} is not in the open batch")
            if task_id in explicit:
                raise FeedbackError(f"duplicate rating for task {task_id!r}")
            if rating not in (0, 1):
                raise FeedbackError(f"rating must be 0 or 1, got {rating!r}")
            explicit[task_id] = rating
        self.iteration += 1
        now = time.time()
        for task_id in self.open_batch:
            self.feedback[task_id] = FeedbackRecord(
                task_id=task_id,
                rating=explicit.get(task_id, 0),
                iteration=self.iteration,
                timestamp=now,
            )
        self.batches.append(self.open_batch)
        self.open_batch = None

    # -- persistence -------------------------------------------------------

    def log_batch_event(self) -> dict:
        if self.open_batch is None:
            raise FeedbackError("no open batch to log")
        return {
            "type": "batch",
            "iteration": self.iteration + 1,
            "task_ids": list(self.open_batch),
        }

    @staticmethod
    def feedback_event(ratings: Sequence[tuple[str, int]], iteration: int) -> dict:
        return {
            "type": "feedback",
            "iteration": iteration,
            "ratings": {task_id: rating for task_id, rating in ratings},
        }

    @classmethod
    def replay(
        cls,
        tasks: Sequence[ExecutableTask],
        events: Iterable[dict],
        layout: Optional[FeatureLayout] = None,
        k: int = DEFAULT_K,
        alpha: float = DEFAULT_ALPHA,
        seed: Seed = 0,
    ) -> "RecommendationSession":
        """Rebuild a session from its append-only event log."""
        session = cls(tasks, layout=layout, k=k, alpha=alpha, seed=seed)
        for event in events:
            if event["type"] == "batch":
                if session.open_batch is not None:
                    raise FeedbackError("log has two batches without feedback")
                session.open_batch = list(event["task_ids"])
            elif event["type"] == "feedback":
                session.record_feedback(list(event["ratings"].items()))
        return session


def write_session_log(path, events: Iterable[dict]) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for event in events:
            fh.write(json.dumps(event) + "\n")


def read_session_log(path) -> list[dict]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
