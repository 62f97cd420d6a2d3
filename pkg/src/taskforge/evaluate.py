"""Annotation scoring, ground-truth ranking, and the simulated-user experiment.

Pairs of tasks are compared win/tie/lose on two metrics (meaningfulness,
usefulness), weighted 0.7/0.3 into a per-comparison score.  Average
scores rank the pool; a rank-driven stochastic user then rates batches,
letting us compare the learned recommendation policy (LR) against
uniform random selection (PR) on how fast the top tasks surface.
"""

from __future__ import annotations

import json
import math
import random
import warnings
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .event_table import ROOT, ColumnRole, Schema
from .recommend import FeatureLayout, RecommendationSession, Seed
from .task_space import (
    ExecutableTask,
    FilterOp,
    enumerate_templates,
    make_task,
)

WEIGHT_MEANINGFULNESS = 0.7
WEIGHT_USEFULNESS = 0.3
_OUTCOME_SCORES = {"a_wins": (3.0, 0.0), "tie": (1.0, 1.0), "b_wins": (0.0, 3.0)}

POLICY_LEARNED = "LR"
POLICY_RANDOM = "PR"


@dataclass(frozen=True)
class Comparison:
    """One annotated pairwise comparison on both metrics."""

    task_a: str
    task_b: str
    meaningfulness: str  # a_wins | tie | b_wins
    usefulness: str

    def __post_init__(self) -> None:
        if self.task_a == self.task_b:
            raise ValueError("a comparison needs two distinct tasks")
        for outcome in (self.meaningfulness, self.usefulness):
            if outcome not in _OUTCOME_SCORES:
                raise ValueError(f"unknown outcome {outcome!r}")


def comparison_score(cmp: Comparison) -> tuple[float, float]:
    """Weighted win/tie/lose points: 0.7 * meaningfulness + 0.3 * usefulness.

    Evaluated as (7*S_m + 3*S_u)/10 so every score is the exact decimal
    (3.0, 2.4, 2.1, ...) rather than an accumulation of float products.
    """
    m_a, m_b = _OUTCOME_SCORES[cmp.meaningfulness]
    u_a, u_b = _OUTCOME_SCORES[cmp.usefulness]
    s_a = (7.0 * m_a + 3.0 * u_a) / 10.0
    s_b = (7.0 * m_b + 3.0 * u_b) / 10.0
    return s_a, s_b


@dataclass(frozen=True)
class GroundTruthRanking:
    """Dense 1..N ranking; meaningless tasks sit at the worst ranks."""

    ordered: tuple[str, ...]
    scores: dict[str, Optional[float]]
    meaningless: frozenset[str]

    @property
    def n(self) -> int:
        return len(self.ordered)

    @property
    def ranks(self) -> dict[str, int]:
        return {task_id: i + 1 for i, task_id in enumerate(self.ordered)}

    @classmethod
    def from_order(
        cls, ordered: Sequence[str], meaningless: Iterable[str] = ()
    ) -> "GroundTruthRanking":
        return cls(
            ordered=tuple(ordered),
            scores={task_id: None for task_id in ordered},
            meaningless=frozenset(meaningless),
        )


def rank_tasks(
    comparisons: Sequence[Comparison],
    meaningless: Iterable[str] = (),
    tasks: Optional[Iterable[str]] = None,
) -> GroundTruthRanking:
    """Rank by descending average comparison score, ties by task_id.

    Meaningless tasks never enter comparisons and are appended at the
    bottom.  Known tasks that were never compared (when ``tasks`` names
    the universe) raise a coverage warning and rank after all compared
    tasks but above the meaningless set.
    """
    meaningless = frozenset(meaningless)
    totals: dict[str, float] = {}
    counts: dict[str, int] = {}
    for cmp in comparisons:
        if cmp.task_a in meaningless or cmp.task_b in meaningless:
            raise ValueError("meaningless tasks cannot appear in comparisons")
        s_a, s_b = comparison_score(cmp)
        for task_id, score in ((cmp.task_a, s_a), (cmp.task_b, s_b)):
            totals[task_id] = totals.get(task_id, 0.0) + score
            counts[task_id] = counts.get(task_id, 0) + 1

    averages = {task_id: totals[task_id] / counts[task_id] for task_id in totals}
    compared = sorted(averages, key=lambda tid: (-averages[tid], tid))

    uncompared: list[str] = []
    if tasks is not None:
        known = set(tasks)
        uncompared = sorted(
            known - set(compared) - meaningless
        )
        if uncompared:
            warnings.warn(
                f"{len(uncompared)} task(s) have no comparisons and are ranked "
                "after all compared tasks",
                stacklevel=2,
            )

    ordered = compared + uncompared + sorted(meaningless)
    scores: dict[str, Optional[float]] = {tid: averages.get(tid) for tid in ordered}
    return GroundTruthRanking(
        ordered=tuple(ordered), scores=scores, meaningless=meaningless
    )


def read_comparisons(path) -> list[Comparison]:
    """JSON-lines of {task_a, task_b, meaningfulness, usefulness}."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            out.append(
                Comparison(
                    task_a=obj["task_a"],
                    task_b=obj["task_b"],
                    meaningfulness=obj["meaningfulness"],
                    usefulness=obj["usefulness"],
                )
            )
    return out


def read_meaningless(path) -> set[str]:
    """One task_id per line (or a JSON array)."""
    text = open(path, "r", encoding="utf-8").read().strip()
    if text.startswith("["):
        return set(json.loads(text))
    return {line.strip() for line in text.splitlines() if line.strip()}


def simulate_user_feedback(rank: int, n: int, rng: random.Random) -> int:
    """Rank-driven rating: accept with probability 1 - rank/n, never for rank >= n/2."""
    if not 1 <= rank <= n:
        raise ValueError(f"rank {rank} outside 1..{n}")
    if rank >= n / 2:
        return 0
    return 1 if rng.random() < 1.0 - rank / n else 0


def significance_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> float:
    """Two-sided Welch t-test p-value on two independent samples."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("need at least 2 observations per sample")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if va == 0.0 and vb == 0.0:
        return 1.0 if a.mean() == b.mean() else 0.0
    se_a, se_b = va / a.size, vb / b.size
    t_stat = (a.mean() - b.mean()) / math.sqrt(se_a + se_b)
    df = (se_a + se_b) ** 2 / (
        (se_a**2 / (a.size - 1)) + (se_b**2 / (b.size - 1))
    )
    return float(2.0 * stats.t.sf(abs(t_stat), df))


@dataclass
class SimulationResult:
    """Cumulative top-gamma discovery curves per policy."""

    gamma: float
    k: int
    iterations: int
    repeats: int
    n_top: int
    curves: dict[str, np.ndarray]  # policy -> (repeats, iterations)
    p_value: Optional[float] = None

    def mean_curve(self, policy: str) -> np.ndarray:
        return self.curves[policy].mean(axis=0)

    def final_counts(self, policy: str) -> np.ndarray:
        return self.curves[policy][:, -1]

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "k": self.k,
            "iterations": self.iterations,
            "repeats": self.repeats,
            "n_top": self.n_top,
            "mean_curves": {p: self.mean_curve(p).tolist() for p in self.curves},
            "final_means": {
                p: float(self.final_counts(p).mean()) for p in self.curves
            },
            "p_value": self.p_value,
        }


def _run_random_policy(
    pool_ids: list[str], top_set: set[str], iterations: int, k: int, rng: random.Random
) -> list[int]:
    order = rng.sample(pool_ids, len(pool_ids))
    curve = []
    found = 0
    for i in range(iterations):
        batch = order[i * k : (i + 1) * k]
        found += sum(1 for tid in batch if tid in top_set)
        curve.append(found)
    return curve


def _run_learned_policy(
    tasks: Sequence[ExecutableTask],
    layout: Optional[FeatureLayout],
    ranks: dict[str, int],
    n: int,
    top_set: set[str],
    iterations: int,
    k: int,
    alpha: float,
    session_seed: Seed,
    user_rng: random.Random,
) -> list[int]:
    session = RecommendationSession(
        tasks, layout=layout, k=k, alpha=alpha, seed=session_seed
    )
    curve = []
    found = 0
    for _ in range(iterations):
        batch = session.recommend_batch()
        found += sum(1 for task in batch if task.task_id in top_set)
        ratings = [
            (task.task_id, simulate_user_feedback(ranks[task.task_id], n, user_rng))
            for task in batch
        ]
        session.record_feedback(ratings)
        curve.append(found)
    return curve


def run_simulation(
    pool: Sequence[ExecutableTask],
    ranking: GroundTruthRanking,
    policies: Sequence[str] = (POLICY_LEARNED, POLICY_RANDOM),
    iterations: int = 10,
    k: int = 10,
    repeats: int = 100,
    gamma: float = 0.10,
    seed: int = 7,
    alpha: float = 1.0,
    layout: Optional[FeatureLayout] = None,
) -> SimulationResult:
    """Compare recommendation policies against the simulated user.

    Each repeat reseeds both the policy and the user.  The p-value is a
    Welch test on final-iteration counts when both policies run.
    """
    n = ranking.n
    n_top = int(gamma * n + 1e-9)
    if n_top < 1:
        raise ValueError("gamma * n must be at least 1")
    if iterations * k > n:
        raise ValueError("iterations * k exceeds the pool size")
    ranks = ranking.ranks
    missing = [t.task_id for t in pool if t.task_id not in ranks]
    if missing:
        raise ValueError(f"{len(missing)} pool task(s) missing from the ranking")
    top_set = {tid for tid, r in ranks.items() if r <= n_top}
    pool_ids = sorted(t.task_id for t in pool)

    curves: dict[str, np.ndarray] = {}
    for policy in policies:
        rows = []
        for repeat in range(repeats):
            user_rng = random.Random(f"{seed}:user:{policy}:{repeat}")
            if policy == POLICY_RANDOM:
                policy_rng = random.Random(f"{seed}:pr:{repeat}")
                rows.append(
                    _run_random_policy(pool_ids, top_set, iterations, k, policy_rng)
                )
            elif policy == POLICY_LEARNED:
                rows.append(
                    _run_learned_policy(
                        pool,
                        layout,
                        ranks,
                        n,
                        top_set,
                        iterations,
                        k,
                        alpha,
                        f"{seed}:lr:{repeat}",
                        user_rng,
                    )
                )
            else:
                raise ValueError(f"unknown policy {policy!r}")
        curves[policy] = np.array(rows, dtype=np.int64)

    result = SimulationResult(
        gamma=gamma,
        k=k,
        iterations=iterations,
        repeats=repeats,
        n_top=n_top,
        curves=curves,
    )
    if POLICY_LEARNED in curves and POLICY_RANDOM in curves and repeats >= 2:
        result.p_value = significance_test(
            result.final_counts(POLICY_LEARNED), result.final_counts(POLICY_RANDOM)
        )
    return result


def planted_pool(
    n_tasks: int = 400, seed: int = 7, good_filter: FilterOp = FilterOp.EQ
) -> tuple[list[ExecutableTask], GroundTruthRanking, FeatureLayout]:
    """Synthetic pool whose ground-truth ranking is driven by one attribute.

    Every task using ``good_filter`` outranks every task that does not;
    ranks within each group are shuffled.  This gives the simulated user
    a learnable signal without any human annotations.
    """
    columns = [("ts", ColumnRole.TIME)]
    columns += [(f"e{i}", ColumnRole.ENTITY) for i in range(1, 3)]
    columns += [(f"c{i}", ColumnRole.CATEGORICAL) for i in range(1, 4)]
    columns += [(f"n{i}", ColumnRole.NUMERICAL) for i in range(1, 5)]
    schema = Schema(name="planted", columns=tuple(columns))

    templates = enumerate_templates(schema, ROOT)
    day = 86_400
    tasks: list[ExecutableTask] = []
    for template in templates[:n_tasks]:
        if template.filter_op in (FilterOp.GREATER, FilterOp.LESS):
            epsilon: object = 0.5
        elif template.filter_op in (FilterOp.EQ, FilterOp.NEQ):
            epsilon = "v0"
        else:
            epsilon = None
        tasks.append(make_task(template, epsilon, day, 0, 20 * day))

    rng = random.Random(f"{seed}:planted")
    good = sorted(t.task_id for t in tasks if t.template.filter_op is good_filter)
    rest = sorted(t.task_id for t in tasks if t.template.filter_op is not good_filter)
    rng.shuffle(good)
    rng.shuffle(rest)
    ranking = GroundTruthRanking.from_order(good + rest)
    return tasks, ranking, FeatureLayout.from_schema(schema)
