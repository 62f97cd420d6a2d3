"""Prediction-task discovery for event-driven time-series tables.

Pipeline: load a typed event table, enumerate the filter/aggregate task
space, materialize leakage-free labeled examples at cutoff times, solve
tasks with a native linear baseline, and interactively recommend tasks
with a self-updating ridge meta-model.
"""

from .event_table import (
    ColumnRole,
    EmptyTableError,
    EventTable,
    ROOT,
    ROOT_VALUE,
    RowSubset,
    Schema,
    SchemaError,
    WindowError,
    entity_candidates,
    load_table,
    slice_window,
)
from .task_space import (
    AggOp,
    ExecutableTask,
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
from .operationalize import (
    CutoffTable,
    LabeledExample,
    MIN_TRAIN,
    MIN_VALIDATION,
    TaskDataset,
    build_cutoff_table,
    build_task_pool,
    instantiate_tasks,
    is_valid,
    materialize,
    propose_hyperparameters,
)
from .describe import describe, format_duration
from .baseline import ModelReport, build_features, train_and_evaluate
from .recommend import (
    ColdStartError,
    FeatureLayout,
    FeedbackError,
    MetaModel,
    RecommendationSession,
    fit_meta_model,
)
from .evaluate import (
    Comparison,
    GroundTruthRanking,
    SimulationResult,
    comparison_score,
    planted_pool,
    rank_tasks,
    run_simulation,
    significance_test,
    simulate_user_feedback,
)

__version__ = "0.1.0"
