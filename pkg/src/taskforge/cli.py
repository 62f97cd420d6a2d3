"""Command-line entry points.

Subcommands mirror the pipeline stages: load/validate a table, enumerate
the task space, materialize labeled datasets, solve tasks, run an
interactive recommendation session, replay the simulated-user experiment,
and serve the HTTP API.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .baseline import metric_histogram, train_and_evaluate
from .describe import describe
from .event_table import (
    ROOT,
    Schema,
    load_table,
    parse_duration,
    parse_timestamp,
)
from .evaluate import (
    POLICY_LEARNED,
    POLICY_RANDOM,
    GroundTruthRanking,
    planted_pool,
    rank_tasks,
    read_comparisons,
    read_meaningless,
    run_simulation,
)
from .operationalize import build_cutoff_table, build_task_pool
from .recommend import (
    FeatureLayout,
    RecommendationSession,
    read_session_log,
    write_session_log,
)
from .task_space import (
    ExecutableTask,
    classification_count_bound,
    enumerate_templates,
    template_count_bound,
)


def _load_schema(path: str) -> Schema:
    return Schema.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _entity_arg(value: str):
    return ROOT if value.lower() in ("root", "phi") else value


def _resolve_bounds(args) -> dict:
    out = {}
    for name in ("t_base", "t_terminate", "t_star"):
        raw = getattr(args, name, None)
        if raw is not None:
            ts = parse_timestamp(raw)
            if ts is None:
                raise SystemExit(f"cannot parse --{name.replace('_', '-')} {raw!r}")
            out[name] = ts
    return out


def cmd_load(args) -> int:
    schema = _load_schema(args.schema)
    table = load_table(args.data, schema)
    summary = table.summary()
    print(f"loaded {summary['loaded']} rows, dropped {summary['dropped']}")
    if args.validate:
        print(f"time range: {summary['time_range'][0]} .. {summary['time_range'][1]}")
        for name, info in summary["columns"].items():
            if info["role"] == "numerical":
                print(
                    f"  {name} ({info['role']}): min={info['min']} max={info['max']} "
                    f"missing={info['missing']}"
                )
            else:
                print(f"  {name} ({info['role']}): cardinality={info['cardinality']}")
    return 0


def cmd_enumerate(args) -> int:
    schema = _load_schema(args.schema)
    e_star = _entity_arg(args.entity)
    if args.count_only:
        total = template_count_bound(schema, e_star)
        n_cls = classification_count_bound(schema, e_star)
        print(
            json.dumps(
                {
                    "entity": e_star,
                    "templates": total,
                    "regression": total - n_cls,
                    "classification": n_cls,
                }
            )
        )
        return 0
    for template in enumerate_templates(schema, e_star):
        print(
            json.dumps(
                {
                    "entity": template.entity,
                    "filter_op": template.filter_op.value,
                    "filter_col": template.filter_col,
                    "agg_op": template.agg_op.value,
                    "agg_col": template.agg_col,
                    "description": describe(template),
                }
            )
        )
    return 0


def cmd_materialize(args) -> int:
    schema = _load_schema(args.schema)
    e_star = _entity_arg(args.entity)
    table = load_table(args.data, schema)
    window = parse_duration(args.window)
    bounds = _resolve_bounds(args)
    cutoffs = build_cutoff_table(
        table,
        e_star,
        window,
        bounds.get("t_base"),
        bounds.get("t_terminate"),
        bounds.get("t_star"),
    )
    templates = enumerate_templates(schema, e_star)
    pool, reports = build_task_pool(templates, table, cutoffs, seed=args.seed)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks_path = out_dir / "tasks.jsonl"
    with open(tasks_path, "w", encoding="utf-8") as fh:
        for task, dataset in pool:
            record = task.to_export_dict()
            record["description"] = describe(task)
            record["t_base"] = task.t_base
            record["t_terminate"] = task.t_terminate
            fh.write(json.dumps(record) + "\n")
            with open(out_dir / f"{task.task_id}.jsonl", "w", encoding="utf-8") as dfh:
                for example in dataset.examples:
                    dfh.write(json.dumps(example.to_dict()) + "\n")
    for report in reports:
        t = report.template
        line = {
            "template": f"{t.filter_op.value}({t.filter_col})+{t.agg_op.value}({t.agg_col})",
            "n_tasks": report.n_tasks,
            "n_valid": report.n_valid,
        }
        print(json.dumps(line))
    print(
        f"materialized {len(pool)} valid tasks from {len(templates)} templates "
        f"into {out_dir}",
        file=sys.stderr,
    )
    return 0


def _read_pool(path: str, t_base: int = 0) -> list[ExecutableTask]:
    tasks = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                tasks.append(ExecutableTask.from_export_dict(json.loads(line), t_base=t_base))
    return tasks


def cmd_solve(args) -> int:
    schema = _load_schema(args.schema)
    e_star = _entity_arg(args.entity)
    table = load_table(args.data, schema)
    window = parse_duration(args.window)
    bounds = _resolve_bounds(args)
    cutoffs = build_cutoff_table(
        table,
        e_star,
        window,
        bounds.get("t_base"),
        bounds.get("t_terminate"),
        bounds.get("t_star"),
    )
    templates = enumerate_templates(schema, e_star)
    pool, _ = build_task_pool(templates, table, cutoffs, seed=args.seed)
    if args.task != "all":
        pool = [(t, d) for t, d in pool if t.task_id == args.task]
        if not pool:
            raise SystemExit(f"task {args.task!r} not found among valid tasks")
    reports = []
    with open(args.out, "w", encoding="utf-8") as fh:
        for task, dataset in pool:
            report = train_and_evaluate(task, dataset, table, alpha=args.alpha)
            reports.append(report)
            fh.write(json.dumps(report.to_dict()) + "\n")
    print(f"solved {len(reports)} tasks -> {args.out}", file=sys.stderr)
    if args.histogram:
        print(json.dumps(metric_histogram(reports), indent=2))
    return 0


def cmd_recommend(args) -> int:
    tasks = _read_pool(args.pool)
    layout = (
        FeatureLayout.from_schema(_load_schema(args.schema))
        if args.schema
        else FeatureLayout.from_tasks(tasks)
    )
    session_path = Path(args.session)
    events = read_session_log(session_path) if session_path.exists() else []
    session = RecommendationSession.replay(
        tasks, events, layout=layout, k=args.k, alpha=args.alpha, seed=args.seed
    )
    for _ in range(args.iterations):
        if session.open_batch is None:
            batch = session.recommend_batch()
            if not batch:
                print("pool exhausted", file=sys.stderr)
                return 0
            write_session_log(session_path, [session.log_batch_event()])
        batch_ids = list(session.open_batch)
        print(f"--- iteration {session.iteration + 1} ---")
        for i, tid in enumerate(batch_ids, 1):
            print(f"[{i}] {describe(session.tasks[tid])}  ({tid})")
        line = input("ratings (space-separated 0/1 per task, blank = all 0): ").strip()
        values = line.split() if line else []
        if len(values) > len(batch_ids):
            raise SystemExit("more ratings than tasks in the batch")
        ratings = [(tid, int(v)) for tid, v in zip(batch_ids, values)]
        session.record_feedback(ratings)
        write_session_log(
            session_path,
            [RecommendationSession.feedback_event(ratings, session.iteration)],
        )
    return 0


def cmd_simulate(args) -> int:
    if args.ranking == "synthetic:planted":
        tasks, ranking, layout = planted_pool(args.pool_size, seed=args.seed)
    else:
        tasks = _read_pool(args.pool)
        layout = (
            FeatureLayout.from_schema(_load_schema(args.schema))
            if args.schema
            else FeatureLayout.from_tasks(tasks)
        )
        if args.ranking == "annotations":
            if not args.comparisons:
                raise SystemExit("--ranking annotations requires --comparisons")
            meaningless = (
                read_meaningless(args.meaningless) if args.meaningless else set()
            )
            ranking = rank_tasks(
                read_comparisons(args.comparisons),
                meaningless,
                tasks=[t.task_id for t in tasks],
            )
        else:
            obj = json.loads(Path(args.ranking).read_text(encoding="utf-8"))
            ranking = GroundTruthRanking.from_order(
                obj["ordered"], obj.get("meaningless", [])
            )
    result = run_simulation(
        tasks,
        ranking,
        policies=(POLICY_LEARNED, POLICY_RANDOM),
        iterations=args.iterations,
        k=args.k,
        repeats=args.repeats,
        gamma=args.gamma,
        seed=args.seed,
        alpha=args.alpha,
        layout=layout,
    )
    Path(args.out).write_text(json.dumps(result.to_dict(), indent=2), encoding="utf-8")
    if args.csv:
        lines = ["iteration," + ",".join(result.curves)]
        for i in range(args.iterations):
            row = [str(i + 1)] + [
                f"{result.mean_curve(p)[i]:.3f}" for p in result.curves
            ]
            lines.append(",".join(row))
        Path(args.csv).write_text("\n".join(lines) + "\n", encoding="utf-8")
    summary = result.to_dict()
    print(
        f"LR final mean: {summary['final_means'].get(POLICY_LEARNED):.2f}  "
        f"PR final mean: {summary['final_means'].get(POLICY_RANDOM):.2f}  "
        f"p-value: {summary['p_value']:.2e}"
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    ui_dir = args.ui_dir or os.environ.get("TASKFORGE_UI_DIR")
    if ui_dir is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui_dir = str(bundled) if bundled.is_dir() else None
    app = create_app(
        args.data_dir,
        default_alpha=args.alpha,
        default_k=args.k,
        seed=args.seed,
        ui_dir=ui_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taskforge",
        description="Enumerate, label, solve and recommend prediction tasks "
        "on event-driven time-series tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("load", help="load a CSV and print row/column diagnostics")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--validate", action="store_true")
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("enumerate", help="list or count task templates")
    p.add_argument("--schema", required=True)
    p.add_argument("--entity", required=True, help="column name or 'root'")
    p.add_argument("--count-only", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("materialize", help="build labeled datasets for valid tasks")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--entity", required=True)
    p.add_argument("--window", required=True, help="prediction window, e.g. 7d")
    p.add_argument("--t-base", dest="t_base")
    p.add_argument("--t-terminate", dest="t_terminate")
    p.add_argument("--t-star", dest="t_star")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_materialize)

    p = sub.add_parser("solve", help="train and score the baseline on tasks")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--entity", required=True)
    p.add_argument("--window", required=True)
    p.add_argument("--t-base", dest="t_base")
    p.add_argument("--t-terminate", dest="t_terminate")
    p.add_argument("--t-star", dest="t_star")
    p.add_argument("--task", default="all", help="task_id or 'all'")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--histogram", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("recommend", help="interactive terminal recommendation loop")
    p.add_argument("--pool", required=True, help="tasks.jsonl from materialize")
    p.add_argument("--schema", help="optional schema for the feature layout")
    p.add_argument("--session", required=True, help="session log file (JSON lines)")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--iterations", type=int, default=1)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("simulate", help="simulated-user policy comparison")
    p.add_argument("--pool", help="tasks.jsonl (unused for synthetic rankings)")
    p.add_argument("--schema")
    p.add_argument(
        "--ranking",
        required=True,
        help="ranking JSON, 'synthetic:planted', or 'annotations' (with --comparisons)",
    )
    p.add_argument("--comparisons", help="JSON-lines of pairwise comparisons")
    p.add_argument("--meaningless", help="file of task_ids marked meaningless")
    p.add_argument("--pool-size", type=int, default=400)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--gamma", type=float, default=0.10)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="run the HTTP API (and web UI when built)")
    p.add_argument("--data-dir", default=os.environ.get("TASKFORGE_DATA_DIR", "./taskforge-data"))
    p.add_argument("--host", default=os.environ.get("TASKFORGE_HOST", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(os.environ.get("TASKFORGE_PORT", "8321")))
    p.add_argument("--k", type=int, default=int(os.environ.get("TASKFORGE_K", "10")))
    p.add_argument("--alpha", type=float, default=float(os.environ.get("TASKFORGE_ALPHA", "1.0")))
    p.add_argument("--seed", type=int, default=int(os.environ.get("TASKFORGE_SEED", "7")))
    p.add_argument("--ui-dir")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
