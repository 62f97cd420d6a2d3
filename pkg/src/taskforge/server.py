"""HTTP service around the full discovery loop.

Projects are directories of JSON/JSON-lines files under one data root;
everything the API serves is reconstructable from those files, so a
process restart (or a second worker on the same root) resumes sessions
exactly where they stopped.  Feedback is durably appended before it is
acknowledged, and duplicate submissions are absorbed by idempotency key.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.responses import RedirectResponse
from fastapi.staticfiles import StaticFiles

from .baseline import train_and_evaluate
from .describe import describe
from .event_table import (
    EmptyTableError,
    EventTable,
    ROOT,
    Schema,
    SchemaError,
    WindowError,
    load_table,
    parse_duration,
    parse_timestamp,
)
from .operationalize import (
    MIN_TRAIN,
    MIN_VALIDATION,
    TaskDataset,
    build_cutoff_table,
    build_task_pool,
    is_valid,
    materialize,
)
from .recommend import (
    DEFAULT_ALPHA,
    DEFAULT_K,
    FeatureLayout,
    FeedbackError,
    RecommendationSession,
)
from .task_space import ExecutableTask, enumerate_templates

PREVIEW_EXAMPLES = 5


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _append_durable(path: Path, obj: dict) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(obj) + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def _read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        return []
    out = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(json.loads(line))
    return out


class Project:
    """Lazy, disk-backed view of one registered dataset and its task pool."""

    def __init__(self, root: Path):
        self.root = root
        self.meta = json.loads((root / "project.json").read_text(encoding="utf-8"))
        self.schema = Schema.from_dict(self.meta["schema"])
        self.entity = self.meta["entity"]  # None for root
        self._table: Optional[EventTable] = None
        self._tasks: Optional[dict[str, dict]] = None
        self._datasets: dict[str, TaskDataset] = {}
        self._sessions: dict[str, RecommendationSession] = {}
        self._session_locks: dict[str, threading.Lock] = {}
        self._solve_locks: dict[str, threading.Lock] = {}
        self._lock = threading.Lock()

    @property
    def project_id(self) -> str:
        return self.meta["project_id"]

    @property
    def table(self) -> EventTable:
        if self._table is None:
            self._table = load_table(self.root / "data.csv", self.schema)
        return self._table

    @property
    def tasks(self) -> dict[str, dict]:
        """task_id -> persisted task record (valid and invalid alike)."""
        if self._tasks is None:
            self._tasks = {
                rec["task_id"]: rec for rec in _read_jsonl(self.root / "tasks.jsonl")
            }
        return self._tasks

    def valid_task_records(self) -> list[dict]:
        return [rec for rec in self.tasks.values() if rec["valid"]]

    def executable(self, record: dict) -> ExecutableTask:
        # from_export_dict verifies the stored task_id against recomputation
        return ExecutableTask.from_export_dict(
            record, t_base=self.meta["t_base"], t_terminate=self.meta["t_terminate"]
        )

    def dataset(self, task: ExecutableTask) -> TaskDataset:
        if task.task_id not in self._datasets:
            cutoffs = build_cutoff_table(
                self.table,
                self.entity,
                self.meta["window_seconds"],
                self.meta["t_base"],
                self.meta["t_terminate"],
                self.meta["t_star"],
            )
            self._datasets[task.task_id] = materialize(task, self.table, cutoffs)
        return self._datasets[task.task_id]

    # -- sessions ----------------------------------------------------------

    def session_dir(self) -> Path:
        d = self.root / "sessions"
        d.mkdir(exist_ok=True)
        return d

    def session_log(self, session_id: str) -> Path:
        return self.session_dir() / f"{session_id}.jsonl"

    def list_sessions(self) -> list[str]:
        return sorted(p.stem for p in self.session_dir().glob("s*.jsonl"))

    def session_lock(self, session_id: str) -> threading.Lock:
        with self._lock:
            return self._session_locks.setdefault(session_id, threading.Lock())

    def load_session(
        self, session_id: str, k: int, alpha: float, server_seed: int
    ) -> RecommendationSession:
        if session_id in self._sessions:
            return self._sessions[session_id]
        log = self.session_log(session_id)
        if not log.exists():
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        pool = [self.executable(rec) for rec in self.valid_task_records()]
        layout = FeatureLayout.from_schema(self.schema)
        events = [e for e in _read_jsonl(log) if e["type"] in ("batch", "feedback")]
        session = RecommendationSession.replay(
            pool,
            events,
            layout=layout,
            k=k,
            alpha=alpha,
            seed=f"{server_seed}:{self.project_id}:{session_id}",
        )
        self._sessions[session_id] = session
        return session

    def solve_lock(self, task_id: str) -> threading.Lock:
        with self._lock:
            return self._solve_locks.setdefault(task_id, threading.Lock())

    def report_path(self, task_id: str) -> Path:
        d = self.root / "reports"
        d.mkdir(exist_ok=True)
        return d / f"{task_id}.json"


def _task_view(project: Project, record: dict) -> dict:
    view = dict(record)
    report_path = project.report_path(record["task_id"])
    view["report"] = (
        json.loads(report_path.read_text(encoding="utf-8"))
        if report_path.exists()
        else None
    )
    return view


def create_app(
    data_dir: str | Path,
    default_alpha: float = DEFAULT_ALPHA,
    default_k: int = DEFAULT_K,
    seed: int = 7,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    data_root = Path(data_dir)
    (data_root / "projects").mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="taskforge", version="0.1.0")
    app.state.projects = {}
    app.state.solve_runs = 0  # instrumentation for single-flight verification
    app.state.seed = seed
    projects_root = data_root / "projects"
    state_lock = threading.Lock()

    def get_project(project_id: str) -> Project:
        with state_lock:
            if project_id not in app.state.projects:
                root = projects_root / project_id
                if not (root / "project.json").exists():
                    raise HTTPException(
                        status_code=404, detail=f"unknown project {project_id}"
                    )
                app.state.projects[project_id] = Project(root)
            return app.state.projects[project_id]

    @app.post("/projects")
    def create_project(
        data: UploadFile = File(...),
        schema_text: str = Form(..., alias="schema"),
        entity: str = Form(...),
        window: str = Form(...),
        t_base: Optional[str] = Form(None),
        t_terminate: Optional[str] = Form(None),
        t_star: Optional[str] = Form(None),
    ):
        csv_bytes = data.file.read()
        try:
            schema_obj = Schema.from_dict(json.loads(schema_text))
            window_seconds = parse_duration(window)
            e_star = ROOT if entity.lower() in ("root", "phi", "") else entity
            if e_star is not ROOT:
                schema_obj.role_of(e_star)  # raises SchemaError when absent
            table = load_table(csv_bytes, schema_obj)
            bounds = {}
            for name, value in (("t_base", t_base), ("t_terminate", t_terminate), ("t_star", t_star)):
                if value is not None:
                    ts = parse_timestamp(value)
                    if ts is None:
                        raise SchemaError(f"cannot parse {name} timestamp {value!r}")
                    bounds[name] = ts
            cutoffs = build_cutoff_table(
                table,
                e_star,
                window_seconds,
                bounds.get("t_base"),
                bounds.get("t_terminate"),
                bounds.get("t_star"),
            )
        except (SchemaError, EmptyTableError, WindowError, json.JSONDecodeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))

        fingerprint = hashlib.sha1(
            b"|".join(
                [
                    csv_bytes,
                    json.dumps(schema_obj.to_dict(), sort_keys=True).encode(),
                    str(entity).encode(),
                    str(window_seconds).encode(),
                    str(cutoffs.t_base).encode(),
                    str(cutoffs.t_terminate).encode(),
                    str(cutoffs.t_star).encode(),
                ]
            )
        ).hexdigest()[:10]
        project_id = f"p{fingerprint}"
        root = projects_root / project_id
        if (root / "project.json").exists():
            project = get_project(project_id)
            return {
                "project_id": project_id,
                "pool_size": project.meta["pool_size"],
                "reused": True,
            }

        templates = enumerate_templates(schema_obj, e_star)
        pairs, _reports = build_task_pool(
            templates, table, cutoffs, seed=seed, valid_only=False
        )
        records = []
        n_valid = 0
        for task, dataset in pairs:
            valid = is_valid(dataset)
            n_valid += int(valid)
            rec = task.to_export_dict()
            rec["description"] = describe(task)
            rec["t_base"] = task.t_base
            rec["t_terminate"] = task.t_terminate
            rec["train_size"] = len(dataset.train)
            rec["validation_size"] = len(dataset.validation)
            rec["valid"] = valid
            rec["preview"] = [ex.to_dict() for ex in dataset.examples[:PREVIEW_EXAMPLES]]
            records.append(rec)

        root.mkdir(parents=True)
        (root / "data.csv").write_bytes(csv_bytes)
        _atomic_write(
            root / "tasks.jsonl", "".join(json.dumps(r) + "\n" for r in records)
        )
        _atomic_write(
            root / "project.json",
            json.dumps(
                {
                    "project_id": project_id,
                    "schema": schema_obj.to_dict(),
                    "entity": e_star,
                    "window_seconds": window_seconds,
                    "t_base": cutoffs.t_base,
                    "t_terminate": cutoffs.t_terminate,
                    "t_star": cutoffs.t_star,
                    "n_templates": len(templates),
                    "pool_size": n_valid,
                },
                indent=2,
            ),
        )
        return {"project_id": project_id, "pool_size": n_valid, "reused": False}

    @app.get("/projects/{project_id}/tasks")
    def list_tasks(project_id: str, offset: int = 0, limit: int = 50):
        project = get_project(project_id)
        records = project.valid_task_records()
        return {
            "total": len(records),
            "offset": offset,
            "tasks": [
                _task_view(project, rec) for rec in records[offset : offset + limit]
            ],
        }

    @app.post("/projects/{project_id}/sessions")
    def create_session(project_id: str):
        project = get_project(project_id)
        with project.session_lock("__create__"):
            session_id = f"s{len(project.list_sessions()) + 1:04d}"
            project.session_log(session_id).touch()
        return {"session_id": session_id}

    @app.get("/projects/{project_id}/sessions/{session_id}/batch")
    def next_batch(project_id: str, session_id: str, k: int = DEFAULT_K):
        project = get_project(project_id)
        with project.session_lock(session_id):
            session = project.load_session(session_id, k, default_alpha, seed)
            if session.open_batch is None:
                session.k = k
                batch = session.recommend_batch()
                if batch:
                    _append_durable(
                        project.session_log(session_id), session.log_batch_event()
                    )
            batch_ids = session.open_batch or []
            views = [
                _task_view(project, project.tasks[tid]) for tid in batch_ids
            ]
            return {
                "session_id": session_id,
                "iteration": session.iteration + (1 if batch_ids else 0),
                "tasks": views,
                "terminal": not batch_ids,
            }

    @app.post("/projects/{project_id}/sessions/{session_id}/feedback")
    def submit_feedback(project_id: str, session_id: str, payload: dict):
        project = get_project(project_id)
        ratings = payload.get("ratings", [])
        key = payload.get("idempotency_key")
        with project.session_lock(session_id):
            session = project.load_session(session_id, default_k, default_alpha, seed)
            if key is not None:
                for event in _read_jsonl(project.session_log(session_id)):
                    if event["type"] == "feedback" and event.get("idempotency_key") == key:
                        return {
                            "session_id": session_id,
                            "iteration": event["iteration"],
                            "accepted": len(event["ratings"]),
                            "replayed": True,
                        }
            try:
                pairs = [(r["task_id"], int(r["rating"])) for r in ratings]
            except (KeyError, TypeError, ValueError) as exc:
                raise HTTPException(
                    status_code=400, detail=f"malformed ratings payload: {exc}"
                )
            if session.open_batch is None:
                raise HTTPException(status_code=409, detail="no open batch to rate")
            event = {
                "type": "feedback",
                "iteration": session.iteration + 1,
                "ratings": {tid: y for tid, y in pairs},
                "idempotency_key": key,
            }
            try:
                # Validate in-memory first so a bad request leaves no log entry.
                staged = RecommendationSession.replay(
                    list(session.tasks.values()),
                    [{"type": "batch", "iteration": 0, "task_ids": session.open_batch}],
                    layout=session.layout,
                    k=session.k,
                    alpha=session.alpha,
                    seed=session.seed,
                )
                staged.record_feedback(pairs)
            except FeedbackError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            _append_durable(project.session_log(session_id), event)
            session.record_feedback(pairs)
            return {
                "session_id": session_id,
                "iteration": session.iteration,
                "accepted": len(pairs),
                "replayed": False,
            }

    @app.get("/projects/{project_id}/sessions/{session_id}/history")
    def session_history(project_id: str, session_id: str):
        project = get_project(project_id)
        log = project.session_log(session_id)
        if not log.exists():
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        iterations: list[dict] = []
        open_batch: Optional[dict] = None
        for event in _read_jsonl(log):
            if event["type"] == "batch":
                open_batch = {"iteration": event["iteration"], "task_ids": event["task_ids"]}
            elif event["type"] == "feedback" and open_batch is not None:
                iterations.append({**open_batch, "ratings": event["ratings"]})
                open_batch = None
        return {
            "session_id": session_id,
            "iterations": iterations,
            "open_batch": open_batch,
        }

    @app.post("/projects/{project_id}/tasks/{task_id}/solve")
    def solve_task(project_id: str, task_id: str):
        project = get_project(project_id)
        record = project.tasks.get(task_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown task {task_id}")
        if not record["valid"]:
            raise HTTPException(
                status_code=422,
                detail=(
                    f"task {task_id} is invalid: needs at least {MIN_TRAIN} training "
                    f"and {MIN_VALIDATION} validation examples, has "
                    f"{record['train_size']}/{record['validation_size']}"
                ),
            )
        report_path = project.report_path(task_id)
        with project.solve_lock(task_id):
            if not report_path.exists():
                task = project.executable(record)
                dataset = project.dataset(task)
                report = train_and_evaluate(task, dataset, project.table, alpha=default_alpha)
                app.state.solve_runs += 1
                _atomic_write(report_path, json.dumps(report.to_dict(), indent=2))
        return json.loads(report_path.read_text(encoding="utf-8"))

    ui_path = Path(ui_dir) if ui_dir else None
    if ui_path and ui_path.is_dir():
        app.mount("/ui", StaticFiles(directory=ui_path, html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def index() -> RedirectResponse:
            return RedirectResponse(url="/ui/")

    return app
