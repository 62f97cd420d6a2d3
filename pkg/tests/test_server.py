"""API contract: create -> batch -> feedback -> solve, durability, recovery."""

from __future__ import annotations

import json
import threading

import pytest
from fastapi.testclient import TestClient

from taskforge.server import create_app

SCHEMA = {
    "name": "flight",
    "time": "ts",
    "entity": ["flight_number", "airline"],
    "categorical": ["is_delayed"],
    "numerical": [],
}


@pytest.fixture
def client(tmp_path, flight_csv):
    app = create_app(tmp_path / "data", seed=7)
    with TestClient(app) as c:
        c.app = app
        yield c


def create_project(client, flight_csv, entity="airline", window="2d"):
    response = client.post(
        "/projects",
        files={"data": ("flight.csv", flight_csv, "text/csv")},
        data={"schema": json.dumps(SCHEMA), "entity": entity, "window": window},
    )
    assert response.status_code == 200, response.text
    return response.json()


def test_create_project_returns_pool(client, flight_csv):
    body = create_project(client, flight_csv)
    assert body["pool_size"] > 0
    assert body["project_id"].startswith("p")
    assert body["reused"] is False


def test_create_project_is_idempotent(client, flight_csv):
    first = create_project(client, flight_csv)
    second = create_project(client, flight_csv)
    assert second["project_id"] == first["project_id"]
    assert second["pool_size"] == first["pool_size"]
    assert second["reused"] is True


def test_invalid_schema_is_4xx(client, flight_csv):
    response = client.post(
        "/projects",
        files={"data": ("flight.csv", flight_csv, "text/csv")},
        data={"schema": json.dumps({"name": "x", "time": "nope"}), "entity": "root",
              "window": "1d"},
    )
    assert response.status_code == 400
    assert "nope" in response.json()["detail"]


def test_unknown_entity_is_4xx(client, flight_csv):
    response = client.post(
        "/projects",
        files={"data": ("flight.csv", flight_csv, "text/csv")},
        data={"schema": json.dumps(SCHEMA), "entity": "bogus", "window": "1d"},
    )
    assert response.status_code == 400


def test_task_listing_pagination_and_fields(client, flight_csv):
    body = create_project(client, flight_csv)
    pid = body["project_id"]
    listing = client.get(f"/projects/{pid}/tasks", params={"offset": 0, "limit": 5}).json()
    assert listing["total"] == body["pool_size"]
    assert len(listing["tasks"]) == 5
    view = listing["tasks"][0]
    for key in ("task_id", "description", "kind", "train_size", "validation_size",
                "preview", "valid", "window_seconds"):
        assert key in view
    assert view["valid"] is True
    assert len(view["preview"]) <= 5
    assert {"entity", "t_st", "t_ed", "label"} <= set(view["preview"][0])


def test_batch_feedback_loop(client, flight_csv):
    pid = create_project(client, flight_csv)["project_id"]
    sid = client.post(f"/projects/{pid}/sessions").json()["session_id"]

    batch = client.get(f"/projects/{pid}/sessions/{sid}/batch", params={"k": 5}).json()
    assert batch["iteration"] == 1
    assert len(batch["tasks"]) == 5
    assert batch["terminal"] is False

    # refetch without feedback returns the same open batch
    again = client.get(f"/projects/{pid}/sessions/{sid}/batch", params={"k": 5}).json()
    assert [t["task_id"] for t in again["tasks"]] == [t["task_id"] for t in batch["tasks"]]

    ratings = [{"task_id": t["task_id"], "rating": 1} for t in batch["tasks"][:2]]
    ack = client.post(
        f"/projects/{pid}/sessions/{sid}/feedback",
        json={"ratings": ratings, "idempotency_key": "k1"},
    ).json()
    assert ack["iteration"] == 1
    assert ack["replayed"] is False

    second = client.get(f"/projects/{pid}/sessions/{sid}/batch", params={"k": 5}).json()
    assert second["iteration"] == 2
    first_ids = {t["task_id"] for t in batch["tasks"]}
    assert not first_ids & {t["task_id"] for t in second["tasks"]}

    history = client.get(f"/projects/{pid}/sessions/{sid}/history").json()
    assert len(history["iterations"]) == 1
    assert history["iterations"][0]["ratings"] == {r["task_id"]: 1 for r in ratings}
    assert history["open_batch"]["task_ids"] == [t["task_id"] for t in second["tasks"]]


def test_feedback_replay_is_idempotent(client, flight_csv):
    pid = create_project(client, flight_csv)["project_id"]
    sid = client.post(f"/projects/{pid}/sessions").json()["session_id"]
    batch = client.get(f"/projects/{pid}/sessions/{sid}/batch").json()
    payload = {
        "ratings": [{"task_id": batch["tasks"][0]["task_id"], "rating": 1}],
        "idempotency_key": "dup-1",
    }
    first = client.post(f"/projects/{pid}/sessions/{sid}/feedback", json=payload).json()
    second = client.post(f"/projects/{pid}/sessions/{sid}/feedback", json=payload).json()
    assert second["replayed"] is True
    assert second["iteration"] == first["iteration"]
    history = client.get(f"/projects/{pid}/sessions/{sid}/history").json()
    assert len(history["iterations"]) == 1


def test_feedback_on_stale_or_unknown_task_conflicts(client, flight_csv):
    pid = create_project(client, flight_csv)["project_id"]
    sid = client.post(f"/projects/{pid}/sessions").json()["session_id"]
    client.get(f"/projects/{pid}/sessions/{sid}/batch").json()
    response = client.post(
        f"/projects/{pid}/sessions/{sid}/feedback",
        json={"ratings": [{"task_id": "tnope", "rating": 1}], "idempotency_key": "x"},
    )
    assert response.status_code == 409
    # '<no batch>' case: close the batch, then rate an old task
    batch = client.get(f"/projects/{pid}/sessions/{sid}/batch").json()
    client.post(
        f"/projects/{pid}/sessions/{sid}/feedback",
        json={"ratings": [], "idempotency_key": "y"},
    )
    response = client.post(
        f"/projects/{pid}/sessions/{sid}/feedback",
        json={
            "ratings": [{"task_id": batch["tasks"][0]["task_id"], "rating": 1}],
            "idempotency_key": "z",
        },
    )
    assert response.status_code == 409


def test_solve_caches_and_reports(client, flight_csv):
    pid = create_project(client, flight_csv)["project_id"]
    listing = client.get(f"/projects/{pid}/tasks", params={"limit": 1}).json()
    tid = listing["tasks"][0]["task_id"]
    first = client.post(f"/projects/{pid}/tasks/{tid}/solve")
    assert first.status_code == 200
    report = first.json()
    assert report["task_id"] == tid
    assert report["metric_name"] in ("r2", "accuracy")
    runs_after_first = client.app.state.solve_runs
    second = client.post(f"/projects/{pid}/tasks/{tid}/solve")
    assert second.json() == report
    assert client.app.state.solve_runs == runs_after_first
    # report now embedded in task views
    view = client.get(f"/projects/{pid}/tasks", params={"limit": 1}).json()["tasks"][0]
    assert view["report"] == report


def test_solve_unknown_task_404_and_invalid_422(client, flight_csv, tmp_path):
    pid = create_project(client, flight_csv)["project_id"]
    assert client.post(f"/projects/{pid}/tasks/tmissing/solve").status_code == 404
    # find an invalid task straight from the store
    tasks_file = (
        client.app.state.projects[pid].root / "tasks.jsonl"
        if pid in client.app.state.projects
        else None
    )
    records = [json.loads(l) for l in tasks_file.read_text().splitlines()]
    invalid = [r for r in records if not r["valid"]]
    if invalid:
        response = client.post(f"/projects/{pid}/tasks/{invalid[0]['task_id']}/solve")
        assert response.status_code == 422
        assert "10" in response.json()["detail"] and "5" in response.json()["detail"]


def test_concurrent_solves_single_flight(client, flight_csv):
    pid = create_project(client, flight_csv)["project_id"]
    tid = client.get(f"/projects/{pid}/tasks", params={"limit": 1}).json()["tasks"][0]["task_id"]
    before = client.app.state.solve_runs
    results = []

    def solve():
        results.append(client.post(f"/projects/{pid}/tasks/{tid}/solve").json())

    threads = [threading.Thread(target=solve) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert client.app.state.solve_runs == before + 1
    assert all(r == results[0] for r in results)


def test_create_is_idempotent_across_restarts(tmp_path, flight_csv):
    data_dir = tmp_path / "data"
    with TestClient(create_app(data_dir, seed=3)) as c1:
        first = create_project(c1, flight_csv)
    with TestClient(create_app(data_dir, seed=3)) as c2:
        second = create_project(c2, flight_csv)
    assert second["project_id"] == first["project_id"]
    assert second["reused"] is True
    assert second["pool_size"] == first["pool_size"]


def test_restart_recovers_sessions(tmp_path, flight_csv):
    data_dir = tmp_path / "data"
    app1 = create_app(data_dir, seed=13)
    with TestClient(app1) as c1:
        pid = create_project(c1, flight_csv)["project_id"]
        sid = c1.post(f"/projects/{pid}/sessions").json()["session_id"]
        batch1 = c1.get(f"/projects/{pid}/sessions/{sid}/batch").json()
        c1.post(
            f"/projects/{pid}/sessions/{sid}/feedback",
            json={
                "ratings": [{"task_id": batch1["tasks"][0]["task_id"], "rating": 1}],
                "idempotency_key": "r1",
            },
        )
        batch2_live = c1.get(f"/projects/{pid}/sessions/{sid}/batch").json()

    # same directory, fresh process state
    app2 = create_app(data_dir, seed=13)
    with TestClient(app2) as c2:
        batch2_replayed = c2.get(f"/projects/{pid}/sessions/{sid}/batch").json()
        assert [t["task_id"] for t in batch2_replayed["tasks"]] == [
            t["task_id"] for t in batch2_live["tasks"]
        ]
        history = c2.get(f"/projects/{pid}/sessions/{sid}/history").json()
        assert len(history["iterations"]) == 1


def test_full_loop_deterministic_across_fresh_stores(tmp_path, flight_csv):
    def run(path):
        app = create_app(path, seed=21)
        with TestClient(app) as c:
            pid = create_project(c, flight_csv)["project_id"]
            sid = c.post(f"/projects/{pid}/sessions").json()["session_id"]
            out = []
            for i in range(3):
                batch = c.get(f"/projects/{pid}/sessions/{sid}/batch").json()
                ids = [t["task_id"] for t in batch["tasks"]]
                out.append(ids)
                c.post(
                    f"/projects/{pid}/sessions/{sid}/feedback",
                    json={
                        "ratings": [
                            {"task_id": tid, "rating": 1 if j % 2 == 0 else 0}
                            for j, tid in enumerate(ids)
                        ],
                        "idempotency_key": f"it{i}",
                    },
                )
            return pid, out

    pid_a, batches_a = run(tmp_path / "a")
    pid_b, batches_b = run(tmp_path / "b")
    assert pid_a == pid_b
    assert batches_a == batches_b


def test_unknown_project_404(client):
    assert client.get("/projects/pnope/tasks").status_code == 404
    assert client.post("/projects/pnope/sessions").status_code == 404


def test_ui_mounted_when_dist_exists(tmp_path):
    ui = tmp_path / "dist"
    ui.mkdir()
    (ui / "index.html").write_text("<html><title>taskforge</title></html>")
    app = create_app(tmp_path / "data", ui_dir=ui)
    with TestClient(app) as c:
        root = c.get("/", follow_redirects=False)
        assert root.status_code in (302, 307)
        assert root.headers["location"] == "/ui/"
        page = c.get("/ui/")
        assert page.status_code == 200
        assert "taskforge" in page.text


def test_no_ui_route_without_dist(tmp_path):
    app = create_app(tmp_path / "data")
    with TestClient(app) as c:
        assert c.get("/ui/").status_code == 404
