"""Shared fixtures and the acceptance-criterion reporter."""

from __future__ import annotations

import random

import pytest

from taskforge.event_table import Schema

# -- acceptance summary ------------------------------------------------------

_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid or report.when != "call":
        return
    name = report.nodeid.split("::")[-1]
    _acceptance_results[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(_acceptance_results):
        status = "PASS" if _acceptance_results[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {name}")


# -- fixtures ----------------------------------------------------------------


@pytest.fixture
def flight_schema() -> Schema:
    return Schema.from_dict(
        {
            "name": "flight",
            "time": "ts",
            "entity": ["flight_number", "airline"],
            "categorical": ["is_delayed"],
            "numerical": [],
        }
    )


@pytest.fixture
def flight_csv() -> bytes:
    """Deterministic toy flight table: Jan 1 .. Jan 31, three airlines."""
    rng = random.Random(42)
    lines = ["ts,flight_number,airline,is_delayed"]
    for day in range(1, 32):
        for hour in range(0, 24, 2):
            airline = rng.choice(["AA", "DL", "UA"])
            lines.append(
                f"2015-01-{day:02d} {hour:02d}:00:00,"
                f"F{rng.randrange(1, 40)},{airline},{rng.choice(['0', '1'])}"
            )
    return ("\n".join(lines) + "\n").encode()
