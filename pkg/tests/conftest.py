"""Shared fixtures and tiny builders for the test suite."""

from __future__ import annotations

import sys
from datetime import datetime, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from linkcdr.ingest import CdrEvent, EventKind, ObservationWindow

JAN1_2007 = 1167609600  # Monday 2007-01-01 00:00:00 UTC
DAY = 86400
WEEK = 7 * DAY


def epoch(text: str) -> int:
    """UTC epoch seconds of an ISO datetime like '2007-01-02 08:30:00'."""
    return int(datetime.fromisoformat(text).replace(tzinfo=timezone.utc).timestamp())


def ev(
    caller: str,
    callee: str,
    ts: int,
    kind: str = "call",
    duration: int | None = 60,
) -> CdrEvent:
    if kind == "text":
        duration = 0
    return CdrEvent(caller, callee, ts, EventKind(kind), duration)


@pytest.fixture
def default_window() -> ObservationWindow:
    return ObservationWindow.default()


@pytest.fixture
def two_month_window() -> ObservationWindow:
    return ObservationWindow.from_dates("2007-01-01", "2007-03-01")
