"""Parsing, validation, and round-trip behaviour of the CSV ingest layer."""

from __future__ import annotations

import io

import numpy as np
import pytest

from conftest import JAN1_2007, ev
from linkcdr.errors import DatasetError, ParseError
from linkcdr.ingest import (
    EVENTS_HEADER,
    SUBSCRIBERS_HEADER,
    CdrEvent,
    EventColumns,
    EventKind,
    Gender,
    ObservationWindow,
    format_event_row,
    parse_events,
    parse_subscribers,
    validate_dataset,
)


def events_stream(rows: list[str]) -> io.BytesIO:
    return io.BytesIO(("\n".join([EVENTS_HEADER] + rows) + "\n").encode())


def subscribers_stream(rows: list[str]) -> io.BytesIO:
    return io.BytesIO(("\n".join([SUBSCRIBERS_HEADER] + rows) + "\n").encode())


class TestObservationWindow:
    def test_default_window_has_seven_months(self):
        window = ObservationWindow.default()
        assert window.n_months == 7
        assert window.start == JAN1_2007
        assert window.month_starts[0] == window.start

    def test_month_index_boundaries(self):
        window = ObservationWindow.default()
        assert window.month_index(window.start) == 0
        assert window.month_index(window.month_starts[1] - 1) == 0
        assert window.month_index(window.month_starts[1]) == 1
        assert window.month_index(window.end - 1) == 6

    def test_degenerate_window_rejected(self):
        with pytest.raises(DatasetError):
            ObservationWindow(100, 100)


class TestParseEvents:
    def test_call_row_maps_fields(self, default_window):
        events, diags = parse_events(
            events_stream(["a,b,1170324000,call,65"]), default_window
        )
        assert diags == []
        assert events == [CdrEvent("a", "b", 1170324000, EventKind.CALL, 65)]

    def test_text_row_has_zero_duration(self, default_window):
        events, _ = parse_events(events_stream(["a,b,1170324000,text,0"]), default_window)
        assert events[0].kind is EventKind.TEXT
        assert events[0].duration == 0

    def test_self_loop_dropped_with_diagnostic(self, default_window):
        events, diags = parse_events(
            events_stream(["a,a,1170324000,call,65"]), default_window
        )
        assert events == []
        assert len(diags) == 1 and "self-loop" in diags[0].reason

    def test_empty_duration_means_unknown_call(self, default_window):
        events, diags = parse_events(events_stream(["a,b,1170324000,call,"]), default_window)
        assert diags == []
        assert events[0].duration is None

    @pytest.mark.parametrize(
        "row, fragment",
        [
            ("a,b,notatime,call,65", "timestamp"),
            ("a,b,1170324000,call,-5", "negative duration"),
            ("a,b,1170324000,fax,65", "kind"),
            ("a,b,1170324000,text,", "unknown duration"),
            ("a,b,1170324000,text,4", "nonzero"),
            ("a,b,999,call,65", "outside window"),
            ("a,b,1170324000,call", "5 fields"),
        ],
    )
    def test_bad_rows_become_diagnostics(self, default_window, row, fragment):
        events, diags = parse_events(events_stream([row]), default_window)
        assert events == []
        assert len(diags) == 1 and fragment in diags[0].reason

    def test_header_mismatch_is_fatal(self, default_window):
        with pytest.raises(ParseError):
            parse_events(io.BytesIO(b"x,y,z\n"), default_window)

    def test_diagnostics_carry_line_numbers(self, default_window):
        events, diags = parse_events(
            events_stream(["a,b,1170324000,call,65", "a,a,1170324000,call,65"]),
            default_window,
        )
        assert len(events) == 1
        assert diags[0].line == 3

    def test_parse_is_total_on_fuzzed_bytes(self, default_window):
        rng = np.random.default_rng(0)
        for _ in range(50):
            blob = bytes(rng.integers(0, 256, size=rng.integers(1, 400)))
            stream = io.BytesIO(EVENTS_HEADER.encode() + b"\n" + blob)
            events, diags = parse_events(stream, default_window)
            assert isinstance(events, list) and isinstance(diags, list)

    def test_round_trip(self, default_window):
        rng = np.random.default_rng(1)
        users = [f"u{i}" for i in range(8)]
        events = []
        for _ in range(200):
            a, b = rng.choice(len(users), size=2, replace=False)
            ts = int(rng.integers(default_window.start, default_window.end))
            if rng.random() < 0.4:
                events.append(ev(users[a], users[b], ts, "text"))
            elif rng.random() < 0.2:
                events.append(ev(users[a], users[b], ts, "call", None))
            else:
                events.append(ev(users[a], users[b], ts, "call", int(rng.integers(0, 3600))))
        payload = "\n".join([EVENTS_HEADER] + [format_event_row(e) for e in events]) + "\n"
        reparsed, diags = parse_events(io.BytesIO(payload.encode()), default_window)
        assert diags == []
        assert reparsed == events


class TestParseSubscribers:
    def test_basic_record(self):
        records, diags = parse_subscribers(subscribers_stream(["u1,34,F,00100"]))
        assert diags == []
        assert records["u1"].age == 34
        assert records["u1"].gender is Gender.FEMALE
        assert records["u1"].postcode == "00100"

    def test_duplicate_keeps_first(self):
        records, diags = parse_subscribers(
            subscribers_stream(["u1,34,F,00100", "u1,40,M,00200"])
        )
        assert records["u1"].age == 34
        assert len(diags) == 1 and "duplicate" in diags[0].reason

    def test_age_out_of_range_dropped(self):
        records, diags = parse_subscribers(subscribers_stream(["u2,250,M,"]))
        assert records == {}
        assert "age out of range" in diags[0].reason

    def test_empty_postcode_is_none(self):
        records, _ = parse_subscribers(subscribers_stream(["u1,34,M,"]))
        assert records["u1"].postcode is None

    def test_header_mismatch_is_fatal(self):
        with pytest.raises(ParseError):
            parse_subscribers(io.BytesIO(b"nope\n"))


class TestValidateDataset:
    def test_empty_events_fatal(self, default_window):
        with pytest.raises(DatasetError):
            validate_dataset([], {}, default_window)

    def test_zero_month_flagged(self, default_window):
        events = [ev("a", "b", default_window.month_starts[m] + 10) for m in range(6)]
        report = validate_dataset(events, {}, default_window)
        assert not report.ok
        assert len(report.warnings) == 1 and "month 6" in report.warnings[0]

    def test_hand_counted_fixture(self, default_window):
        # 20 rows: 12 calls (3 with unknown duration), 8 texts, users a-e,
        # subscribers a, b, c only
        subs, _ = parse_subscribers(
            subscribers_stream(["a,30,F,", "b,32,M,", "c,40,F,"])
        )
        t0 = default_window.start
        events = []
        for m in range(7):
            events.append(ev("a", "b", default_window.month_starts[m] + 100))
        events += [
            ev("a", "c", t0 + 50, "call", None),
            ev("d", "a", t0 + 60, "call", None),
            ev("e", "b", t0 + 70, "call", None),
            ev("c", "d", t0 + 80),
            ev("b", "e", t0 + 90),
        ]
        events += [ev("a", "b", t0 + 100 + i, "text") for i in range(8)]
        assert len(events) == 20
        report = validate_dataset(events, subs, default_window)
        assert report.n_events == 20
        assert report.n_calls == 12
        assert report.n_texts == 8
        assert report.n_unknown_duration_calls == 3
        assert report.n_users_seen == 5
        assert report.n_subscribers_seen == 3
        assert report.n_nonsubscribers_seen == 2
        assert report.events_per_month[0] == 14
        assert report.events_per_month[1:] == [1] * 6
        assert report.ok


class TestEventColumns:
    def test_round_trip_preserves_events(self, default_window):
        events = [
            ev("b", "a", default_window.start + 5),
            ev("a", "c", default_window.start + 9, "text"),
            ev("c", "b", default_window.start + 12, "call", None),
        ]
        cols = EventColumns.from_events(events)
        assert cols.to_events() == events
        assert len(cols) == 3


class TestDiagnosticShape:
    def test_json_line_fields(self, default_window):
        import json

        _, diags = parse_events(
            events_stream(["a,a,1170324000,call,65"]), default_window
        )
        payload = json.loads(diags[0].to_json_line())
        assert set(payload) == {"line", "reason"}
        assert payload["line"] == 2
        assert isinstance(payload["reason"], str)
