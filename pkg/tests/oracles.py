"""Independent brute-force reference implementations used as test oracles.

Everything here avoids the library's vectorized code paths: plain dicts,
datetime arithmetic, and math-module moments, so agreement with the package
is meaningful.
"""

from __future__ import annotations

import math
from datetime import datetime, timedelta, timezone

from linkcdr.ingest import CdrEvent, EventKind, ObservationWindow
from linkcdr.manifest import FEATURE_NAMES


# --- graph layer ---------------------------------------------------------


def recount_links(events: list[CdrEvent], window: ObservationWindow) -> dict:
    """Per-pair counters recomputed with plain dict folds."""
    out: dict[tuple[str, str], dict] = {}
    for ev in events:
        key = tuple(sorted((ev.caller_id, ev.callee_id)))
        rec = out.setdefault(
            key,
            {
                "calls_total": 0,
                "texts_total": 0,
                "duration_total": 0,
                "calls_from_first": 0,
                "texts_from_first": 0,
                "duration_from_first": 0,
                "months": [0] * window.n_months,
            },
        )
        from_first = ev.caller_id == key[0]
        if ev.kind is EventKind.CALL:
            rec["calls_total"] += 1
            month = max(
                i for i, start in enumerate(window.month_starts) if start <= ev.timestamp
            )
            rec["months"][month] += 1
            if from_first:
                rec["calls_from_first"] += 1
            if ev.duration is not None:
                rec["duration_total"] += ev.duration
                if from_first:
                    rec["duration_from_first"] += ev.duration
        else:
            rec["texts_total"] += 1
            if from_first:
                rec["texts_from_first"] += 1
    return out


def rank_alters_brute(links: dict, ego: str) -> list[tuple[str, int]]:
    rows = []
    for (a, b), rec in links.items():
        if ego not in (a, b):
            continue
        alter = b if ego == a else a
        rows.append((alter, rec["calls_total"], rec["duration_total"]))
    rows.sort(key=lambda r: (-r[1], -r[2], r[0]))
    return [(alter, calls) for alter, calls, _ in rows]


def mutual_pairs_brute(links: dict) -> list[tuple[str, str]]:
    users = {u for key in links for u in key}
    tops = {}
    for user in users:
        ranked = rank_alters_brute(links, user)
        if ranked:
            tops[user] = ranked[0][0]
    return sorted(
        (u, t) for u, t in tops.items() if u < t and tops.get(t) == u
    )


def common_contacts_brute(links: dict, a: str, b: str) -> tuple[int, int]:
    def neighbors(user: str) -> set[str]:
        out = set()
        for x, y in links:
            if user == x:
                out.add(y)
            elif user == y:
                out.add(x)
        return out

    exclude = {a, b}
    all_common = len((neighbors(a) - exclude) & (neighbors(b) - exclude))
    top_a = {alter for alter, _ in rank_alters_brute(links, a)[:5]} - exclude
    top_b = {alter for alter, _ in rank_alters_brute(links, b)[:5]} - exclude
    return len(top_a & top_b), all_common


# --- statistics ------------------------------------------------------------


def moment_stats(series) -> tuple[float, float, float, float, float, float, float]:
    """Population moments via plain Python arithmetic."""
    vals = [float(v) for v in series]
    n = len(vals)
    mean = sum(vals) / n
    ordered = sorted(vals)
    mid = n // 2
    median = ordered[mid] if n % 2 else (ordered[mid - 1] + ordered[mid]) / 2
    var = sum((v - mean) ** 2 for v in vals) / n
    std = math.sqrt(var)
    if std == 0:
        skew = kurt = 0.0
    else:
        skew = sum((v - mean) ** 3 for v in vals) / n / std**3
        kurt = sum((v - mean) ** 4 for v in vals) / n / std**4 - 3.0
    return mean, median, std, min(vals), max(vals), skew, kurt


def _signed_log1p(x: float) -> float:
    return math.copysign(math.log1p(abs(x)), x) if x else 0.0


# --- full feature vector -----------------------------------------------------

WEEKPARTS = ("weekday", "weekend")
DAYPARTS = ("daytime", "evening", "late_night")
STATS = ("mean", "median", "std", "min", "max", "skew", "kurt")


def _local(ts: int, offset: int) -> datetime:
    return datetime.fromtimestamp(ts + offset, tz=timezone.utc)


def _daypart(dt: datetime) -> str:
    if 7 <= dt.hour <= 16:
        return "daytime"
    if 17 <= dt.hour <= 22:
        return "evening"
    return "late_night"


def _weekpart(dt: datetime) -> str:
    return "weekday" if dt.weekday() <= 3 else "weekend"


def feature_vector_oracle(
    events: list[CdrEvent],
    window: ObservationWindow,
    utc_offset: int,
    common: tuple[int, int],
) -> list[float]:
    """Recompute all 175 features with datetime arithmetic and dict folds."""
    values: dict[str, float] = {}

    # full Monday-aligned weeks inside the window (local time)
    start = _local(window.start, utc_offset)
    end = _local(window.end, utc_offset)
    cursor = start
    if cursor.time() != datetime.min.time():
        cursor = datetime.combine(cursor.date() + timedelta(days=1), datetime.min.time(), timezone.utc)
    while cursor.weekday() != 0:
        cursor += timedelta(days=1)
    week_starts = []
    while cursor + timedelta(days=7) <= end:
        week_starts.append(cursor)
        cursor += timedelta(days=7)
    n_weeks = len(week_starts)
    first_week = week_starts[0]

    weekly: dict[tuple[int, str, str, str], float] = {}
    totals: dict[tuple[str, str, str], float] = {}
    active: dict[tuple[str, str, str], set] = {}
    direction = {("calls", True): 0.0, ("calls", False): 0.0, ("duration", True): 0.0,
                 ("duration", False): 0.0, ("texts", True): 0.0, ("texts", False): 0.0}
    call_times: list[int] = []
    text_times: list[int] = []
    first_id = min(min(e.caller_id, e.callee_id) for e in events) if events else ""

    for ev in events:
        dt = _local(ev.timestamp, utc_offset)
        wp, dp = _weekpart(dt), _daypart(dt)
        week_idx = (datetime.combine(dt.date(), datetime.min.time(), timezone.utc)
                    - timedelta(days=dt.weekday()) - first_week).days // 7 if n_weeks else -1
        in_weeks = 0 <= week_idx < n_weeks
        from_first = ev.caller_id == first_id
        if ev.kind is EventKind.CALL:
            call_times.append(ev.timestamp)
            if in_weeks:
                weekly[(week_idx, "calls", wp, dp)] = weekly.get((week_idx, "calls", wp, dp), 0) + 1
            totals[("calls", wp, dp)] = totals.get(("calls", wp, dp), 0) + 1
            active.setdefault(("call", wp, dp), set()).add(dt.date())
            direction[("calls", from_first)] += 1
            if ev.duration is not None:
                if in_weeks:
                    weekly[(week_idx, "duration", wp, dp)] = (
                        weekly.get((week_idx, "duration", wp, dp), 0) + ev.duration
                    )
                totals[("duration", wp, dp)] = totals.get(("duration", wp, dp), 0) + ev.duration
                direction[("duration", from_first)] += ev.duration
        else:
            text_times.append(ev.timestamp)
            if in_weeks:
                weekly[(week_idx, "texts", wp, dp)] = weekly.get((week_idx, "texts", wp, dp), 0) + 1
            totals[("texts", wp, dp)] = totals.get(("texts", wp, dp), 0) + 1
            active.setdefault(("text", wp, dp), set()).add(dt.date())
            direction[("texts", from_first)] += 1

    for qty in ("calls", "duration", "texts"):
        for wp in WEEKPARTS:
            for dp in DAYPARTS:
                series = [weekly.get((w, qty, wp, dp), 0.0) for w in range(n_weeks)]
                stats = moment_stats(series)
                for stat_name, value in zip(STATS, stats):
                    stored = math.log1p(value) if stat_name in STATS[:5] else value
                    values[f"weekly_{qty}_{wp}_{dp}_{stat_name}"] = stored

    for wp in WEEKPARTS:
        for qty in ("calls", "duration", "texts"):
            wp_total = sum(totals.get((qty, wp, dp), 0.0) for dp in DAYPARTS)
            for dp in DAYPARTS:
                frac = totals.get((qty, wp, dp), 0.0) / wp_total if wp_total > 0 else 0.0
                if dp == "late_night" and qty in ("calls", "duration"):
                    frac = math.log1p(frac)
                values[f"frac_{wp}_{qty}_{dp}"] = frac

    for kind in ("call", "text"):
        for wp in WEEKPARTS:
            for dp in DAYPARTS:
                values[f"active_days_{kind}_{wp}_{dp}"] = math.log1p(
                    len(active.get((kind, wp, dp), set()))
                )

    for qty in ("calls", "duration", "texts"):
        out_q = direction[(qty, True)]
        in_q = direction[(qty, False)]
        total = in_q + out_q
        values[f"reciprocity_{qty}"] = abs(in_q - out_q) / total if total else 0.0

    for channel, times in (("calls", call_times), ("texts", text_times)):
        if len(times) < 2:
            stats = [math.log1p(window.end - window.start)] * 5 + [0.0, 0.0]
        else:
            ordered = sorted(times)
            gaps = [b - a for a, b in zip(ordered, ordered[1:])]
            raw = moment_stats(gaps)
            stats = [math.log1p(v) for v in raw[:5]] + [_signed_log1p(v) for v in raw[5:]]
        for stat_name, value in zip(STATS, stats):
            values[f"interevent_{channel}_{stat_name}"] = value

    values["common_contacts_top5"] = float(common[0])
    values["common_contacts_all"] = float(common[1])
    return [values[name] for name in FEATURE_NAMES]
