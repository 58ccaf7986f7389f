"""Per-pair feature extraction: time segmentation, weekly statistics,
daypart fractions, active days, reciprocity, inter-event gaps, and the
175-value vector assembly, plus train-time standardization.

All day/hour decisions use local wall-clock time obtained by adding a fixed
UTC offset to the event timestamps (single-country data, no DST model).
Weeks are Monday-aligned local calendar weeks fully contained in the
observation window; weeks without activity contribute explicit zeros.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import manifest
from .errors import DatasetError
from .ingest import CdrEvent, EventColumns, EventKind, ObservationWindow
from .pairgraph import LinkGraph, PairKey, common_contacts

SECONDS_PER_DAY = 86400


class Weekpart(str, Enum):
    WEEKDAY = "weekday"
    WEEKEND = "weekend"


class Daypart(str, Enum):
    DAYTIME = "daytime"
    EVENING = "evening"
    LATE_NIGHT = "late_night"


class TimeSegment(NamedTuple):
    weekpart: Weekpart
    daypart: Daypart


# index = weekpart * 3 + daypart, matching the manifest ordering
SEGMENT_ORDER: tuple[TimeSegment, ...] = tuple(
    TimeSegment(wp, dp) for wp in Weekpart for dp in Daypart
)


@dataclass(frozen=True)
class FeatureConfig:
    """Knobs shared by all extraction entry points."""

    utc_offset: int = 0


def _local_parts(ts: np.ndarray, utc_offset: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(local day number, weekday 0=Mon, segment index) for an epoch array."""
    lt = ts + utc_offset
    day = lt // SECONDS_PER_DAY
    weekday = (day + 3) % 7  # epoch day 0 was a Thursday
    hour = (lt % SECONDS_PER_DAY) // 3600
    daypart = np.where((hour >= 7) & (hour <= 16), 0, np.where((hour >= 17) & (hour <= 22), 1, 2))
    segment = np.where(weekday >= 4, 3, 0) + daypart
    return day, weekday, segment


def segment_of(timestamp: int, utc_offset: int = 0) -> TimeSegment:
    """Map one timestamp to its (weekpart, daypart) segment in local time."""
    _, _, seg = _local_parts(np.asarray([timestamp], dtype=np.int64), utc_offset)
    return SEGMENT_ORDER[int(seg[0])]


@dataclass(frozen=True)
class WeekGrid:
    """Monday-aligned full weeks of a window, in local day numbers."""

    first_monday_day: int
    n_weeks: int
    utc_offset: int

    @classmethod
    def from_window(cls, window: ObservationWindow, utc_offset: int = 0) -> "WeekGrid":
        start_local = window.start + utc_offset
        end_local = window.end + utc_offset
        first_day = -(-start_local // SECONDS_PER_DAY)
        first_monday = first_day + ((4 - first_day) % 7)  # epoch day 4 was a Monday
        n_weeks = (end_local // SECONDS_PER_DAY - first_monday) // 7
        if n_weeks < 1:
            raise DatasetError("observation window holds no full Monday-aligned week")
        return cls(int(first_monday), int(n_weeks), utc_offset)

    def week_index(self, day: np.ndarray, weekday: np.ndarray) -> np.ndarray:
        """Full-week index per event day, -1 outside the grid."""
        idx = (day - weekday - self.first_monday_day) // 7
        return np.where((idx >= 0) & (idx < self.n_weeks), idx, -1)


@dataclass
class WeeklySeries:
    """Per full week x segment counters for one pair.

    Arrays are (n_weeks, 6) with segments ordered as SEGMENT_ORDER; unknown
    call durations count toward ``n_calls`` but not ``duration``.
    """

    n_calls: np.ndarray
    duration: np.ndarray
    n_texts: np.ndarray

    @property
    def n_weeks(self) -> int:
        return self.n_calls.shape[0]


def _event_arrays(events: Iterable[CdrEvent]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ts = np.asarray([ev.timestamp for ev in events], dtype=np.int64)
    is_call = np.asarray([ev.kind is EventKind.CALL for ev in events], dtype=bool)
    dur = np.asarray(
        [-1 if ev.duration is None else ev.duration for ev in events], dtype=np.int64
    )
    return ts, is_call, dur


def _weekly_arrays(
    ts: np.ndarray,
    is_call: np.ndarray,
    dur: np.ndarray,
    grid: WeekGrid,
) -> WeeklySeries:
    day, weekday, seg = _local_parts(ts, grid.utc_offset)
    widx = grid.week_index(day, weekday)
    in_grid = widx >= 0
    cell = widx * 6 + seg
    size = grid.n_weeks * 6
    call_mask = in_grid & is_call
    text_mask = in_grid & ~is_call
    known_dur = np.where(dur >= 0, dur, 0).astype(np.float64)
    calls = np.bincount(cell[call_mask], minlength=size).reshape(grid.n_weeks, 6)
    texts = np.bincount(cell[text_mask], minlength=size).reshape(grid.n_weeks, 6)
    duration = np.bincount(
        cell[call_mask], weights=known_dur[call_mask], minlength=size
    ).reshape(grid.n_weeks, 6)
    return WeeklySeries(calls.astype(np.int64), duration, texts.astype(np.int64))


def weekly_series(
    events: Sequence[CdrEvent], window: ObservationWindow, utc_offset: int = 0
) -> WeeklySeries:
    """Weekly per-segment (calls, duration, texts) over the window's full weeks."""
    grid = WeekGrid.from_window(window, utc_offset)
    ts, is_call, dur = _event_arrays(events)
    return _weekly_arrays(ts, is_call, dur, grid)


class DistStats(NamedTuple):
    mean: float
    median: float
    std: float
    min: float
    max: float
    skew: float
    kurt: float


def dist_stats(values: Sequence[float] | np.ndarray) -> DistStats:
    """Population-moment summary of a series; excess kurtosis.

    Constant series (std 0) report skewness and kurtosis as 0.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise DatasetError("dist_stats requires a non-empty 1-D series")
    stats = _column_stats(x[:, None])
    return DistStats(*(float(v) for v in stats[:, 0]))


def _column_stats(x: np.ndarray) -> np.ndarray:
    """(7, m) population statistics per column of an (n, m) matrix."""
    mean = x.mean(axis=0)
    centered = x - mean
    var = np.mean(centered**2, axis=0)
    std = np.sqrt(var)
    safe = np.where(std > 0, std, 1.0)
    skew = np.where(std > 0, np.mean(centered**3, axis=0) / safe**3, 0.0)
    kurt = np.where(std > 0, np.mean(centered**4, axis=0) / safe**4 - 3.0, 0.0)
    return np.stack([mean, np.median(x, axis=0), std, x.min(axis=0), x.max(axis=0), skew, kurt])


def reciprocity(in_qty: float, out_qty: float) -> float:
    """Normalized directional imbalance |in-out| / (in+out), 0 for no traffic."""
    if in_qty < 0 or out_qty < 0:
        raise ValueError("reciprocity inputs must be nonnegative")
    total = in_qty + out_qty
    if total == 0:
        return 0.0
    return abs(in_qty - out_qty) / total


def _signed_log1p(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.log1p(np.abs(x))


def fraction_features(segment_totals: np.ndarray) -> np.ndarray:
    """18 daypart shares from a (3 quantities, 6 segments) totals matrix.

    Rows are (calls, duration, texts); all three fractions of a weekpart are
    0 when that weekpart's total is 0. Late-night call-count and duration
    shares are stored log1p-transformed.
    """
    totals = np.asarray(segment_totals, dtype=np.float64)
    if totals.shape != (3, 6):
        raise DatasetError(f"expected (3, 6) totals, got {totals.shape}")
    out = np.zeros(18)
    pos = 0
    for wp in range(2):
        block = totals[:, wp * 3 : wp * 3 + 3]
        for qty in range(3):
            weekpart_total = block[qty].sum()
            frac = block[qty] / weekpart_total if weekpart_total > 0 else np.zeros(3)
            if qty in (0, 1):  # late-night calls and duration carry footnote log1p
                frac = frac.copy()
                frac[2] = np.log1p(frac[2])
            out[pos : pos + 3] = frac
            pos += 3
    return out


def active_days_features(events: Sequence[CdrEvent], utc_offset: int = 0) -> np.ndarray:
    """12 log1p counts of distinct local days with >=1 call / text per segment."""
    ts, is_call, _ = _event_arrays(events)
    return _active_days(ts, is_call, utc_offset)


def _active_days(ts: np.ndarray, is_call: np.ndarray, utc_offset: int) -> np.ndarray:
    counts = np.zeros(12)
    if ts.size:
        day, _, seg = _local_parts(ts, utc_offset)
        kind = (~is_call).astype(np.int64)  # 0 = call, 1 = text
        unique_keys = np.unique(day * 12 + seg * 2 + kind)
        slot = unique_keys % 12
        seg_u = slot // 2
        kind_u = slot % 2
        counts = np.bincount(kind_u * 6 + seg_u, minlength=12).astype(np.float64)
    return np.log1p(counts)


def interevent_stats(timestamps: Sequence[int] | np.ndarray, window_seconds: int) -> np.ndarray:
    """7 transformed gap statistics for one channel's event times.

    With fewer than two events the scale statistics take the sentinel
    log1p(window length) and skewness/kurtosis are 0, encoding "rarer than
    observable" monotonically.
    """
    ts = np.sort(np.asarray(timestamps, dtype=np.int64))
    if ts.size < 2:
        sentinel = math.log1p(window_seconds)
        return np.asarray([sentinel] * 5 + [0.0, 0.0])
    gaps = np.diff(ts).astype(np.float64)
    stats = _column_stats(gaps[:, None])[:, 0]
    out = np.empty(7)
    out[:5] = np.log1p(stats[:5])
    out[5:] = _signed_log1p(stats[5:])
    return out


def _pair_vector(
    ts: np.ndarray,
    is_call: np.ndarray,
    dur: np.ndarray,
    from_first: np.ndarray,
    grid: WeekGrid,
    window_seconds: int,
    common: tuple[int, int],
) -> np.ndarray:
    """Assemble the 175 values for one pair from its event arrays."""
    weekly = _weekly_arrays(ts, is_call, dur, grid)
    series = np.concatenate(
        [weekly.n_calls.astype(np.float64), weekly.duration, weekly.n_texts.astype(np.float64)],
        axis=1,
    )  # (W, 18) columns ordered quantity-major then segment
    stats = _column_stats(series)  # (7, 18)
    weekly_block = stats.T.reshape(-1).copy()  # per column: 7 stats contiguous
    scale_rows = np.zeros(7, dtype=bool)
    scale_rows[:5] = True
    weekly_block[np.tile(scale_rows, 18)] = np.log1p(weekly_block[np.tile(scale_rows, 18)])

    _, _, seg = _local_parts(ts, grid.utc_offset)
    known_dur = np.where(dur >= 0, dur, 0).astype(np.float64)
    totals = np.zeros((3, 6))
    if ts.size:
        totals[0] = np.bincount(seg[is_call], minlength=6)
        totals[1] = np.bincount(seg[is_call], weights=known_dur[is_call], minlength=6)
        totals[2] = np.bincount(seg[~is_call], minlength=6)
    fractions = fraction_features(totals)

    active = _active_days(ts, is_call, grid.utc_offset)

    out_call = int(np.count_nonzero(is_call & from_first))
    in_call = int(np.count_nonzero(is_call & ~from_first))
    out_dur = float(known_dur[is_call & from_first].sum())
    in_dur = float(known_dur[is_call & ~from_first].sum())
    out_text = int(np.count_nonzero(~is_call & from_first))
    in_text = int(np.count_nonzero(~is_call & ~from_first))
    recips = np.asarray(
        [
            reciprocity(in_call, out_call),
            reciprocity(in_dur, out_dur),
            reciprocity(in_text, out_text),
        ]
    )

    inter = np.concatenate(
        [
            interevent_stats(ts[is_call], window_seconds),
            interevent_stats(ts[~is_call], window_seconds),
        ]
    )

    vec = np.concatenate(
        [weekly_block, fractions, active, recips, inter, np.asarray(common, dtype=np.float64)]
    )
    if vec.shape != (manifest.N_FEATURES,):
        raise AssertionError(f"feature vector has shape {vec.shape}")
    return vec


def assemble_feature_vector(
    pair_events: Sequence[CdrEvent],
    graph: LinkGraph,
    window: ObservationWindow,
    config: FeatureConfig = FeatureConfig(),
) -> np.ndarray:
    """The 175-value vector for one pair given its own events.

    ``graph`` supplies the common-contact counts and must contain the pair;
    all events must belong to the same unordered pair.
    """
    if not pair_events:
        raise DatasetError("assemble_feature_vector needs at least one event")
    key = PairKey.of(pair_events[0].caller_id, pair_events[0].callee_id)
    for ev in pair_events:
        if PairKey.of(ev.caller_id, ev.callee_id) != key:
            raise DatasetError("events span more than one pair")
    grid = WeekGrid.from_window(window, config.utc_offset)
    ts, is_call, dur = _event_arrays(pair_events)
    from_first = np.asarray([ev.caller_id == key.first for ev in pair_events], dtype=bool)
    common = common_contacts(graph, key)
    return _pair_vector(ts, is_call, dur, from_first, grid, window.n_seconds, common)


# --- batch extraction --------------------------------------------------------

_BATCH_CTX: dict | None = None


def _pair_slices(
    cols: EventColumns, pairs: Sequence[PairKey]
) -> tuple[np.ndarray, np.ndarray, list[tuple[int, int]], np.ndarray]:
    """Sort events by unordered pair and find each requested pair's slice."""
    n_users = len(cols.users)
    lex_rank = np.empty(n_users, dtype=np.int64)
    lex_rank[np.argsort(np.asarray(cols.users, dtype=object))] = np.arange(n_users)
    caller_first = lex_rank[cols.caller] < lex_rank[cols.callee]
    first = np.where(caller_first, cols.caller, cols.callee)
    second = np.where(caller_first, cols.callee, cols.caller)
    pair_id = first * n_users + second
    order = np.argsort(pair_id, kind="stable")
    sorted_ids = pair_id[order]

    spans: list[tuple[int, int]] = []
    for pair in pairs:
        fc = cols.user_index.get(pair.first)
        sc = cols.user_index.get(pair.second)
        if fc is None or sc is None:
            spans.append((0, 0))
            continue
        a, b = (fc, sc) if lex_rank[fc] < lex_rank[sc] else (sc, fc)
        pid = a * n_users + b
        lo = int(np.searchsorted(sorted_ids, pid, side="left"))
        hi = int(np.searchsorted(sorted_ids, pid, side="right"))
        spans.append((lo, hi))
    return order, caller_first, spans, pair_id


def _batch_vector(i: int) -> np.ndarray:
    ctx = _BATCH_CTX
    lo, hi = ctx["spans"][i]
    idx = ctx["order"][lo:hi]
    return _pair_vector(
        ctx["ts"][idx],
        ctx["is_call"][idx],
        ctx["dur"][idx],
        ctx["caller_is_first"][idx],
        ctx["grid"],
        ctx["window_seconds"],
        ctx["common"][i],
    )


def _batch_chunk(span: tuple[int, int]) -> np.ndarray:
    lo, hi = span
    return np.stack([_batch_vector(i) for i in range(lo, hi)])


def compute_feature_matrix(
    cols: EventColumns,
    pairs: Sequence[PairKey],
    graph: LinkGraph,
    window: ObservationWindow,
    config: FeatureConfig = FeatureConfig(),
    jobs: int = 1,
) -> np.ndarray:
    """Feature matrix (len(pairs) x 175) in the order of ``pairs``.

    ``jobs`` > 1 fans pair extraction out over forked workers; results are
    identical to the sequential path.
    """
    global _BATCH_CTX
    if not pairs:
        return np.zeros((0, manifest.N_FEATURES))
    grid = WeekGrid.from_window(window, config.utc_offset)
    order, caller_first, spans, _ = _pair_slices(cols, pairs)
    common = [common_contacts(graph, pair) for pair in pairs]
    _BATCH_CTX = {
        "ts": cols.timestamp,
        "is_call": cols.is_call,
        "dur": cols.duration,
        "caller_is_first": caller_first,
        "order": order,
        "spans": spans,
        "grid": grid,
        "window_seconds": window.n_seconds,
        "common": common,
    }
    try:
        n = len(pairs)
        if jobs <= 1:
            rows = [_batch_vector(i) for i in range(n)]
            return np.stack(rows)
        chunk = max(1, n // (jobs * 8))
        chunks = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
        with multiprocessing.get_context("fork").Pool(jobs) as pool:
            blocks = pool.map(_batch_chunk, chunks)
        return np.concatenate(blocks, axis=0)
    finally:
        _BATCH_CTX = None


# --- standardization ----------------------------------------------------------


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature mean and population std learned on training rows."""

    mean: np.ndarray
    std: np.ndarray

    def to_dict(self) -> dict:
        return {
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
            "manifest_hash": manifest.manifest_hash(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScalerParams":
        return cls(np.asarray(data["mean"], dtype=np.float64), np.asarray(data["std"]))


def fit_scaler(matrix: np.ndarray, names: Sequence[str] | None = None) -> ScalerParams:
    """Learn per-column mean/std; rejects constant columns by name."""
    x = np.asarray(matrix, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DatasetError("scaler fit needs a 2-D matrix with at least 2 rows")
    mean = x.mean(axis=0)
    std = np.sqrt(np.mean((x - mean) ** 2, axis=0))
    floor = 1e-12 * np.maximum(1.0, np.abs(mean))
    constant = np.flatnonzero(std <= floor)
    if constant.size:
        if names is None and x.shape[1] == manifest.N_FEATURES:
            names = manifest.FEATURE_NAMES
        labels = [names[i] if names is not None else str(i) for i in constant[:8]]
        raise DatasetError(f"constant feature column(s) at fit time: {', '.join(labels)}")
    return ScalerParams(mean, std)


def apply_scaler(matrix: np.ndarray, params: ScalerParams) -> np.ndarray:
    x = np.asarray(matrix, dtype=np.float64)
    return (x - params.mean) / params.std
