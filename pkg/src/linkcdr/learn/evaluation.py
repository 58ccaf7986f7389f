"""Confusion-matrix metrics with per-relationship breakdowns and
probability histograms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DatasetError

N_HISTOGRAM_BINS = 20


@dataclass(frozen=True)
class GroupStats:
    accuracy: float
    share: float
    n: int


@dataclass
class EvalReport:
    accuracy: float
    precision: float
    tpr: float
    tnr: float
    tp: int
    fp: int
    tn: int
    fn: int
    per_group: dict[str, GroupStats]
    histograms: dict[str, list[float]] | None = None

    def to_dict(self) -> dict:
        out = {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "tpr": self.tpr,
            "tnr": self.tnr,
            "confusion": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
            "per_group": {
                code: {"accuracy": g.accuracy, "share": g.share, "n": g.n}
                for code, g in self.per_group.items()
            },
        }
        if self.histograms is not None:
            out["histogram_bins"] = N_HISTOGRAM_BINS
            out["histograms"] = self.histograms
        return out


def evaluate(
    predictions: np.ndarray,
    labels: np.ndarray,
    groups: Sequence[str | None] | None = None,
    probabilities: np.ndarray | None = None,
) -> EvalReport:
    """Score binary predictions, optionally per group and with probability
    histograms (20 uniform bins on [0, 1], normalized per group).

    Rows with an empty/None group tag count toward the overall metrics only.
    """
    pred = np.asarray(predictions, dtype=np.int64)
    y = np.asarray(labels, dtype=np.int64)
    if pred.shape != y.shape:
        raise DatasetError("predictions and labels are misaligned")
    if groups is not None and len(groups) != len(y):
        raise DatasetError("group tags and labels are misaligned")
    if probabilities is not None and len(probabilities) != len(y):
        raise DatasetError("probabilities and labels are misaligned")
    if y.size == 0:
        raise DatasetError("nothing to evaluate")

    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    tn = int(np.sum((pred == 0) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    total = tp + fp + tn + fn

    def ratio(num: int, den: int) -> float:
        return num / den if den else 0.0

    per_group: dict[str, GroupStats] = {}
    histograms: dict[str, list[float]] | None = None
    if probabilities is not None:
        probs = np.asarray(probabilities, dtype=np.float64)
        histograms = {"all": _histogram(probs)}
    if groups is not None:
        tags = np.asarray([g if g else "" for g in groups], dtype=object)
        for code in sorted({t for t in tags if t}):
            mask = tags == code
            n = int(mask.sum())
            per_group[code] = GroupStats(
                accuracy=float((pred[mask] == y[mask]).mean()),
                share=n / total,
                n=n,
            )
            if histograms is not None:
                histograms[code] = _histogram(probs[mask])

    return EvalReport(
        accuracy=ratio(tp + tn, total),
        precision=ratio(tp, tp + fp),
        tpr=ratio(tp, tp + fn),
        tnr=ratio(tn, tn + fp),
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        per_group=per_group,
        histograms=histograms,
    )


def _histogram(probs: np.ndarray) -> list[float]:
    counts, _ = np.histogram(np.clip(probs, 0.0, 1.0), bins=N_HISTOGRAM_BINS, range=(0.0, 1.0))
    if probs.size == 0:
        return [0.0] * N_HISTOGRAM_BINS
    return [float(c) / probs.size for c in counts]
