"""Deterministic file I/O helpers shared by the CLI stages."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__, manifest
from .errors import ParseError
from .pairgraph import PairKey


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _sanitize(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def write_json(path: str, payload: Any) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        json.dump(_sanitize(payload), out, indent=2, sort_keys=True)
        out.write("\n")


def read_json(path: str) -> Any:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


@dataclass
class RunManifest:
    """Reproducibility record written next to every stage's outputs."""

    subcommand: str
    inputs: dict[str, str] = field(default_factory=dict)  # label -> path
    config: dict[str, Any] = field(default_factory=dict)
    seeds: list[int] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)

    def write(self, out_dir: str) -> str:
        payload = {
            "subcommand": self.subcommand,
            "toolkit_version": __version__,
            "inputs": {
                label: {"path": path, "sha256": sha256_file(path)}
                for label, path in self.inputs.items()
            },
            "config": _sanitize(self.config),
            "seeds": self.seeds,
            "outputs": {
                os.path.basename(path): {"path": path, "sha256": sha256_file(path)}
                for path in self.outputs
            },
        }
        path = os.path.join(out_dir, "manifest.json")
        write_json(path, payload)
        return path


PAIRS_HEADER = (
    "first,second,calls_total,texts_total,duration_total,months_active,label_code,younger_age"
)


def write_pairs_csv(path: str, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        out.write(PAIRS_HEADER + "\n")
        for row in rows:
            out.write(
                f"{row['first']},{row['second']},{row['calls_total']},{row['texts_total']},"
                f"{row['duration_total']},{row['months_active']},{row['label_code']},"
                f"{row['younger_age']}\n"
            )


def read_pairs_csv(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\r\n")
        if header != PAIRS_HEADER:
            raise ParseError(f"pairs header mismatch: got {header!r}")
        rows = []
        for line in handle:
            line = line.rstrip("\r\n")
            if not line:
                continue
            first, second, calls, texts, dur, months, code, younger = line.split(",")
            rows.append(
                {
                    "first": first,
                    "second": second,
                    "calls_total": int(calls),
                    "texts_total": int(texts),
                    "duration_total": int(dur),
                    "months_active": int(months),
                    "label_code": code,
                    "younger_age": int(younger) if younger else None,
                }
            )
    return rows


def write_features_csv(path: str, pairs: Sequence[PairKey], matrix: np.ndarray) -> None:
    if matrix.shape != (len(pairs), manifest.N_FEATURES):
        raise ParseError(f"feature matrix shape {matrix.shape} does not match manifest")
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        out.write("first,second," + ",".join(manifest.FEATURE_NAMES) + "\n")
        for pair, row in zip(pairs, matrix):
            out.write(f"{pair.first},{pair.second}," + ",".join(repr(v) for v in row.tolist()) + "\n")


def read_features_csv(path: str) -> tuple[list[PairKey], np.ndarray]:
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\r\n")
        expected = "first,second," + ",".join(manifest.FEATURE_NAMES)
        if header != expected:
            raise ParseError("features header does not match the feature manifest")
        pairs: list[PairKey] = []
        rows: list[np.ndarray] = []
        for line in handle:
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != manifest.N_FEATURES + 2:
                raise ParseError(f"feature row has {len(parts)} fields")
            pairs.append(PairKey(parts[0], parts[1]))
            rows.append(np.asarray([float(v) for v in parts[2:]], dtype=np.float64))
    matrix = np.vstack(rows) if rows else np.zeros((0, manifest.N_FEATURES))
    return pairs, matrix


PREDICTIONS_HEADER = "row_id,prediction,probability"


def write_predictions_csv(
    path: str,
    row_ids: Sequence[str],
    predictions: np.ndarray,
    probabilities: np.ndarray | None,
) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        out.write(PREDICTIONS_HEADER + "\n")
        for i, row_id in enumerate(row_ids):
            prob = "" if probabilities is None else repr(float(probabilities[i]))
            out.write(f"{row_id},{int(predictions[i])},{prob}\n")


def read_predictions_csv(path: str) -> tuple[list[str], np.ndarray, np.ndarray | None]:
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\r\n")
        if header != PREDICTIONS_HEADER:
            raise ParseError(f"predictions header mismatch: got {header!r}")
        ids: list[str] = []
        preds: list[int] = []
        probs: list[float] = []
        any_prob = False
        for line in handle:
            line = line.rstrip("\r\n")
            if not line:
                continue
            row_id, pred, prob = line.rsplit(",", 2)
            ids.append(row_id)
            preds.append(int(pred))
            if prob:
                any_prob = True
                probs.append(float(prob))
            else:
                probs.append(float("nan"))
    return ids, np.asarray(preds, dtype=np.int64), (np.asarray(probs) if any_prob else None)
