"""Exact k-nearest-neighbor classification with deterministic tie-breaking."""

from __future__ import annotations

import numpy as np

from ..errors import DatasetError


def pairwise_sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between row sets, clipped at 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    sq = (a**2).sum(axis=1)[:, None] + (b**2).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    return np.maximum(sq, 0.0)


def knn_predict(
    train_x: np.ndarray,
    train_y: np.ndarray,
    queries: np.ndarray,
    k: int,
    chunk_size: int = 1024,
) -> np.ndarray:
    """Majority vote among the k nearest training rows per query.

    Distance ties resolve toward the lower training-row index; an even vote
    split resolves toward label 0.
    """
    train_x = np.asarray(train_x, dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.int64)
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if train_x.shape[0] == 0:
        raise DatasetError("empty training set")
    if not 1 <= k <= train_x.shape[0]:
        raise DatasetError(f"k {k} out of range 1..{train_x.shape[0]}")
    if queries.shape[1] != train_x.shape[1]:
        raise DatasetError("query dimension does not match training set")
    out = np.empty(queries.shape[0], dtype=np.int64)
    for lo in range(0, queries.shape[0], chunk_size):
        block = queries[lo : lo + chunk_size]
        dists = pairwise_sq_dists(block, train_x)
        # stable sort keeps lower training index first on exact ties
        nearest = np.argsort(dists, axis=1, kind="stable")[:, :k]
        votes = train_y[nearest].sum(axis=1)
        out[lo : lo + block.shape[0]] = (2 * votes > k).astype(np.int64)
    return out
