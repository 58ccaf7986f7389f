"""Linear classifiers trained by a deterministic full-batch proximal
gradient method (FISTA with adaptive restart).

Both trainers minimize

    mean loss(y_i, w . x_i + b) + (1/C) * R(w)

with logistic loss or squared hinge, R either 0.5*||w||^2 or ||w||_1, and
an unpenalized bias. Labels are {0, 1} at the interface and mapped to
{-1, +1} internally. Optimization starts from zero weights, so results do
not depend on the seed argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DatasetError

KIND_LOGREG = "logreg"
KIND_LSVM = "lsvm"
KIND_KNN = "knn"


@dataclass
class TrainedModel:
    """A fitted classifier: linear decision function or kNN reference set."""

    kind: str
    penalty: str | None = None
    c: float | None = None
    k: int | None = None
    weights: np.ndarray | None = None
    bias: float = 0.0
    selected_features: np.ndarray | None = None
    calibration: tuple[float, float] | None = None
    train_x: np.ndarray | None = None
    train_y: np.ndarray | None = None
    n_iterations: int = 0
    grad_map_norm: float = math.nan
    objective: float = math.nan

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        if self.weights is None:
            raise DatasetError("not a linear model")
        return np.asarray(x, dtype=np.float64) @ self.weights + self.bias

    def predict(self, x: np.ndarray) -> np.ndarray:
        if self.kind == KIND_KNN:
            from .neighbors import knn_predict

            return knn_predict(self.train_x, self.train_y, x, self.k)
        return (self.decision_function(x) > 0).astype(np.int64)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        from .calibration import platt_probability

        if self.calibration is None:
            raise DatasetError("model has no calibration parameters")
        a, b = self.calibration
        return platt_probability(self.decision_function(x), a, b)


def _loss_terms(kind: str, margins: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(per-sample loss, dloss/dmargin) for margins y * (w.x + b)."""
    if kind == KIND_LOGREG:
        loss = np.logaddexp(0.0, -margins)
        # -sigmoid(-m), computed stably
        grad = -np.exp(-np.logaddexp(0.0, margins))
        return loss, grad
    if kind == KIND_LSVM:
        gap = np.maximum(0.0, 1.0 - margins)
        return gap**2, -2.0 * gap
    raise DatasetError(f"unknown linear kind {kind!r}")


def objective_value(
    weights: np.ndarray,
    bias: float,
    x: np.ndarray,
    y01: np.ndarray,
    kind: str,
    penalty: str,
    c: float,
) -> float:
    """The exact objective the trainers minimize (mean loss + penalty)."""
    y = 2.0 * np.asarray(y01, dtype=np.float64) - 1.0
    margins = y * (x @ weights + bias)
    loss = float(_loss_terms(kind, margins)[0].mean())
    if penalty == "l2":
        reg = 0.5 * float(weights @ weights) / c
    elif penalty == "l1":
        reg = float(np.abs(weights).sum()) / c
    else:
        raise DatasetError(f"unknown penalty {penalty!r}")
    return loss + reg


def smooth_gradient(
    weights: np.ndarray,
    bias: float,
    x: np.ndarray,
    y01: np.ndarray,
    kind: str,
    penalty: str,
    c: float,
) -> tuple[np.ndarray, float]:
    """Gradient of the smooth part (mean loss, plus the l2 term if any)."""
    y = 2.0 * np.asarray(y01, dtype=np.float64) - 1.0
    margins = y * (x @ weights + bias)
    dmargin = _loss_terms(kind, margins)[1] * y / x.shape[0]
    gw = x.T @ dmargin
    gb = float(dmargin.sum())
    if penalty == "l2":
        gw = gw + weights / c
    return gw, gb


def _lipschitz_bound(x: np.ndarray, kind: str, penalty: str, c: float) -> float:
    n = x.shape[0]
    augmented = np.empty((x.shape[1] + 1, x.shape[1] + 1))
    gram = x.T @ x
    augmented[:-1, :-1] = gram
    col = x.sum(axis=0)
    augmented[:-1, -1] = col
    augmented[-1, :-1] = col
    augmented[-1, -1] = n
    top = float(np.linalg.eigvalsh(augmented)[-1])
    curvature = 0.25 if kind == KIND_LOGREG else 2.0
    bound = curvature * top / n
    if penalty == "l2":
        bound += 1.0 / c
    return max(bound, 1e-12)


def _soft_threshold(v: np.ndarray, amount: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - amount, 0.0)


def _fit_linear(
    x: np.ndarray,
    y01: np.ndarray,
    kind: str,
    penalty: str,
    c: float,
    max_iter: int,
    tol: float,
) -> tuple[np.ndarray, float, int, float]:
    n, d = x.shape
    step = 1.0 / _lipschitz_bound(x, kind, penalty, c)
    shrink = step / c if penalty == "l1" else 0.0

    def prox(v: np.ndarray) -> np.ndarray:
        return _soft_threshold(v, shrink) if penalty == "l1" else v

    w = np.zeros(d)
    b = 0.0
    w_prev, b_prev = w, b
    t_prev = 1.0
    grad_map = math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        t = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_prev * t_prev))
        beta = (t_prev - 1.0) / t
        zw = w + beta * (w - w_prev)
        zb = b + beta * (b - b_prev)
        gw, gb = smooth_gradient(zw, zb, x, y01, kind, penalty, c)
        w_next = prox(zw - step * gw)
        b_next = zb - step * gb
        # adaptive restart: momentum points against the last move
        if (zw - w_next) @ (w_next - w) + (zb - b_next) * (b_next - b) > 0:
            t = 1.0
            gw, gb = smooth_gradient(w, b, x, y01, kind, penalty, c)
            w_next = prox(w - step * gw)
            b_next = b - step * gb
        w_prev, b_prev = w, b
        w, b = w_next, b_next
        t_prev = t
        gw, gb = smooth_gradient(w, b, x, y01, kind, penalty, c)
        map_w = (w - prox(w - step * gw)) / step
        grad_map = math.sqrt(float(map_w @ map_w) + gb * gb)
        if grad_map < tol:
            break
    return w, b, iterations, grad_map


def _train(
    x: np.ndarray,
    y: np.ndarray,
    kind: str,
    penalty: str,
    c: float,
    max_iter: int,
    tol: float,
) -> TrainedModel:
    x = np.asarray(x, dtype=np.float64)
    y01 = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != y01.shape[0]:
        raise DatasetError("feature matrix and labels are misaligned")
    classes = np.unique(y01)
    if classes.size < 2:
        raise DatasetError("single-class training set")
    if not set(classes.tolist()) <= {0, 1}:
        raise DatasetError("labels must be binary 0/1")
    if c <= 0:
        raise DatasetError("C must be positive")
    w, b, iterations, grad_map = _fit_linear(x, y01, kind, penalty, c, max_iter, tol)
    return TrainedModel(
        kind=kind,
        penalty=penalty,
        c=c,
        weights=w,
        bias=b,
        n_iterations=iterations,
        grad_map_norm=grad_map,
        objective=objective_value(w, b, x, y01, kind, penalty, c),
    )


def train_logreg(
    x: np.ndarray,
    y: np.ndarray,
    penalty: str = "l2",
    c: float = 1.0,
    seed: int = 0,
    max_iter: int = 1000,
    tol: float = 1e-6,
) -> TrainedModel:
    """Logistic regression; ``seed`` is accepted for interface symmetry but
    unused because optimization starts from zero weights."""
    del seed
    return _train(x, y, KIND_LOGREG, penalty, c, max_iter, tol)


def train_linear_svm(
    x: np.ndarray,
    y: np.ndarray,
    penalty: str = "l2",
    c: float = 1.0,
    seed: int = 0,
    max_iter: int = 1000,
    tol: float = 1e-6,
) -> TrainedModel:
    """Linear SVM with squared hinge loss; same optimizer contract as
    train_logreg."""
    del seed
    return _train(x, y, KIND_LSVM, penalty, c, max_iter, tol)


def select_features(model: TrainedModel, threshold: float = 1e-5) -> np.ndarray:
    """Indices of weights with magnitude >= threshold, ascending."""
    if model.kind == KIND_KNN or model.weights is None:
        raise DatasetError("not a linear model")
    if model.penalty != "l1":
        raise DatasetError("feature selection requires an l1-penalized model")
    return np.flatnonzero(np.abs(model.weights) >= threshold)
