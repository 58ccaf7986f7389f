"""Bounds on the irreducible (Bayes) classification error.

The 1-NN test error e sandwiches the Bayes error E via

    (1 - sqrt(1 - 2e)) / 2  <=  E  <=  e,

so 1 - e and 1 - lower bound the best achievable accuracy from below and
above. For two isotropic Gaussian classes the exact Bayes error has a
closed form and serves as an oracle for the sandwich.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DatasetError
from .learn.neighbors import pairwise_sq_dists


def one_nn_error(
    train_x: np.ndarray,
    train_y: np.ndarray,
    test_x: np.ndarray,
    test_y: np.ndarray,
    chunk_size: int = 1024,
) -> float:
    """Fraction of test rows whose nearest training row has another label.

    Nearest-neighbor ties resolve toward the lower training-row index.
    """
    train_x = np.asarray(train_x, dtype=np.float64)
    train_y = np.asarray(train_y)
    test_x = np.asarray(test_x, dtype=np.float64)
    test_y = np.asarray(test_y)
    if train_x.shape[0] == 0 or test_x.shape[0] == 0:
        raise DatasetError("train and test sets must be nonempty")
    if train_x.shape[1] != test_x.shape[1]:
        raise DatasetError("feature dimension mismatch between train and test")
    errors = 0
    for lo in range(0, test_x.shape[0], chunk_size):
        block = test_x[lo : lo + chunk_size]
        nearest = np.argmin(pairwise_sq_dists(block, train_x), axis=1)
        errors += int(np.sum(train_y[nearest] != test_y[lo : lo + block.shape[0]]))
    return errors / test_x.shape[0]


def one_nn_error_loo(x: np.ndarray, y: np.ndarray, chunk_size: int = 1024) -> float:
    """Leave-one-out variant: each row's nearest neighbor among the others."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.shape[0] < 2:
        raise DatasetError("leave-one-out needs at least 2 rows")
    errors = 0
    for lo in range(0, x.shape[0], chunk_size):
        block = x[lo : lo + chunk_size]
        dists = pairwise_sq_dists(block, x)
        for row, col in enumerate(range(lo, lo + block.shape[0])):
            dists[row, col] = np.inf
        nearest = np.argmin(dists, axis=1)
        errors += int(np.sum(y[nearest] != y[lo : lo + block.shape[0]]))
    return errors / x.shape[0]


@dataclass(frozen=True)
class BayesBounds:
    e_nn: float
    bayes_lower: float
    bayes_upper: float
    max_accuracy_lower: float
    max_accuracy_upper: float

    def to_dict(self) -> dict:
        return {
            "e_nn": self.e_nn,
            "bayes_lower": self.bayes_lower,
            "bayes_upper": self.bayes_upper,
            "max_accuracy_lower": self.max_accuracy_lower,
            "max_accuracy_upper": self.max_accuracy_upper,
        }


def bayes_bounds(e_nn: float, clamp_slack: float = 0.02) -> BayesBounds:
    """Sandwich the Bayes error given a 1-NN error estimate in [0, 0.5].

    Estimates marginally above 0.5 (sampling noise, within ``clamp_slack``)
    are clamped with a warning; larger values are rejected.
    """
    if e_nn < 0:
        raise DatasetError(f"1-NN error {e_nn} is negative")
    if e_nn > 0.5:
        if e_nn <= 0.5 + clamp_slack:
            warnings.warn(
                f"1-NN error {e_nn:.4f} marginally above 0.5; clamping to 0.5",
                RuntimeWarning,
                stacklevel=2,
            )
            e_nn = 0.5
        else:
            raise DatasetError(
                f"1-NN error {e_nn} above 0.5: bound formula undefined; "
                "check label/feature pairing"
            )
    lower = (1.0 - math.sqrt(1.0 - 2.0 * e_nn)) / 2.0
    return BayesBounds(
        e_nn=e_nn,
        bayes_lower=lower,
        bayes_upper=e_nn,
        max_accuracy_lower=1.0 - e_nn,
        max_accuracy_upper=1.0 - lower,
    )


@dataclass(frozen=True)
class GaussianClassOracle:
    """Two-class mixture of isotropic Gaussians with known parameters."""

    priors: tuple[float, float]
    means: tuple[np.ndarray, np.ndarray]
    sigma: float

    def __post_init__(self) -> None:
        if len(self.priors) != 2 or len(self.means) != 2:
            raise DatasetError("oracle supports exactly two classes")
        if not all(0 < p < 1 for p in self.priors):
            raise DatasetError("priors must lie in (0, 1)")
        if abs(sum(self.priors) - 1.0) > 1e-9:
            raise DatasetError("priors must sum to 1")
        if self.sigma <= 0:
            raise DatasetError("sigma must be positive")
        object.__setattr__(
            self,
            "means",
            tuple(np.asarray(m, dtype=np.float64) for m in self.means),
        )
        if self.means[0].shape != self.means[1].shape:
            raise DatasetError("unsupported covariance structure: mean dimension mismatch")

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        labels = (rng.random(n) < self.priors[1]).astype(np.int64)
        dim = self.means[0].shape[0]
        x = rng.standard_normal((n, dim)) * self.sigma
        x += np.where(labels[:, None] == 1, self.means[1], self.means[0])
        return x, labels


def _phi(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def gaussian_bayes_error(oracle: GaussianClassOracle) -> float:
    """Exact Bayes error of the two-Gaussian oracle.

    The optimal rule thresholds the projection onto the mean difference;
    with equal priors this reduces to Phi(-d / (2 sigma)).
    """
    p0, p1 = oracle.priors
    d = float(np.linalg.norm(oracle.means[1] - oracle.means[0]))
    sigma = oracle.sigma
    if d == 0.0:
        return min(p0, p1)
    threshold = -(sigma**2 / d) * math.log(p1 / p0)
    return p0 * _phi(-(threshold + d / 2.0) / sigma) + p1 * _phi((threshold - d / 2.0) / sigma)
