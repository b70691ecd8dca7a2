"""Deterministic point-estimate regressors usable as low-fidelity surrogates.

Each regressor implements ``train(features, targets)`` followed by
``predict(queries)`` and is a pure function of its training data
afterwards. Standardization of features/targets is owned by the caller;
these classes store whatever they are given verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .data import as_matrix, as_vector
from .errors import ConfigurationError
from .gp import TrainedGP, fit_gp, posterior
from .kernels import ARDKernel, ConstantMean
from .optimize import OptimizerConfig, maximize_mll

KNN_CHUNK = 256


class PointPredictor(Protocol):
    def train(self, features, targets) -> "PointPredictor": ...

    def predict(self, queries) -> np.ndarray: ...


class KNNRegressor:
    """Exact k-nearest-neighbor regression under Euclidean distance.

    Prediction is the unweighted mean of the k nearest stored targets;
    distance ties are broken by the lowest stored index. The selection is
    an exhaustive scan, so results never depend on an index structure.
    """

    def __init__(self, k: int = 5):
        if k < 1:
            raise ConfigurationError("k must be >= 1")
        self.k = int(k)
        self.stored_features = None
        self.stored_targets = None

    def train(self, features, targets) -> "KNNRegressor":
        X = as_matrix(features)
        y = as_vector(targets)
        if y.shape[0] != X.shape[0]:
            raise ConfigurationError("feature rows and target length differ")
        if self.k > X.shape[0]:
            raise ConfigurationError(f"k={self.k} exceeds {X.shape[0]} training rows")
        self.stored_features = X
        self.stored_targets = y
        return self

    def predict(self, queries) -> np.ndarray:
        if self.stored_features is None:
            raise ConfigurationError("predict called before train")
        Q = as_matrix(queries)
        X = self.stored_features
        if Q.shape[1] != X.shape[1]:
            raise ConfigurationError(
                f"query width {Q.shape[1]} != stored width {X.shape[1]}"
            )
        out = np.empty(Q.shape[0])
        for start in range(0, Q.shape[0], KNN_CHUNK):
            chunk = Q[start : start + KNN_CHUNK]
            out[start : start + chunk.shape[0]] = self._predict_chunk(chunk)
        return out

    def _predict_chunk(self, Q: np.ndarray) -> np.ndarray:
        X, y, k = self.stored_features, self.stored_targets, self.k
        d2 = ((Q[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
        cand = np.argpartition(d2, k - 1, axis=1)[:, :k]
        # Ascending index first, then a stable sort on distance, gives the
        # (distance, index) lexicographic order the tie-break rule demands.
        cand = np.sort(cand, axis=1)
        d2c = np.take_along_axis(d2, cand, axis=1)
        order = np.argsort(d2c, axis=1, kind="stable")
        sel = np.take_along_axis(cand, order, axis=1)
        kth = np.take_along_axis(d2c, order[:, -1:], axis=1)[:, 0]
        # argpartition may keep a high-index tie at the boundary while a
        # lower-index one exists outside the candidate set; rebuild those rows.
        n_eq_total = (d2 == kth[:, None]).sum(axis=1)
        n_eq_in = (d2c == kth[:, None]).sum(axis=1)
        for row in np.nonzero(n_eq_total != n_eq_in)[0]:
            strict = np.nonzero(d2[row] < kth[row])[0]
            ties = np.nonzero(d2[row] == kth[row])[0][: k - strict.shape[0]]
            cand_row = np.concatenate([strict, ties])
            order_row = np.lexsort((cand_row, d2[row, cand_row]))
            sel[row] = cand_row[order_row]
        return y[sel].mean(axis=1)


class LinearRegressor:
    """Ordinary least squares with intercept (appended last).

    Rank-deficient systems get the minimum-norm solution.
    """

    def __init__(self):
        self.weights = None

    def train(self, features, targets) -> "LinearRegressor":
        X = as_matrix(features)
        y = as_vector(targets)
        design = np.hstack([X, np.ones((X.shape[0], 1))])
        self.weights, *_ = np.linalg.lstsq(design, y, rcond=None)
        return self

    def predict(self, queries) -> np.ndarray:
        if self.weights is None:
            raise ConfigurationError("predict called before train")
        Q = as_matrix(queries)
        if Q.shape[1] != self.weights.shape[0] - 1:
            raise ConfigurationError(
                f"query width {Q.shape[1]} != fitted width {self.weights.shape[0] - 1}"
            )
        return Q @ self.weights[:-1] + self.weights[-1]


class GPMeanPredictor:
    """A fitted GP used as a point predictor: posterior mean only.

    Hyperparameters are tuned by marginal-likelihood ascent at training
    time; the predictive variance is discarded.
    """

    def __init__(self, optimizer: OptimizerConfig | None = None):
        self.optimizer = optimizer if optimizer is not None else OptimizerConfig()
        self.gp: TrainedGP | None = None
        self.log_ml: float | None = None

    def train(self, features, targets) -> "GPMeanPredictor":
        X = as_matrix(features)
        y = as_vector(targets)
        scale = float(y.std())
        if scale == 0.0:
            scale = 1.0
        kernel0 = ARDKernel(scale, np.ones(X.shape[1]))
        fit = maximize_mll(X, y, kernel0, ConstantMean(0.0), 0.1 * scale, self.optimizer)
        self.gp = fit_gp(X, y, fit.kernel, fit.mean, fit.noise_std)
        self.log_ml = fit.log_ml
        return self

    def predict(self, queries) -> np.ndarray:
        if self.gp is None:
            raise ConfigurationError("predict called before train")
        return posterior(self.gp, queries).mean


@dataclass(frozen=True)
class GPMeanWrapper:
    """Wrap an already-fitted GP as a point predictor."""

    gp: TrainedGP

    def predict(self, queries) -> np.ndarray:
        return posterior(self.gp, queries).mean
