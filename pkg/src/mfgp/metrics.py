"""Evaluation metrics for point and posterior predictions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import as_vector
from .errors import ConfigurationError

_EXP_OVERFLOW = 700.0


def rmse(pred, truth) -> float:
    p, t = as_vector(pred), as_vector(truth)
    if p.shape != t.shape:
        raise ConfigurationError("prediction/truth length mismatch")
    return float(np.sqrt(np.mean((p - t) ** 2)))


def gp_rmse(mean, variance, truth) -> float:
    """Posterior RMSE: pointwise variance added to the squared mean error,
    so it penalizes uncertainty as well as bias."""
    m, v, t = as_vector(mean), as_vector(variance), as_vector(truth)
    if not (m.shape == v.shape == t.shape):
        raise ConfigurationError("mean/variance/truth length mismatch")
    if (v < 0).any():
        raise ConfigurationError("negative variance")
    return float(np.sqrt(np.mean(v + (m - t) ** 2)))


def r_squared(pred, truth) -> float:
    """Squared sample Pearson correlation between predictions and truth."""
    p, t = as_vector(pred), as_vector(truth)
    if p.shape != t.shape:
        raise ConfigurationError("prediction/truth length mismatch")
    if p.shape[0] < 2:
        raise ConfigurationError("need at least two points")
    pc = p - p.mean()
    tc = t - t.mean()
    denom = float(pc @ pc) * float(tc @ tc)
    if denom == 0.0:
        raise ConfigurationError("constant vector: correlation undefined")
    r = float(pc @ tc) / math.sqrt(denom)
    return min(r * r, 1.0)


def log_ml_ratio(logml_a: float, logml_b: float) -> float:
    """Evidence ratio exp(logml_a - logml_b) with an overflow guard."""
    if not (math.isfinite(logml_a) and math.isfinite(logml_b)):
        raise ConfigurationError("log marginal likelihoods must be finite")
    diff = logml_a - logml_b
    if diff > _EXP_OVERFLOW:
        return math.inf
    return math.exp(diff)


def ci_coverage(mean, variance, truth, z: float) -> float:
    """Fraction of truths inside the +-z standard-deviation interval."""
    m, v, t = as_vector(mean), as_vector(variance), as_vector(truth)
    if not (m.shape == v.shape == t.shape):
        raise ConfigurationError("mean/variance/truth length mismatch")
    if z <= 0:
        raise ConfigurationError("z must be positive")
    return float(np.mean(np.abs(t - m) <= z * np.sqrt(np.maximum(v, 0.0))))


@dataclass(frozen=True)
class MetricsReport:
    """Per-estimator metric block; optional fields reflect capability."""

    rmse: float
    r_squared: float
    ci_z: float
    ci_coverage: float | None = None
    gp_rmse: float | None = None
    log_ml: float | None = None

    @classmethod
    def from_posterior(cls, mean, variance, truth, log_ml=None, z=2.0) -> "MetricsReport":
        return cls(
            rmse=rmse(mean, truth),
            r_squared=r_squared(mean, truth),
            ci_z=z,
            ci_coverage=ci_coverage(mean, variance, truth, z),
            gp_rmse=gp_rmse(mean, variance, truth),
            log_ml=log_ml,
        )

    @classmethod
    def from_point(cls, pred, truth, z=2.0) -> "MetricsReport":
        return cls(rmse=rmse(pred, truth), r_squared=r_squared(pred, truth), ci_z=z)

    def to_dict(self) -> dict:
        out = {"rmse": self.rmse, "r_squared": self.r_squared, "ci_z": self.ci_z}
        for key in ("ci_coverage", "gp_rmse", "log_ml"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out
