"""Training-data containers and the affine feature/target transforms.

Fidelity levels are indexed from 1 (highest fidelity, the trusted
reference) to K (lowest). An :class:`MFDataset` stores them in that
order, so ``levels[0]`` is the high-fidelity set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


def as_matrix(x) -> np.ndarray:
    """Coerce to a 2-D float array; 1-D input becomes a single column."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ConfigurationError(f"expected a matrix, got ndim={arr.ndim}")
    return arr


def as_vector(y) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise ConfigurationError(f"expected a vector, got ndim={arr.ndim}")
    return arr


@dataclass(frozen=True)
class DataSet:
    """One fidelity level: inputs (N x d) and scalar outputs (length N)."""

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "inputs", as_matrix(self.inputs))
        object.__setattr__(self, "outputs", as_vector(self.outputs))
        n, d = self.inputs.shape
        if n < 1 or d < 1:
            raise ConfigurationError(f"dataset must be non-empty, got shape {(n, d)}")
        if self.outputs.shape[0] != n:
            raise ConfigurationError(
                f"{n} input rows but {self.outputs.shape[0]} outputs"
            )
        if not (np.isfinite(self.inputs).all() and np.isfinite(self.outputs).all()):
            raise ConfigurationError("dataset contains non-finite entries")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class MFDataset:
    """Ordered fidelity levels; ``levels[0]`` is the high-fidelity set.

    All levels share the input dimension. No nesting of inputs across
    levels is assumed, and outputs may be noisy.
    """

    levels: tuple[DataSet, ...]

    def __post_init__(self):
        levels = tuple(self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) < 1:
            raise ConfigurationError("need at least one fidelity level")
        d = levels[0].dim
        for i, lv in enumerate(levels):
            if lv.dim != d:
                raise ConfigurationError(
                    f"level {i + 1} has input dim {lv.dim}, expected {d}"
                )

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def dim(self) -> int:
        return self.levels[0].dim

    def level(self, index: int) -> DataSet:
        """1-based accessor: ``level(1)`` is the high-fidelity set."""
        if not 1 <= index <= len(self.levels):
            raise ConfigurationError(f"level {index} out of range 1..{len(self.levels)}")
        return self.levels[index - 1]


@dataclass(frozen=True)
class Standardizer:
    """Per-column affine transform z = (x - offset) / scale.

    Constant columns get scale 1 so the transform stays invertible.
    """

    offset: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = as_matrix(X)
        offset = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0.0, scale, 1.0)
        return cls(offset=offset, scale=scale)

    @classmethod
    def identity(cls, dim: int) -> "Standardizer":
        return cls(offset=np.zeros(dim), scale=np.ones(dim))

    def transform(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape[1] != self.offset.shape[0]:
            raise ConfigurationError(
                f"standardizer fitted on {self.offset.shape[0]} columns, got {X.shape[1]}"
            )
        return (X - self.offset) / self.scale

    def inverse(self, Z) -> np.ndarray:
        Z = as_matrix(Z)
        return Z * self.scale + self.offset
