"""Kernel covariance and mean functions.

Kernels are immutable value objects. Each one exposes a flat vector of
positive parameters (``param_vector`` / ``with_params``) in a fixed,
documented order so the optimizer can treat every kernel uniformly, and
``gram_with_log_gradients`` returns the Gram matrix together with its
derivatives with respect to the *log* of each parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import as_matrix
from .errors import ConfigurationError


def coord_sq_diffs(X, X2=None) -> np.ndarray:
    """Per-coordinate squared differences, shape (m, N, M).

    Precomputed once per training set: the optimizer reweights these by
    1/lengthscale^2 at every iteration without touching the data again.
    """
    X = as_matrix(X)
    X2 = X if X2 is None else as_matrix(X2)
    if X.shape[1] != X2.shape[1]:
        raise ConfigurationError(
            f"column mismatch: {X.shape[1]} vs {X2.shape[1]}"
        )
    diff = X.T[:, :, None] - X2.T[:, None, :]
    return diff**2


@dataclass(frozen=True)
class ARDKernel:
    """Anisotropic squared-exponential kernel with one lengthscale per input.

    k(x, x') = amplitude^2 * exp(-1/2 * sum_i (x_i - x'_i)^2 / lengthscales_i^2)

    Parameter vector order: (amplitude, lengthscale_1, ..., lengthscale_m).
    """

    amplitude: float
    lengthscales: np.ndarray

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "amplitude", float(self.amplitude))
        if not self.amplitude > 0:
            raise ConfigurationError("kernel amplitude must be positive")
        if not (ls > 0).all():
            raise ConfigurationError("lengthscales must be positive")

    @property
    def n_inputs(self) -> int:
        return self.lengthscales.shape[0]

    @property
    def n_params(self) -> int:
        return 1 + self.n_inputs

    def param_vector(self) -> np.ndarray:
        return np.concatenate([[self.amplitude], self.lengthscales])

    def with_params(self, v) -> "ARDKernel":
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n_params,):
            raise ConfigurationError(f"expected {self.n_params} params, got {v.shape}")
        return ARDKernel(v[0], v[1:])

    def __call__(self, x, x2) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        x2 = np.atleast_1d(np.asarray(x2, dtype=float))
        if x.shape != x2.shape or x.shape != self.lengthscales.shape:
            raise ConfigurationError("vector lengths must match the lengthscale count")
        r2 = np.sum((x - x2) ** 2 / self.lengthscales**2)
        return float(self.amplitude**2 * np.exp(-0.5 * r2))

    def gram(self, X, X2=None) -> np.ndarray:
        d2 = coord_sq_diffs(X, X2)
        if d2.shape[0] != self.n_inputs:
            raise ConfigurationError(
                f"kernel has {self.n_inputs} lengthscales, inputs have {d2.shape[0]} columns"
            )
        inv = 1.0 / self.lengthscales**2
        r2 = np.tensordot(inv, d2, axes=1)
        return self.amplitude**2 * np.exp(-0.5 * r2)

    def diag(self, X) -> np.ndarray:
        X = as_matrix(X)
        return np.full(X.shape[0], self.amplitude**2)

    def gram_with_log_gradients(self, X, d2=None):
        """Gram matrix K plus dK/d(log p) for each parameter, in order."""
        if d2 is None:
            d2 = coord_sq_diffs(X)
        inv = 1.0 / self.lengthscales**2
        r2 = np.tensordot(inv, d2, axes=1)
        K = self.amplitude**2 * np.exp(-0.5 * r2)
        grads = [2.0 * K]
        for i in range(self.n_inputs):
            grads.append(K * (d2[i] * inv[i]))
        return K, grads


@dataclass(frozen=True)
class NARGPKernel:
    """Composite multifidelity kernel over features z = [x, h].

    k(z, z') = k_p(x, x') * k_h(h, h') + k_delta(x, x')

    where x holds the first d coordinates and h the last one (a
    lower-fidelity prediction). Parameter vector order: the k_p block,
    then the k_h block, then the k_delta block, each as
    (amplitude, lengthscales...).
    """

    k_p: ARDKernel
    k_h: ARDKernel
    k_delta: ARDKernel

    def __post_init__(self):
        if self.k_h.n_inputs != 1:
            raise ConfigurationError("k_h acts on the single prediction coordinate")
        if self.k_p.n_inputs != self.k_delta.n_inputs:
            raise ConfigurationError("k_p and k_delta must share the input coordinates")

    @classmethod
    def default(cls, x_dim: int, amplitude: float = 1.0) -> "NARGPKernel":
        # Split the output scale so k_p*k_h and k_delta both start near amplitude^2.
        root = float(np.sqrt(amplitude))
        return cls(
            k_p=ARDKernel(root, np.ones(x_dim)),
            k_h=ARDKernel(root, np.ones(1)),
            k_delta=ARDKernel(amplitude, np.ones(x_dim)),
        )

    @property
    def x_dim(self) -> int:
        return self.k_p.n_inputs

    @property
    def n_inputs(self) -> int:
        return self.x_dim + 1

    @property
    def n_params(self) -> int:
        return self.k_p.n_params + self.k_h.n_params + self.k_delta.n_params

    def param_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.k_p.param_vector(), self.k_h.param_vector(), self.k_delta.param_vector()]
        )

    def with_params(self, v) -> "NARGPKernel":
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n_params,):
            raise ConfigurationError(f"expected {self.n_params} params, got {v.shape}")
        a = self.k_p.n_params
        b = a + self.k_h.n_params
        return NARGPKernel(
            k_p=self.k_p.with_params(v[:a]),
            k_h=self.k_h.with_params(v[a:b]),
            k_delta=self.k_delta.with_params(v[b:]),
        )

    def _split(self, X):
        X = as_matrix(X)
        if X.shape[1] != self.n_inputs:
            raise ConfigurationError(
                f"kernel expects {self.n_inputs} feature columns, got {X.shape[1]}"
            )
        return X[:, : self.x_dim], X[:, self.x_dim :]

    def __call__(self, z, z2) -> float:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        z2 = np.atleast_1d(np.asarray(z2, dtype=float))
        d = self.x_dim
        return self.k_p(z[:d], z2[:d]) * self.k_h(z[d:], z2[d:]) + self.k_delta(
            z[:d], z2[:d]
        )

    def gram(self, X, X2=None) -> np.ndarray:
        x, h = self._split(X)
        if X2 is None:
            x2, h2 = x, h
        else:
            x2, h2 = self._split(X2)
        return self.k_p.gram(x, x2) * self.k_h.gram(h, h2) + self.k_delta.gram(x, x2)

    def diag(self, X) -> np.ndarray:
        X = as_matrix(X)
        val = self.k_p.amplitude**2 * self.k_h.amplitude**2 + self.k_delta.amplitude**2
        return np.full(X.shape[0], val)

    def gram_with_log_gradients(self, X, d2=None):
        if d2 is None:
            d2 = coord_sq_diffs(X)
        d = self.x_dim
        inv_p = 1.0 / self.k_p.lengthscales**2
        inv_h = 1.0 / self.k_h.lengthscales**2
        inv_d = 1.0 / self.k_delta.lengthscales**2
        P = self.k_p.amplitude**2 * self.k_h.amplitude**2 * np.exp(
            -0.5 * (np.tensordot(inv_p, d2[:d], axes=1) + inv_h[0] * d2[d])
        )
        Delta = self.k_delta.amplitude**2 * np.exp(
            -0.5 * np.tensordot(inv_d, d2[:d], axes=1)
        )
        K = P + Delta
        grads = [2.0 * P]
        grads += [P * (d2[i] * inv_p[i]) for i in range(d)]
        grads.append(2.0 * P)
        grads.append(P * (d2[d] * inv_h[0]))
        grads.append(2.0 * Delta)
        grads += [Delta * (d2[i] * inv_d[i]) for i in range(d)]
        return K, grads


@dataclass(frozen=True)
class ZeroMean:
    """Identically zero; no trainable coefficients."""

    arity: int = 0

    def param_vector(self) -> np.ndarray:
        return np.zeros(0)

    def with_params(self, v) -> "ZeroMean":
        return self

    def __call__(self, Phi) -> np.ndarray:
        return np.zeros(as_matrix(Phi).shape[0])

    def design_matrix(self, Phi) -> np.ndarray:
        return np.zeros((as_matrix(Phi).shape[0], 0))


@dataclass(frozen=True)
class ConstantMean:
    value: float = 0.0
    arity: int = 1

    def param_vector(self) -> np.ndarray:
        return np.array([self.value], dtype=float)

    def with_params(self, v) -> "ConstantMean":
        return ConstantMean(float(np.asarray(v).reshape(1)[0]))

    def __call__(self, Phi) -> np.ndarray:
        return np.full(as_matrix(Phi).shape[0], self.value)

    def design_matrix(self, Phi) -> np.ndarray:
        return np.ones((as_matrix(Phi).shape[0], 1))


@dataclass(frozen=True)
class LinearMean:
    """Affine function of the feature vector: coefficients . phi + intercept.

    On augmented multifidelity features the coefficients split into
    weights on the raw inputs and weights on each appended low-fidelity
    prediction, so the mean is itself a simple multifidelity predictor
    that keeps extrapolation anchored where high-fidelity data run out.
    """

    coefficients: np.ndarray
    intercept: float = 0.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=float))
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "intercept", float(self.intercept))

    @classmethod
    def zeros(cls, n_features: int) -> "LinearMean":
        return cls(np.zeros(n_features), 0.0)

    @property
    def arity(self) -> int:
        return self.coefficients.shape[0] + 1

    def param_vector(self) -> np.ndarray:
        return np.concatenate([self.coefficients, [self.intercept]])

    def with_params(self, v) -> "LinearMean":
        v = np.asarray(v, dtype=float)
        if v.shape != (self.arity,):
            raise ConfigurationError(f"expected {self.arity} mean params, got {v.shape}")
        return LinearMean(v[:-1], v[-1])

    def __call__(self, Phi) -> np.ndarray:
        Phi = as_matrix(Phi)
        if Phi.shape[1] != self.coefficients.shape[0]:
            raise ConfigurationError(
                f"mean expects {self.coefficients.shape[0]} feature columns, got {Phi.shape[1]}"
            )
        return Phi @ self.coefficients + self.intercept

    def design_matrix(self, Phi) -> np.ndarray:
        Phi = as_matrix(Phi)
        return np.hstack([Phi, np.ones((Phi.shape[0], 1))])


def mean_eval(phi, mean) -> float:
    """Evaluate a mean function at a single feature vector."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    return float(mean(phi.reshape(1, -1))[0])
