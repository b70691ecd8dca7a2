"""Exact Gaussian-process regression on a fixed feature matrix.

Fitting factors K + (sigma^2 + jitter) I once with a Cholesky
decomposition; prediction, the log marginal likelihood, and its analytic
gradient all reuse that factor. The log determinant is always taken from
the Cholesky diagonal, never from a determinant routine.

Unconstrained parameter vector layout, used by the gradient and the
optimizer (positive parameters live in log space):

    [log kernel params (kernel order), log noise_std, mean params]

For an ARD kernel this is (log amplitude, log lengthscale_1..m,
log noise_std, mean coefficients).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .data import as_matrix, as_vector
from .errors import ConfigurationError, NumericalError
from .kernels import coord_sq_diffs

JITTER_START_FACTOR = 1e-10
JITTER_MAX_FACTOR = 1e-2
JITTER_GROWTH = 10.0


@dataclass(frozen=True)
class GPHyperparams:
    """Kernel scale parameters plus noise and mean coefficients.

    ``amplitude`` is the kernel's leading output scale and
    ``lengthscales`` the remaining positive kernel parameters in the
    kernel's documented order (for an ARD kernel, exactly the per-feature
    lengthscales).
    """

    amplitude: float
    lengthscales: np.ndarray
    noise_std: float
    mean_params: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "lengthscales", np.atleast_1d(np.asarray(self.lengthscales, float))
        )
        object.__setattr__(
            self, "mean_params", np.asarray(self.mean_params, float).reshape(-1)
        )
        if not self.amplitude > 0:
            raise ConfigurationError("amplitude must be positive")
        if not (self.lengthscales > 0).all():
            raise ConfigurationError("lengthscales must be positive")
        if self.noise_std < 0:
            raise ConfigurationError("noise_std must be nonnegative")

    @classmethod
    def from_parts(cls, kernel, mean, noise_std: float) -> "GPHyperparams":
        kp = kernel.param_vector()
        return cls(kp[0], kp[1:], float(noise_std), mean.param_vector())


@dataclass(frozen=True)
class PosteriorPrediction:
    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", as_vector(self.mean))
        object.__setattr__(self, "variance", as_vector(self.variance))
        if self.mean.shape != self.variance.shape:
            raise ConfigurationError("mean and variance lengths differ")


@dataclass(frozen=True)
class TrainedGP:
    """Immutable fitted state; safe to share across readers."""

    features: np.ndarray
    centered_targets: np.ndarray
    chol_factor: np.ndarray
    weights: np.ndarray
    hyperparams: GPHyperparams
    jitter_used: float
    kernel: object
    mean: object
    noise_std: float

    @property
    def n(self) -> int:
        return self.features.shape[0]


def kernel_matrix(kernel, X, X2=None) -> np.ndarray:
    """Cross-covariance matrix k(X, X2); symmetric when X2 is X."""
    return kernel.gram(X, X2)


def chol_with_jitter(A: np.ndarray, diag_scale: float):
    """Lower Cholesky factor of A + jitter*I under the escalation policy.

    Starts at JITTER_START_FACTOR * diag_scale and multiplies by 10 on
    failure, capped at JITTER_MAX_FACTOR * diag_scale. Returns (L, jitter).
    """
    n = A.shape[0]
    jitter = JITTER_START_FACTOR * diag_scale
    cap = JITTER_MAX_FACTOR * diag_scale
    idx = np.diag_indices(n)
    while True:
        Aj = A.copy()
        Aj[idx] += jitter
        try:
            L = cholesky(Aj, lower=True, check_finite=False)
            return L, jitter
        except np.linalg.LinAlgError:
            if jitter >= cap:
                raise NumericalError(
                    f"Cholesky failed at maximum jitter {jitter:.3e}", jitter=jitter
                )
            jitter = min(jitter * JITTER_GROWTH, cap)


def fit_gp(features, targets, kernel, mean, noise_std: float) -> TrainedGP:
    """Fit an exact GP to (features, targets) at fixed hyperparameters."""
    Phi = as_matrix(features)
    y = as_vector(targets)
    if y.shape[0] != Phi.shape[0]:
        raise ConfigurationError("feature rows and target length differ")
    if not np.isfinite(Phi).all() or not np.isfinite(y).all():
        raise ConfigurationError("non-finite training data")
    if noise_std < 0:
        raise ConfigurationError("noise_std must be nonnegative")

    K = kernel.gram(Phi)
    A = K + noise_std**2 * np.eye(Phi.shape[0])
    L, jitter = chol_with_jitter(A, float(np.mean(np.diag(K))))
    ytilde = y - mean(Phi)
    alpha = cho_solve((L, True), ytilde, check_finite=False)
    return TrainedGP(
        features=Phi,
        centered_targets=ytilde,
        chol_factor=L,
        weights=alpha,
        hyperparams=GPHyperparams.from_parts(kernel, mean, noise_std),
        jitter_used=jitter,
        kernel=kernel,
        mean=mean,
        noise_std=float(noise_std),
    )


def posterior(gp: TrainedGP, Xq, kernel=None, mean=None) -> PosteriorPrediction:
    """Posterior mean and variance at query features Xq.

    Variance is the latent-function variance (no observation noise) and
    is clamped at zero; tiny negative values are round-off.
    """
    kernel = gp.kernel if kernel is None else kernel
    mean = gp.mean if mean is None else mean
    Xq = as_matrix(Xq)
    if Xq.shape[1] != gp.features.shape[1]:
        raise ConfigurationError(
            f"query width {Xq.shape[1]} != trained feature width {gp.features.shape[1]}"
        )
    Kq = kernel.gram(Xq, gp.features)
    mu = Kq @ gp.weights + mean(Xq)
    V = solve_triangular(gp.chol_factor, Kq.T, lower=True, check_finite=False)
    var = kernel.diag(Xq) - np.sum(V**2, axis=0)
    return PosteriorPrediction(mean=mu, variance=np.maximum(var, 0.0))


def log_marginal_likelihood(gp: TrainedGP) -> float:
    """log p(targets | hyperparameters), from the stored Cholesky factor."""
    n = gp.n
    quad = float(gp.centered_targets @ gp.weights)
    logdet = 2.0 * float(np.sum(np.log(np.diag(gp.chol_factor))))
    return -0.5 * (quad + logdet + n * math.log(2.0 * math.pi))


class MLLProblem:
    """Log marginal likelihood of a GP family as a function of the
    unconstrained parameter vector, with analytic gradient.

    Per-coordinate squared differences of the training features are
    precomputed once; every evaluation then costs one Cholesky plus a
    handful of elementwise products.
    """

    def __init__(self, features, targets, kernel, mean):
        self.features = as_matrix(features)
        self.targets = as_vector(targets)
        if self.targets.shape[0] != self.features.shape[0]:
            raise ConfigurationError("feature rows and target length differ")
        self.kernel = kernel
        self.mean = mean
        self.n_kernel = kernel.n_params
        self.arity = mean.arity
        self.n_params = self.n_kernel + 1 + self.arity
        self._d2 = coord_sq_diffs(self.features)
        self._design = mean.design_matrix(self.features)
        self._eye = np.eye(self.features.shape[0])

    def split(self, u):
        """Unpack an unconstrained vector into (kernel, noise_std, mean)."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n_params,):
            raise ConfigurationError(
                f"expected {self.n_params} unconstrained params, got {u.shape}"
            )
        kernel = self.kernel.with_params(np.exp(u[: self.n_kernel]))
        noise_std = float(np.exp(u[self.n_kernel]))
        mean = self.mean.with_params(u[self.n_kernel + 1 :])
        return kernel, noise_std, mean

    def value(self, u) -> float:
        return self.value_and_grad(u)[0]

    def value_and_grad(self, u):
        kernel, noise_std, mean = self.split(u)
        n = self.features.shape[0]
        K, dKs = kernel.gram_with_log_gradients(self.features, self._d2)
        A = K + noise_std**2 * self._eye
        L, _ = chol_with_jitter(A, float(np.mean(np.diag(K))))
        ytilde = self.targets - mean(self.features)
        alpha = cho_solve((L, True), ytilde, check_finite=False)
        value = -0.5 * (
            float(ytilde @ alpha)
            + 2.0 * float(np.sum(np.log(np.diag(L))))
            + n * math.log(2.0 * math.pi)
        )
        Ainv = cho_solve((L, True), self._eye, check_finite=False)
        M = np.outer(alpha, alpha) - Ainv
        grad = np.empty(self.n_params)
        for j, dK in enumerate(dKs):
            grad[j] = 0.5 * np.vdot(M, dK)
        grad[self.n_kernel] = noise_std**2 * float(np.trace(M))
        if self.arity:
            grad[self.n_kernel + 1 :] = self._design.T @ alpha
        return value, grad


def mll_gradient(features, targets, kernel, mean, hp_unconstrained) -> np.ndarray:
    """Gradient of the log marginal likelihood at an unconstrained vector.

    Order: (log kernel params, log noise_std, mean params); length is
    kernel.n_params + 1 + mean.arity.
    """
    problem = MLLProblem(features, targets, kernel, mean)
    _, grad = problem.value_and_grad(hp_unconstrained)
    if not np.isfinite(grad).all():
        raise NumericalError("non-finite gradient entries")
    return grad
