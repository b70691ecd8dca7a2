"""Joint multi-output GP over all fidelity levels.

Cross-covariances use a rank-constrained linear combination of shared
ARD kernels: block (i, j) of the joint Gram matrix is

    sum_r B^(r)_ij * k_r(X_i, X_j),   B^(r) = a^(r) a^(r)^T + diag(d^(r))

with d^(r) >= 0, so every coefficient matrix (and hence the joint Gram
matrix) is positive semidefinite by construction. All levels share one
pooled input standardizer; targets are centered per level with a free
constant mean per level on top.

Unconstrained parameter order: per shared kernel its log params, then
every a^(r) (raw), then every log d^(r), then the per-level log noise
standard deviations, then the per-level constant means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .data import MFDataset, Standardizer, as_matrix
from .errors import CapacityError, ConfigurationError
from .gp import PosteriorPrediction, chol_with_jitter
from .kernels import ARDKernel, coord_sq_diffs
from .optimize import OptimizerConfig, maximize_objective

MAX_JOINT_POINTS = 5000


@dataclass(frozen=True)
class CokrigingParams:
    kernels: tuple[ARDKernel, ...]
    factors: tuple[np.ndarray, ...]  # a^(r), one K-vector per shared kernel
    diags: tuple[np.ndarray, ...]  # d^(r) >= 0, one K-vector per shared kernel
    noise_stds: np.ndarray  # per level
    constant_means: np.ndarray  # per level, in centered target space

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(np.asarray(a, float) for a in self.factors))
        object.__setattr__(self, "diags", tuple(np.asarray(d, float) for d in self.diags))
        object.__setattr__(self, "noise_stds", np.asarray(self.noise_stds, float))
        object.__setattr__(self, "constant_means", np.asarray(self.constant_means, float))
        K = self.noise_stds.shape[0]
        if len(self.factors) != len(self.kernels) or len(self.diags) != len(self.kernels):
            raise ConfigurationError("one factor and diagonal vector per shared kernel")
        for a, dv in zip(self.factors, self.diags):
            if a.shape != (K,) or dv.shape != (K,):
                raise ConfigurationError("factor/diagonal length must equal level count")
            if (dv < 0).any():
                raise ConfigurationError("coefficient diagonals must be nonnegative")

    @property
    def rank(self) -> int:
        return len(self.kernels)

    @property
    def n_levels(self) -> int:
        return self.noise_stds.shape[0]

    def coeff_matrix(self, r: int) -> np.ndarray:
        return np.outer(self.factors[r], self.factors[r]) + np.diag(self.diags[r])


def joint_gram(params: CokrigingParams, inputs: tuple[np.ndarray, ...]) -> np.ndarray:
    """Noise-free joint Gram matrix over the stacked level inputs."""
    Xcat = np.vstack(inputs)
    sizes = [x.shape[0] for x in inputs]
    expand = np.repeat(np.arange(len(inputs)), sizes)
    K = np.zeros((Xcat.shape[0], Xcat.shape[0]))
    for r in range(params.rank):
        B = params.coeff_matrix(r)
        W = B[np.ix_(expand, expand)]
        K += W * params.kernels[r].gram(Xcat)
    return K


class CokrigingProblem:
    """Joint log marginal likelihood with analytic gradient."""

    def __init__(self, inputs, targets_centered, template: CokrigingParams):
        self.inputs = tuple(as_matrix(x) for x in inputs)
        self.sizes = [x.shape[0] for x in self.inputs]
        self.starts = np.concatenate([[0], np.cumsum(self.sizes)[:-1]]).astype(int)
        self.expand = np.repeat(np.arange(len(self.inputs)), self.sizes)
        self.Xcat = np.vstack(self.inputs)
        self.ycat = np.concatenate([np.asarray(t, float) for t in targets_centered])
        self.template = template
        self._d2 = coord_sq_diffs(self.Xcat)
        self._eye = np.eye(self.Xcat.shape[0])
        self.R = template.rank
        self.K_levels = template.n_levels
        self.n_kernel = sum(k.n_params for k in template.kernels)
        self.n_params = (
            self.n_kernel + 2 * self.R * self.K_levels + 2 * self.K_levels
        )

    def pack(self, params: CokrigingParams) -> np.ndarray:
        parts = [np.log(k.param_vector()) for k in params.kernels]
        parts += [a for a in params.factors]
        parts += [np.log(np.maximum(dv, 1e-300)) for dv in params.diags]
        parts.append(np.log(np.maximum(params.noise_stds, 1e-8)))
        parts.append(params.constant_means)
        return np.concatenate(parts)

    def unpack(self, u) -> CokrigingParams:
        u = np.asarray(u, float)
        if u.shape != (self.n_params,):
            raise ConfigurationError(f"expected {self.n_params} params, got {u.shape}")
        pos = 0
        kernels = []
        for k in self.template.kernels:
            kernels.append(k.with_params(np.exp(u[pos : pos + k.n_params])))
            pos += k.n_params
        Kl = self.K_levels
        factors = tuple(u[pos + r * Kl : pos + (r + 1) * Kl].copy() for r in range(self.R))
        pos += self.R * Kl
        diags = tuple(np.exp(u[pos + r * Kl : pos + (r + 1) * Kl]) for r in range(self.R))
        pos += self.R * Kl
        noise = np.exp(u[pos : pos + Kl])
        gammas = u[pos + Kl :].copy()
        return CokrigingParams(tuple(kernels), factors, diags, noise, gammas)

    def _block_sums(self, P: np.ndarray) -> np.ndarray:
        S = np.add.reduceat(P, self.starts, axis=0)
        return np.add.reduceat(S, self.starts, axis=1)

    def value_and_grad(self, u):
        p = self.unpack(u)
        n = self.Xcat.shape[0]
        grams = []
        dgrams = []
        Ktilde = np.zeros((n, n))
        weights = []
        for r in range(self.R):
            G, dG = p.kernels[r].gram_with_log_gradients(self.Xcat, self._d2)
            W = p.coeff_matrix(r)[np.ix_(self.expand, self.expand)]
            Ktilde += W * G
            grams.append(G)
            dgrams.append(dG)
            weights.append(W)
        noise_diag = (p.noise_stds**2)[self.expand]
        A = Ktilde + np.diag(noise_diag)
        L, _ = chol_with_jitter(A, float(np.mean(np.diag(Ktilde))))
        ytilde = self.ycat - p.constant_means[self.expand]
        alpha = cho_solve((L, True), ytilde, check_finite=False)
        value = -0.5 * (
            float(ytilde @ alpha)
            + 2.0 * float(np.sum(np.log(np.diag(L))))
            + n * math.log(2.0 * math.pi)
        )
        Ainv = cho_solve((L, True), self._eye, check_finite=False)
        M = np.outer(alpha, alpha) - Ainv

        grad = np.empty(self.n_params)
        pos = 0
        for r in range(self.R):
            for dG in dgrams[r]:
                grad[pos] = 0.5 * np.vdot(M, weights[r] * dG)
                pos += 1
        Kl = self.K_levels
        for r in range(self.R):
            S = self._block_sums(M * grams[r])
            grad[pos : pos + Kl] = S @ p.factors[r]
            pos += Kl
        for r in range(self.R):
            S = self._block_sums(M * grams[r])
            grad[pos : pos + Kl] = 0.5 * p.diags[r] * np.diag(S)
            pos += Kl
        diag_M = np.diag(M)
        for lvl in range(Kl):
            block = self.expand == lvl
            grad[pos + lvl] = p.noise_stds[lvl] ** 2 * float(diag_M[block].sum())
        pos += Kl
        for lvl in range(Kl):
            block = self.expand == lvl
            grad[pos + lvl] = float(alpha[block].sum())
        return value, grad


@dataclass(frozen=True)
class CokrigingModel:
    params: CokrigingParams
    scaler: Standardizer
    inputs: tuple[np.ndarray, ...]  # standardized, per level
    target_means: np.ndarray
    chol_factor: np.ndarray
    weights: np.ndarray
    jitter_used: float
    log_ml: float

    def predict(self, Xq) -> PosteriorPrediction:
        Zq = self.scaler.transform(Xq)
        rows = np.zeros((Zq.shape[0], self.chol_factor.shape[0]))
        prior_var = 0.0
        for r in range(self.params.rank):
            B = self.params.coeff_matrix(r)
            blocks = [
                B[0, j] * self.params.kernels[r].gram(Zq, self.inputs[j])
                for j in range(self.params.n_levels)
            ]
            rows += np.hstack(blocks)
            prior_var += B[0, 0] * self.params.kernels[r].amplitude ** 2
        mu = rows @ self.weights + self.params.constant_means[0] + self.target_means[0]
        V = solve_triangular(self.chol_factor, rows.T, lower=True, check_finite=False)
        var = prior_var - np.sum(V**2, axis=0)
        return PosteriorPrediction(mu, np.maximum(var, 0.0))


def _prepare(mf: MFDataset):
    total = sum(lv.n for lv in mf.levels)
    if total > MAX_JOINT_POINTS:
        raise CapacityError(
            f"joint dense solve limited to {MAX_JOINT_POINTS} points, got {total}"
        )
    scaler = Standardizer.fit(np.vstack([lv.inputs for lv in mf.levels]))
    inputs = tuple(scaler.transform(lv.inputs) for lv in mf.levels)
    target_means = np.array([float(lv.outputs.mean()) for lv in mf.levels])
    targets = [lv.outputs - m for lv, m in zip(mf.levels, target_means)]
    return scaler, inputs, target_means, targets


def fit_cokriging_at(mf: MFDataset, params: CokrigingParams) -> CokrigingModel:
    """Assemble the joint posterior at fixed parameters (no optimization)."""
    scaler, inputs, target_means, targets = _prepare(mf)
    Ktilde = joint_gram(params, inputs)
    expand = np.repeat(np.arange(len(inputs)), [x.shape[0] for x in inputs])
    A = Ktilde + np.diag((params.noise_stds**2)[expand])
    L, jitter = chol_with_jitter(A, float(np.mean(np.diag(Ktilde))))
    ytilde = np.concatenate(targets) - params.constant_means[expand]
    alpha = cho_solve((L, True), ytilde, check_finite=False)
    log_ml = -0.5 * (
        float(ytilde @ alpha)
        + 2.0 * float(np.sum(np.log(np.diag(L))))
        + ytilde.shape[0] * math.log(2.0 * math.pi)
    )
    return CokrigingModel(
        params=params,
        scaler=scaler,
        inputs=inputs,
        target_means=target_means,
        chol_factor=L,
        weights=alpha,
        jitter_used=jitter,
        log_ml=log_ml,
    )


def default_cokriging_params(mf: MFDataset, rank: int) -> CokrigingParams:
    ycat = np.concatenate([lv.outputs - lv.outputs.mean() for lv in mf.levels])
    scale = float(ycat.std()) or 1.0
    K = mf.n_levels
    kernels = tuple(ARDKernel(scale, np.ones(mf.dim)) for _ in range(rank))
    factors = tuple(np.full(K, 1.0 / math.sqrt(rank)) for _ in range(rank))
    diags = tuple(np.full(K, 0.1) for _ in range(rank))
    noise = np.array(
        [0.1 * (float(lv.outputs.std()) or 1.0) for lv in mf.levels]
    )
    return CokrigingParams(kernels, factors, diags, noise, np.zeros(K))


def train_cokriging(
    mf: MFDataset, optimizer: OptimizerConfig, rank: int = 2
) -> CokrigingModel:
    """Maximize the joint marginal likelihood, then refit at the optimum."""
    if rank < 1:
        raise ConfigurationError("rank must be >= 1")
    scaler, inputs, target_means, targets = _prepare(mf)
    init = default_cokriging_params(mf, rank)
    problem = CokrigingProblem(inputs, targets, init)
    _, best_u, _ = maximize_objective(problem.value_and_grad, problem.pack(init), optimizer)
    return fit_cokriging_at(mf, problem.unpack(best_u))
