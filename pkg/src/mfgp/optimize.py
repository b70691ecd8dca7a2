"""Type-II maximum-likelihood hyperparameter search.

ADAM ascent on the unconstrained parameterization (positive parameters
through natural log), stopping once the objective has gone a full
patience window without improving. The returned parameters are the best
ever observed, not the final iterate, so the reported optimum dominates
every initialization that was evaluated.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericalError, OptimizationError
from .gp import GPHyperparams, MLLProblem

NOISE_FLOOR = 1e-8


@dataclass(frozen=True)
class OptimizerConfig:
    patience: int = 1000
    max_iterations: int = 20000
    restarts: int = 1
    seed: int = 0
    learning_rate: float = 0.05

    def __post_init__(self):
        if self.patience < 1 or self.max_iterations < 1 or self.restarts < 1:
            raise ConfigurationError("patience, max_iterations, restarts must be >= 1")
        if self.patience > self.max_iterations:
            raise ConfigurationError("patience must not exceed max_iterations")
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.seed < 0:
            raise ConfigurationError("seed must be nonnegative")


@dataclass(frozen=True)
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def initial(cls, n: int, learning_rate: float, **kw) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0, learning_rate, **kw)


def adam_step(state: AdamState, gradient, params):
    """One bias-corrected ADAM update in the ascent direction."""
    g = np.asarray(gradient, dtype=float)
    p = np.asarray(params, dtype=float)
    if g.shape != p.shape or g.shape != state.first_moment.shape:
        raise ConfigurationError("gradient/parameter length mismatch")
    if not np.isfinite(g).all():
        raise NumericalError("non-finite gradient")
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * g
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * g**2
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_params = p + state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    new_state = AdamState(
        first_moment=m,
        second_moment=v,
        step_count=t,
        learning_rate=state.learning_rate,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
    )
    return new_params, new_state


def to_unconstrained(hp: GPHyperparams) -> np.ndarray:
    """Map hyperparameters to the optimizer's free coordinates.

    Order: (log amplitude, log lengthscales..., log noise_std, mean params).
    A zero noise_std is floored at log(1e-8) with a warning; the exact
    noiseless fit is still available through fit_gp directly.
    """
    noise = hp.noise_std
    if noise == 0.0:
        warnings.warn("noise_std = 0 floored at 1e-8 for unconstrained optimization")
        noise = NOISE_FLOOR
    return np.concatenate(
        [
            [math.log(hp.amplitude)],
            np.log(hp.lengthscales),
            [math.log(noise)],
            hp.mean_params,
        ]
    )


def from_unconstrained(v, n_lengthscales: int, mean_arity: int) -> GPHyperparams:
    v = np.asarray(v, dtype=float)
    expected = 2 + n_lengthscales + mean_arity
    if v.shape != (expected,):
        raise ConfigurationError(f"expected {expected} coordinates, got {v.shape}")
    return GPHyperparams(
        amplitude=math.exp(v[0]),
        lengthscales=np.exp(v[1 : 1 + n_lengthscales]),
        noise_std=math.exp(v[1 + n_lengthscales]),
        mean_params=v[2 + n_lengthscales :],
    )


@dataclass
class RunTrace:
    """Best-so-far objective per iteration of one restart (diagnostics)."""

    best_values: list = field(default_factory=list)


def ascend(value_and_grad, u0, cfg: OptimizerConfig, free_mask=None, trace=None):
    """ADAM-ascend one restart; returns (best_value, best_u, iterations).

    Raises NumericalError only if the initial point cannot be evaluated;
    a failure later in the run returns the best iterate found before it.
    """
    u = np.asarray(u0, dtype=float).copy()
    mask = np.ones_like(u) if free_mask is None else np.asarray(free_mask, float)
    value, grad = value_and_grad(u)
    if not np.isfinite(value):
        raise NumericalError("objective non-finite at the initial point")
    best_value, best_u = value, u.copy()
    if trace is not None:
        trace.best_values.append(best_value)
    state = AdamState.initial(u.shape[0], cfg.learning_rate)
    since_improvement = 0
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        try:
            u, state = adam_step(state, grad * mask, u)
            value, grad = value_and_grad(u)
            if not np.isfinite(value):
                raise NumericalError("objective became non-finite")
        except NumericalError:
            break
        if value > best_value:
            best_value, best_u = value, u.copy()
            since_improvement = 0
        else:
            since_improvement += 1
        if trace is not None:
            trace.best_values.append(best_value)
        if since_improvement >= cfg.patience:
            break
    return best_value, best_u, iterations


def maximize_objective(value_and_grad, u0, cfg: OptimizerConfig, free_mask=None):
    """Run cfg.restarts seeded ADAM ascents and keep the best ever seen.

    Restart r >= 1 perturbs the free coordinates of u0 with Gaussian
    noise of standard deviation 0.5 drawn from the seeded stream.
    Results are merged in restart order, so the outcome is independent
    of any scheduling.
    """
    u0 = np.asarray(u0, dtype=float)
    mask = np.ones_like(u0) if free_mask is None else np.asarray(free_mask, float)
    rng = np.random.default_rng(cfg.seed)
    best = None
    failures = []
    total_iterations = 0
    for r in range(cfg.restarts):
        start = u0 if r == 0 else u0 + 0.5 * rng.standard_normal(u0.shape) * mask
        try:
            value, u, iters = ascend(value_and_grad, start, cfg, free_mask=mask)
        except NumericalError as exc:
            failures.append(f"restart {r}: {exc}")
            continue
        total_iterations += iters
        if best is None or value > best[0]:
            best = (value, u)
    if best is None:
        raise OptimizationError(
            "all restarts failed numerically: " + "; ".join(failures)
        )
    return best[0], best[1], total_iterations


@dataclass(frozen=True)
class MLLFit:
    """Outcome of maximize_mll: fitted families plus the best objective."""

    kernel: object
    mean: object
    noise_std: float
    log_ml: float
    hyperparams: GPHyperparams
    iterations: int


def maximize_mll(
    features,
    targets,
    kernel,
    mean,
    noise_std: float,
    cfg: OptimizerConfig,
    free_mask=None,
) -> MLLFit:
    """Maximize the log marginal likelihood over kernel, noise, and mean.

    ``kernel`` / ``mean`` / ``noise_std`` provide the starting values;
    ``free_mask`` (same length as the unconstrained vector) pins selected
    coordinates at their initial values.
    """
    problem = MLLProblem(features, targets, kernel, mean)
    u0 = np.concatenate(
        [
            np.log(kernel.param_vector()),
            [math.log(max(noise_std, NOISE_FLOOR))],
            mean.param_vector(),
        ]
    )
    value, u, iterations = maximize_objective(
        problem.value_and_grad, u0, cfg, free_mask=free_mask
    )
    fitted_kernel, fitted_noise, fitted_mean = problem.split(u)
    return MLLFit(
        kernel=fitted_kernel,
        mean=fitted_mean,
        noise_std=fitted_noise,
        log_ml=value,
        hyperparams=GPHyperparams.from_parts(fitted_kernel, fitted_mean, fitted_noise),
        iterations=iterations,
    )
