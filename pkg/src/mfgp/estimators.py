"""Multifidelity estimators built from per-level surrogate models.

The feature-augmentation estimator trains surrogates from the lowest
fidelity upward; each level's predictions become an extra input column
for every level above it, so the final high-fidelity GP sees the raw
inputs plus one column per low-fidelity surrogate. The autoregressive
baselines (scaled-residual chain and the composite-kernel chain) only
pass information one level at a time.

Conventions shared by every estimator here:

- inputs are standardized per feature with statistics of the training
  set the surrogate is fitted on; targets are centered by their mean;
  both transforms are replayed at prediction time;
- reported log marginal likelihoods live in that centered target space;
- randomness is confined to seeded restarts, with one child seed per
  fidelity level, so training is bitwise reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import DataSet, MFDataset, Standardizer, as_matrix, as_vector
from .errors import ConfigurationError
from .gp import PosteriorPrediction, TrainedGP, fit_gp, posterior
from .kernels import ARDKernel, ConstantMean, LinearMean, NARGPKernel, ZeroMean
from .optimize import OptimizerConfig, maximize_mll
from .surrogates import GPMeanPredictor, KNNRegressor, LinearRegressor

PINNED_LENGTHSCALE = 1e8


@dataclass(frozen=True)
class SurrogateSpec:
    """Choice of low-fidelity point predictor for one level."""

    kind: str = "gp"  # "gp" | "knn" | "linear"
    knn_k: int = 5

    def __post_init__(self):
        if self.kind not in ("gp", "knn", "linear"):
            raise ConfigurationError(f"unknown surrogate kind {self.kind!r}")


@dataclass(frozen=True)
class TrainConfig:
    """Knobs shared by all estimators in one training run.

    ``surrogates`` is either a single spec applied to every low-fidelity
    level or one spec per level ordered from level 2 (second-highest
    fidelity) down to level K (lowest).
    """

    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    surrogates: object = field(default_factory=SurrogateSpec)
    cokriging_rank: int = 2
    koh_rho_zero: bool = False

    def surrogate_for_level(self, level: int, n_levels: int) -> SurrogateSpec:
        if isinstance(self.surrogates, SurrogateSpec):
            return self.surrogates
        specs = tuple(self.surrogates)
        if len(specs) != n_levels - 1:
            raise ConfigurationError(
                f"need {n_levels - 1} surrogate specs (levels 2..{n_levels}), got {len(specs)}"
            )
        return specs[level - 2]


def level_seed(seed: int, level: int) -> int:
    """Deterministic child seed for one fidelity level."""
    child = np.random.SeedSequence(seed).spawn(level)[level - 1]
    return int(child.generate_state(1, np.uint64)[0])


def _target_scale(y: np.ndarray) -> float:
    s = float(y.std())
    return s if s > 0.0 else 1.0


def _tagged(exc: Exception, level: int) -> Exception:
    cls = type(exc)
    try:
        return cls(f"level {level}: {exc}")
    except TypeError:
        return exc


@dataclass(frozen=True)
class LevelSurrogate:
    """A point predictor plus the transforms it was trained under."""

    predictor: object
    scaler: Standardizer
    target_mean: float

    @property
    def width(self) -> int:
        return self.scaler.offset.shape[0]

    def predict(self, features) -> np.ndarray:
        return self.predictor.predict(self.scaler.transform(features)) + self.target_mean


def _train_level_surrogate(
    features_raw, targets, spec: SurrogateSpec, optimizer: OptimizerConfig
) -> LevelSurrogate:
    F = as_matrix(features_raw)
    y = as_vector(targets)
    scaler = Standardizer.fit(F)
    t_mean = float(y.mean())
    if spec.kind == "knn":
        predictor = KNNRegressor(k=spec.knn_k)
    elif spec.kind == "linear":
        predictor = LinearRegressor()
    else:
        predictor = GPMeanPredictor(optimizer=optimizer)
    predictor.train(scaler.transform(F), y - t_mean)
    return LevelSurrogate(predictor=predictor, scaler=scaler, target_mean=t_mean)


def build_features(X, predictors) -> np.ndarray:
    """Append one prediction column per surrogate, lowest fidelity first.

    With predictors (h_K, ..., h_{l+1}) this turns M x d inputs into the
    M x (d + K - l) feature matrix: each surrogate consumes the features
    produced so far and contributes the next column.
    """
    F = as_matrix(X)
    for h in predictors:
        if h.width != F.shape[1]:
            raise ConfigurationError(
                f"surrogate expects {h.width} feature columns, got {F.shape[1]}"
            )
        F = np.hstack([F, as_vector(h.predict(F)).reshape(-1, 1)])
    return F


# ---------------------------------------------------------------------------
# Single-fidelity kriging
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KrigingModel:
    gp: TrainedGP
    scaler: Standardizer
    target_mean: float
    log_ml: float

    @property
    def fitted_constant(self) -> float:
        """The constant mean in original target units."""
        return float(self.gp.mean.value) + self.target_mean

    def predict(self, X) -> PosteriorPrediction:
        post = posterior(self.gp, self.scaler.transform(X))
        return PosteriorPrediction(post.mean + self.target_mean, post.variance)


def train_kriging(data: DataSet, cfg: TrainConfig) -> KrigingModel:
    """ARD kernel, constant mean, marginal-likelihood ascent."""
    scaler = Standardizer.fit(data.inputs)
    Z = scaler.transform(data.inputs)
    t_mean = float(data.outputs.mean())
    t = data.outputs - t_mean
    scale = _target_scale(t)
    opt = replace(cfg.optimizer, seed=level_seed(cfg.optimizer.seed, 1))
    fit = maximize_mll(
        Z, t, ARDKernel(scale, np.ones(Z.shape[1])), ConstantMean(0.0), 0.1 * scale, opt
    )
    gp = fit_gp(Z, t, fit.kernel, fit.mean, fit.noise_std)
    return KrigingModel(gp=gp, scaler=scaler, target_mean=t_mean, log_ml=fit.log_ml)


# ---------------------------------------------------------------------------
# Feature-augmentation estimator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProposedModel:
    """High-fidelity GP over inputs augmented with every surrogate's output.

    ``predictors`` is ordered lowest fidelity first (h_K, ..., h_2); the
    top GP consumes d + K - 1 columns. ``train_features`` stores the raw
    augmented matrix the GP was fitted on, reproducible bitwise through
    build_features.
    """

    predictors: tuple[LevelSurrogate, ...]
    top_gp: TrainedGP
    feature_scaler: Standardizer
    target_mean: float
    train_features: np.ndarray
    log_ml: float

    @property
    def input_dim(self) -> int:
        return self.train_features.shape[1] - len(self.predictors)

    def predict(self, X) -> PosteriorPrediction:
        X = as_matrix(X)
        if X.shape[1] != self.input_dim:
            raise ConfigurationError(
                f"query width {X.shape[1]} != input dim {self.input_dim}"
            )
        F = build_features(X, self.predictors)
        post = posterior(self.top_gp, self.feature_scaler.transform(F))
        return PosteriorPrediction(post.mean + self.target_mean, post.variance)


def train_proposed(mf: MFDataset, cfg: TrainConfig) -> ProposedModel:
    """Train surrogates from level K up to 2, then the augmented top GP.

    With a single level this degenerates to the kriging baseline (same
    kernel, constant mean, and seed), so the two agree exactly.
    """
    K = mf.n_levels
    predictors: list[LevelSurrogate] = []
    for lvl in range(K, 1, -1):
        ds = mf.level(lvl)
        try:
            F = build_features(ds.inputs, predictors)
            spec = cfg.surrogate_for_level(lvl, K)
            opt = replace(cfg.optimizer, seed=level_seed(cfg.optimizer.seed, lvl))
            predictors.append(_train_level_surrogate(F, ds.outputs, spec, opt))
        except Exception as exc:
            raise _tagged(exc, lvl) from exc

    high = mf.level(1)
    try:
        Phi = build_features(high.inputs, predictors)
        scaler = Standardizer.fit(Phi)
        Z = scaler.transform(Phi)
        t_mean = float(high.outputs.mean())
        t = high.outputs - t_mean
        scale = _target_scale(t)
        opt = replace(cfg.optimizer, seed=level_seed(cfg.optimizer.seed, 1))
        mean0 = LinearMean.zeros(Z.shape[1]) if K > 1 else ConstantMean(0.0)
        fit = maximize_mll(
            Z, t, ARDKernel(scale, np.ones(Z.shape[1])), mean0, 0.1 * scale, opt
        )
        gp = fit_gp(Z, t, fit.kernel, fit.mean, fit.noise_std)
    except Exception as exc:
        raise _tagged(exc, 1) from exc
    return ProposedModel(
        predictors=tuple(predictors),
        top_gp=gp,
        feature_scaler=scaler,
        target_mean=t_mean,
        train_features=Phi,
        log_ml=fit.log_ml,
    )


# ---------------------------------------------------------------------------
# Scaled-residual autoregressive chain (Kennedy-O'Hagan style)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KOHLevel:
    """One chain step: level output ~ rho * lower prediction + residual GP.

    The GP's features are the standardized inputs plus one raw column of
    lower-level predictions; that column's lengthscale is pinned so only
    the mean sees it, which makes its coefficient exactly rho.
    """

    gp: TrainedGP
    scaler: Standardizer
    target_mean: float

    @property
    def rho(self) -> float:
        return float(self.gp.mean.coefficients[-1])

    def _features(self, X, lower_mean) -> np.ndarray:
        return np.hstack([self.scaler.transform(X), lower_mean.reshape(-1, 1)])

    def predict(self, X, lower_mean) -> PosteriorPrediction:
        post = posterior(self.gp, self._features(X, lower_mean))
        return PosteriorPrediction(post.mean + self.target_mean, post.variance)


@dataclass(frozen=True)
class KOHModel:
    """Markovian chain: base surrogate at level K, residual GPs above it.

    ``levels`` is ordered from level K-1 up to level 1 (last entry).
    Predictive variance is the top residual GP's variance.
    """

    base: LevelSurrogate
    levels: tuple[KOHLevel, ...]
    log_ml: float

    @property
    def scales(self) -> tuple[float, ...]:
        """rho per chain step, ordered level K-1 .. 1."""
        return tuple(level.rho for level in self.levels)

    def predict(self, X) -> PosteriorPrediction:
        X = as_matrix(X)
        m = self.base.predict(X)
        post = None
        for level in self.levels:
            post = level.predict(X, m)
            m = post.mean
        return post


def train_koh(mf: MFDataset, cfg: TrainConfig) -> KOHModel:
    K = mf.n_levels
    if K < 2:
        raise ConfigurationError("the residual chain needs at least two levels")
    d = mf.dim
    low = mf.level(K)
    try:
        spec = cfg.surrogate_for_level(K, K)
        opt = replace(cfg.optimizer, seed=level_seed(cfg.optimizer.seed, K))
        base = _train_level_surrogate(low.inputs, low.outputs, spec, opt)
    except Exception as exc:
        raise _tagged(exc, K) from exc

    levels: list[KOHLevel] = []
    lower_predict = base.predict
    for lvl in range(K - 1, 0, -1):
        ds = mf.level(lvl)
        try:
            p = as_vector(lower_predict(ds.inputs))
            scaler = Standardizer.fit(ds.inputs)
            F = np.hstack([scaler.transform(ds.inputs), p.reshape(-1, 1)])
            t_mean = float(ds.outputs.mean())
            t = ds.outputs - t_mean
            scale = _target_scale(t)
            rho0 = 0.0 if cfg.koh_rho_zero else 1.0
            kernel0 = ARDKernel(
                scale, np.concatenate([np.ones(d), [PINNED_LENGTHSCALE]])
            )
            mean0 = LinearMean(np.concatenate([np.zeros(d), [rho0]]), 0.0)
            # Unconstrained layout: log b, log lambda (d+1), log sigma,
            # d+1 mean coefficients, intercept. Pin the prediction
            # column's lengthscale and the input coefficients; pin rho
            # too when the ablation flag asks for plain kriging.
            mask = np.ones(kernel0.n_params + 1 + mean0.arity)
            mask[1 + d] = 0.0
            mask[kernel0.n_params + 1 : kernel0.n_params + 1 + d] = 0.0
            if cfg.koh_rho_zero:
                mask[kernel0.n_params + 1 + d] = 0.0
            opt = replace(cfg.optimizer, seed=level_seed(cfg.optimizer.seed, lvl))
            fit = maximize_mll(F, t, kernel0, mean0, 0.1 * scale, opt, free_mask=mask)
            gp = fit_gp(F, t, fit.kernel, fit.mean, fit.noise_std)
        except Exception as exc:
            raise _tagged(exc, lvl) from exc
        level = KOHLevel(gp=gp, scaler=scaler, target_mean=t_mean)
        levels.append(level)
        lower_predict = _chain_mean(base, tuple(levels))
    return KOHModel(base=base, levels=tuple(levels), log_ml=fit.log_ml)


def _chain_mean(base: LevelSurrogate, levels: tuple[KOHLevel, ...]):
    def predict(X):
        m = base.predict(X)
        for level in levels:
            m = level.predict(X, m).mean
        return m

    return predict


# ---------------------------------------------------------------------------
# Composite-kernel autoregressive chain (NARGP style)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NARGPLevel:
    gp: TrainedGP
    scaler: Standardizer  # over [x, lower prediction], d+1 columns
    target_mean: float

    def predict(self, X, lower_mean) -> PosteriorPrediction:
        F = np.hstack([as_matrix(X), lower_mean.reshape(-1, 1)])
        post = posterior(self.gp, self.scaler.transform(F))
        return PosteriorPrediction(post.mean + self.target_mean, post.variance)


@dataclass(frozen=True)
class NARGPModel:
    """Chain of GPs on [inputs, next-lower prediction] with the composite
    product-plus-discrepancy kernel and zero mean. Lower-level posterior
    means are propagated deterministically."""

    base: LevelSurrogate
    levels: tuple[NARGPLevel, ...]
    log_ml: float

    def predict(self, X) -> PosteriorPrediction:
        X = as_matrix(X)
        m = self.base.predict(X)
        post = None
        for level in self.levels:
            post = level.predict(X, m)
            m = post.mean
        return post


def train_nargp(mf: MFDataset, cfg: TrainConfig) -> NARGPModel:
    K = mf.n_levels
    if K < 2:
        raise ConfigurationError("the composite-kernel chain needs at least two levels")
    d = mf.dim
    low = mf.level(K)
    try:
        spec = cfg.surrogate_for_level(K, K)
        opt = replace(cfg.optimizer, seed=level_seed(cfg.optimizer.seed, K))
        base = _train_level_surrogate(low.inputs, low.outputs, spec, opt)
    except Exception as exc:
        raise _tagged(exc, K) from exc

    levels: list[NARGPLevel] = []
    lower_mean = base.predict
    for lvl in range(K - 1, 0, -1):
        ds = mf.level(lvl)
        try:
            p = as_vector(lower_mean(ds.inputs))
            F = np.hstack([ds.inputs, p.reshape(-1, 1)])
            scaler = Standardizer.fit(F)
            Z = scaler.transform(F)
            t_mean = float(ds.outputs.mean())
            t = ds.outputs - t_mean
            scale = _target_scale(t)
            opt = replace(cfg.optimizer, seed=level_seed(cfg.optimizer.seed, lvl))
            fit = maximize_mll(
                Z, t, NARGPKernel.default(d, scale), ZeroMean(), 0.1 * scale, opt
            )
            gp = fit_gp(Z, t, fit.kernel, fit.mean, fit.noise_std)
        except Exception as exc:
            raise _tagged(exc, lvl) from exc
        level = NARGPLevel(gp=gp, scaler=scaler, target_mean=t_mean)
        levels.append(level)
        lower_mean = _nargp_chain_mean(base, tuple(levels))
    return NARGPModel(base=base, levels=tuple(levels), log_ml=fit.log_ml)


def _nargp_chain_mean(base: LevelSurrogate, levels: tuple[NARGPLevel, ...]):
    def predict(X):
        m = base.predict(X)
        for level in levels:
            m = level.predict(X, m).mean
        return m

    return predict
