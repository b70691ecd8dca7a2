"""File formats: CSV datasets, prediction tables, and trained models.

Datasets are comma-separated with header ``x1,...,xd,y``, '.' as the
decimal point, UTF-8, one point per row. Values are written with
``repr`` so a write/read round trip reproduces every float64 exactly.

Trained models are stored as version-tagged JSON with every matrix and
coefficient in decimal text (no binary blobs):

    {"format_version": 1, "estimator": "<kind>", "input_dim": d, "model": {...}}
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .cokriging import CokrigingModel, CokrigingParams
from .data import DataSet, MFDataset, Standardizer
from .errors import ConfigurationError, DataFormatError
from .estimators import (
    KOHLevel,
    KOHModel,
    KrigingModel,
    LevelSurrogate,
    NARGPLevel,
    NARGPModel,
    ProposedModel,
)
from .gp import GPHyperparams, TrainedGP
from .kernels import ARDKernel, ConstantMean, LinearMean, NARGPKernel, ZeroMean
from .surrogates import GPMeanPredictor, GPMeanWrapper, KNNRegressor, LinearRegressor

MODEL_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# CSV datasets
# ---------------------------------------------------------------------------


def _parse_float(token: str, path, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DataFormatError(f"not a decimal number: {token!r}", path, line_no) from None
    if not math.isfinite(value):
        raise DataFormatError(f"non-finite value: {token!r}", path, line_no)
    return value


def load_csv_dataset(path) -> DataSet:
    """Read one ``x1,...,xd,y`` file."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty file", path, 1) from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[-1] != "y":
            raise DataFormatError(
                f"expected header x1,...,xd,y, got {','.join(header)}", path, 1
            )
        d = len(header) - 1
        expected = [f"x{i + 1}" for i in range(d)] + ["y"]
        if header != expected:
            raise DataFormatError(
                f"expected header {','.join(expected)}, got {','.join(header)}", path, 1
            )
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise DataFormatError(
                    f"expected {d + 1} fields, got {len(row)}", path, line_no
                )
            rows.append([_parse_float(tok, path, line_no) for tok in row])
    if not rows:
        raise DataFormatError("no data rows", path, 2)
    arr = np.array(rows)
    return DataSet(inputs=arr[:, :d], outputs=arr[:, d])


def load_mf_csv(paths) -> MFDataset:
    """Load ordered level files; the first path is the highest fidelity."""
    paths = list(paths)
    if not paths:
        raise ConfigurationError("no CSV paths given")
    levels = [load_csv_dataset(p) for p in paths]
    d = levels[0].dim
    for p, lv in zip(paths, levels):
        if lv.dim != d:
            raise DataFormatError(
                f"input dim {lv.dim} inconsistent with first file's {d}", p, 1
            )
    return MFDataset(tuple(levels))


def save_csv_dataset(path, dataset: DataSet) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(dataset.dim)] + ["y"])
        for row, y in zip(dataset.inputs, dataset.outputs):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(y))])


def save_predictions_csv(path, mean, variance) -> None:
    mean = np.asarray(mean, float)
    variance = np.asarray(variance, float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mean", "variance"])
        for m, v in zip(mean, variance):
            writer.writerow([repr(float(m)), repr(float(v))])


def load_table_csv(path):
    """Read any headed CSV into {column: float array}; used by evaluate."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError("empty file", path, 1) from None
        cols = {name: [] for name in header}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"expected {len(header)} fields, got {len(row)}", path, line_no
                )
            for name, tok in zip(header, row):
                cols[name].append(_parse_float(tok, path, line_no))
    return {name: np.array(vals) for name, vals in cols.items()}


def load_inputs_csv(path) -> np.ndarray:
    """Read query inputs: columns x1..xd (a trailing y column is ignored)."""
    cols = load_table_csv(path)
    names = [n for n in cols if n != "y"]
    expected = [f"x{i + 1}" for i in range(len(names))]
    if sorted(names) != sorted(expected):
        raise DataFormatError(f"expected input columns x1..xd, got {names}", path, 1)
    return np.column_stack([cols[n] for n in expected])


# ---------------------------------------------------------------------------
# Model serialization
# ---------------------------------------------------------------------------


def _arr(a) -> list:
    return np.asarray(a, float).tolist()


def _enc_kernel(kernel) -> dict:
    if isinstance(kernel, ARDKernel):
        return {
            "type": "ard",
            "amplitude": kernel.amplitude,
            "lengthscales": _arr(kernel.lengthscales),
        }
    if isinstance(kernel, NARGPKernel):
        return {
            "type": "nargp",
            "k_p": _enc_kernel(kernel.k_p),
            "k_h": _enc_kernel(kernel.k_h),
            "k_delta": _enc_kernel(kernel.k_delta),
        }
    raise ConfigurationError(f"cannot serialize kernel {type(kernel).__name__}")


def _dec_kernel(d: dict):
    if d["type"] == "ard":
        return ARDKernel(d["amplitude"], np.array(d["lengthscales"]))
    if d["type"] == "nargp":
        return NARGPKernel(
            _dec_kernel(d["k_p"]), _dec_kernel(d["k_h"]), _dec_kernel(d["k_delta"])
        )
    raise DataFormatError(f"unknown kernel type {d['type']!r}")


def _enc_mean(mean) -> dict:
    if isinstance(mean, ZeroMean):
        return {"type": "zero"}
    if isinstance(mean, ConstantMean):
        return {"type": "constant", "value": mean.value}
    if isinstance(mean, LinearMean):
        return {
            "type": "linear",
            "coefficients": _arr(mean.coefficients),
            "intercept": mean.intercept,
        }
    raise ConfigurationError(f"cannot serialize mean {type(mean).__name__}")


def _dec_mean(d: dict):
    if d["type"] == "zero":
        return ZeroMean()
    if d["type"] == "constant":
        return ConstantMean(d["value"])
    if d["type"] == "linear":
        return LinearMean(np.array(d["coefficients"]), d["intercept"])
    raise DataFormatError(f"unknown mean type {d['type']!r}")


def _enc_gp(gp: TrainedGP) -> dict:
    return {
        "features": _arr(gp.features),
        "centered_targets": _arr(gp.centered_targets),
        "chol_factor": _arr(gp.chol_factor),
        "weights": _arr(gp.weights),
        "jitter_used": gp.jitter_used,
        "noise_std": gp.noise_std,
        "kernel": _enc_kernel(gp.kernel),
        "mean": _enc_mean(gp.mean),
    }


def _dec_gp(d: dict) -> TrainedGP:
    kernel = _dec_kernel(d["kernel"])
    mean = _dec_mean(d["mean"])
    return TrainedGP(
        features=np.array(d["features"]),
        centered_targets=np.array(d["centered_targets"]),
        chol_factor=np.array(d["chol_factor"]),
        weights=np.array(d["weights"]),
        hyperparams=GPHyperparams.from_parts(kernel, mean, d["noise_std"]),
        jitter_used=d["jitter_used"],
        kernel=kernel,
        mean=mean,
        noise_std=d["noise_std"],
    )


def _enc_scaler(s: Standardizer) -> dict:
    return {"offset": _arr(s.offset), "scale": _arr(s.scale)}


def _dec_scaler(d: dict) -> Standardizer:
    return Standardizer(offset=np.array(d["offset"]), scale=np.array(d["scale"]))


def _enc_predictor(p) -> dict:
    if isinstance(p, KNNRegressor):
        return {
            "type": "knn",
            "k": p.k,
            "features": _arr(p.stored_features),
            "targets": _arr(p.stored_targets),
        }
    if isinstance(p, LinearRegressor):
        return {"type": "linear", "weights": _arr(p.weights)}
    if isinstance(p, GPMeanPredictor):
        return {"type": "gpmean", "gp": _enc_gp(p.gp)}
    if isinstance(p, GPMeanWrapper):
        return {"type": "gpmean", "gp": _enc_gp(p.gp)}
    raise ConfigurationError(f"cannot serialize predictor {type(p).__name__}")


def _dec_predictor(d: dict):
    if d["type"] == "knn":
        model = KNNRegressor(k=d["k"])
        return model.train(np.array(d["features"]), np.array(d["targets"]))
    if d["type"] == "linear":
        model = LinearRegressor()
        model.weights = np.array(d["weights"])
        return model
    if d["type"] == "gpmean":
        return GPMeanWrapper(_dec_gp(d["gp"]))
    raise DataFormatError(f"unknown predictor type {d['type']!r}")


def _enc_surrogate(s: LevelSurrogate) -> dict:
    return {
        "predictor": _enc_predictor(s.predictor),
        "scaler": _enc_scaler(s.scaler),
        "target_mean": s.target_mean,
    }


def _dec_surrogate(d: dict) -> LevelSurrogate:
    return LevelSurrogate(
        predictor=_dec_predictor(d["predictor"]),
        scaler=_dec_scaler(d["scaler"]),
        target_mean=d["target_mean"],
    )


def encode_model(model) -> dict:
    if isinstance(model, KrigingModel):
        kind, payload, dim = (
            "kriging",
            {
                "gp": _enc_gp(model.gp),
                "scaler": _enc_scaler(model.scaler),
                "target_mean": model.target_mean,
                "log_ml": model.log_ml,
            },
            model.scaler.offset.shape[0],
        )
    elif isinstance(model, ProposedModel):
        kind, payload, dim = (
            "proposed",
            {
                "predictors": [_enc_surrogate(s) for s in model.predictors],
                "top_gp": _enc_gp(model.top_gp),
                "feature_scaler": _enc_scaler(model.feature_scaler),
                "target_mean": model.target_mean,
                "train_features": _arr(model.train_features),
                "log_ml": model.log_ml,
            },
            model.input_dim,
        )
    elif isinstance(model, KOHModel):
        kind, payload, dim = (
            "koh",
            {
                "base": _enc_surrogate(model.base),
                "levels": [
                    {
                        "gp": _enc_gp(lv.gp),
                        "scaler": _enc_scaler(lv.scaler),
                        "target_mean": lv.target_mean,
                    }
                    for lv in model.levels
                ],
                "log_ml": model.log_ml,
            },
            model.base.width,
        )
    elif isinstance(model, NARGPModel):
        kind, payload, dim = (
            "nargp",
            {
                "base": _enc_surrogate(model.base),
                "levels": [
                    {
                        "gp": _enc_gp(lv.gp),
                        "scaler": _enc_scaler(lv.scaler),
                        "target_mean": lv.target_mean,
                    }
                    for lv in model.levels
                ],
                "log_ml": model.log_ml,
            },
            model.base.width,
        )
    elif isinstance(model, CokrigingModel):
        kind, payload, dim = (
            "cokriging",
            {
                "kernels": [_enc_kernel(k) for k in model.params.kernels],
                "factors": [_arr(a) for a in model.params.factors],
                "diags": [_arr(dv) for dv in model.params.diags],
                "noise_stds": _arr(model.params.noise_stds),
                "constant_means": _arr(model.params.constant_means),
                "scaler": _enc_scaler(model.scaler),
                "inputs": [_arr(x) for x in model.inputs],
                "target_means": _arr(model.target_means),
                "chol_factor": _arr(model.chol_factor),
                "weights": _arr(model.weights),
                "jitter_used": model.jitter_used,
                "log_ml": model.log_ml,
            },
            model.scaler.offset.shape[0],
        )
    else:
        raise ConfigurationError(f"cannot serialize model {type(model).__name__}")
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "estimator": kind,
        "input_dim": dim,
        "model": payload,
    }


def decode_model(doc: dict):
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataFormatError(
            f"unsupported model format version {doc.get('format_version')!r}"
        )
    kind = doc.get("estimator")
    m = doc["model"]
    if kind == "kriging":
        return KrigingModel(
            gp=_dec_gp(m["gp"]),
            scaler=_dec_scaler(m["scaler"]),
            target_mean=m["target_mean"],
            log_ml=m["log_ml"],
        )
    if kind == "proposed":
        return ProposedModel(
            predictors=tuple(_dec_surrogate(s) for s in m["predictors"]),
            top_gp=_dec_gp(m["top_gp"]),
            feature_scaler=_dec_scaler(m["feature_scaler"]),
            target_mean=m["target_mean"],
            train_features=np.array(m["train_features"]),
            log_ml=m["log_ml"],
        )
    if kind == "koh":
        return KOHModel(
            base=_dec_surrogate(m["base"]),
            levels=tuple(
                KOHLevel(
                    gp=_dec_gp(lv["gp"]),
                    scaler=_dec_scaler(lv["scaler"]),
                    target_mean=lv["target_mean"],
                )
                for lv in m["levels"]
            ),
            log_ml=m["log_ml"],
        )
    if kind == "nargp":
        return NARGPModel(
            base=_dec_surrogate(m["base"]),
            levels=tuple(
                NARGPLevel(
                    gp=_dec_gp(lv["gp"]),
                    scaler=_dec_scaler(lv["scaler"]),
                    target_mean=lv["target_mean"],
                )
                for lv in m["levels"]
            ),
            log_ml=m["log_ml"],
        )
    if kind == "cokriging":
        params = CokrigingParams(
            kernels=tuple(_dec_kernel(k) for k in m["kernels"]),
            factors=tuple(np.array(a) for a in m["factors"]),
            diags=tuple(np.array(dv) for dv in m["diags"]),
            noise_stds=np.array(m["noise_stds"]),
            constant_means=np.array(m["constant_means"]),
        )
        return CokrigingModel(
            params=params,
            scaler=_dec_scaler(m["scaler"]),
            inputs=tuple(np.array(x) for x in m["inputs"]),
            target_means=np.array(m["target_means"]),
            chol_factor=np.array(m["chol_factor"]),
            weights=np.array(m["weights"]),
            jitter_used=m["jitter_used"],
            log_ml=m["log_ml"],
        )
    raise DataFormatError(f"unknown estimator kind {kind!r}")


def save_model(path, model) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(encode_model(model), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"invalid model file: {exc}", path) from None
    return decode_model(doc)
