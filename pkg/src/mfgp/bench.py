"""Benchmark orchestration: config parsing, training, metrics, report.

The config file is INI-style with sections [data], [optimizer],
[estimators.<name>], [output]. A report is a JSON document with sorted
keys, so two runs with the same config and seed produce byte-identical
files except for the wall_time_s fields.
"""

from __future__ import annotations

import configparser
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .analytic import AnalyticProblem, gen_analytic
from .cokriging import train_cokriging
from .data import DataSet, MFDataset
from .errors import ConfigurationError
from .estimators import (
    SurrogateSpec,
    TrainConfig,
    train_koh,
    train_kriging,
    train_nargp,
    train_proposed,
)
from .metrics import MetricsReport
from .optimize import OptimizerConfig
from .storage import load_csv_dataset, load_mf_csv

REPORT_VERSION = 1
ESTIMATOR_NAMES = ("proposed", "koh", "nargp", "cokriging", "kriging")


@dataclass(frozen=True)
class BenchConfig:
    estimators: tuple[str, ...] = ("proposed", "koh", "nargp", "cokriging", "kriging")
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0
    source: str = "analytic"  # "analytic" | "csv"
    sampling: object = "linspace"  # mode or per-level tuple, analytic only
    problem: AnalyticProblem = field(default_factory=AnalyticProblem)
    train_csv: tuple[str, ...] = ()
    test_csv: str | None = None
    output_path: str = "bench_report.json"
    estimator_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.estimators:
            raise ConfigurationError("select at least one estimator")
        for name in self.estimators:
            if name not in ESTIMATOR_NAMES:
                raise ConfigurationError(f"unknown estimator {name!r}")
        if self.source not in ("analytic", "csv"):
            raise ConfigurationError(f"unknown data source {self.source!r}")
        if self.source == "csv" and not self.train_csv:
            raise ConfigurationError("csv source requires train_csv paths")

    def train_config(self, name: str) -> TrainConfig:
        opts = self.estimator_options.get(name, {})
        surrogate = opts.get("surrogate", "gp")
        knn_k = int(opts.get("knn_k", 5))
        kinds = [s.strip() for s in surrogate.split(",")] if isinstance(surrogate, str) else list(surrogate)
        if len(kinds) == 1:
            spec = SurrogateSpec(kind=kinds[0], knn_k=knn_k)
        else:
            spec = tuple(SurrogateSpec(kind=k, knn_k=knn_k) for k in kinds)
        return TrainConfig(
            optimizer=replace(self.optimizer, seed=self.seed),
            surrogates=spec,
            cokriging_rank=int(opts.get("rank", 2)),
            koh_rho_zero=_parse_bool(opts.get("rho_zero", "false")),
        )

    def to_dict(self) -> dict:
        return {
            "estimators": list(self.estimators),
            "optimizer": {
                "learning_rate": self.optimizer.learning_rate,
                "patience": self.optimizer.patience,
                "max_iterations": self.optimizer.max_iterations,
                "restarts": self.optimizer.restarts,
            },
            "seed": self.seed,
            "source": self.source,
            "sampling": list(self.sampling)
            if not isinstance(self.sampling, str)
            else self.sampling,
            "sizes": list(self.problem.sizes),
            "domain": list(self.problem.domain),
            "test_points": self.problem.n_test,
            "train_csv": list(self.train_csv),
            "test_csv": self.test_csv,
            "output_path": self.output_path,
            "estimator_options": {k: dict(v) for k, v in self.estimator_options.items()},
        }


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    if str(text).strip().lower() in ("1", "true", "yes", "on"):
        return True
    if str(text).strip().lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"not a boolean: {text!r}")


def load_config(path) -> BenchConfig:
    """Parse an INI config file into a BenchConfig."""
    parser = configparser.ConfigParser()
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise ConfigurationError(f"cannot read config file {path}")

    data = parser["data"] if parser.has_section("data") else {}
    source = data.get("source", "analytic").strip()
    sampling_raw = data.get("sampling", "linspace")
    parts = [s.strip() for s in sampling_raw.split(",") if s.strip()]
    sampling = parts[0] if len(parts) == 1 else tuple(parts)
    problem_kwargs = {}
    if "sizes" in data:
        problem_kwargs["sizes"] = tuple(int(s) for s in data["sizes"].split(","))
    if "test_points" in data:
        problem_kwargs["n_test"] = int(data["test_points"])
    if "domain" in data:
        lo, hi = (float(s) for s in data["domain"].split(","))
        problem_kwargs["domain"] = (lo, hi)
    train_csv = tuple(
        s.strip() for s in data.get("train_csv", "").split(",") if s.strip()
    )
    test_csv = data.get("test_csv", "").strip() or None

    opt = parser["optimizer"] if parser.has_section("optimizer") else {}
    optimizer = OptimizerConfig(
        patience=int(opt.get("patience", 1000)),
        max_iterations=int(opt.get("max_iterations", 20000)),
        restarts=int(opt.get("restarts", 1)),
        seed=int(opt.get("seed", 0)),
        learning_rate=float(opt.get("learning_rate", 0.05)),
    )

    estimators = []
    options = {}
    for section in parser.sections():
        if section.startswith("estimators."):
            name = section.split(".", 1)[1]
            estimators.append(name)
            options[name] = dict(parser[section])
    if not estimators:
        estimators = list(ESTIMATOR_NAMES)

    out = parser["output"] if parser.has_section("output") else {}
    return BenchConfig(
        estimators=tuple(estimators),
        optimizer=optimizer,
        seed=optimizer.seed,
        source=source,
        sampling=sampling,
        problem=AnalyticProblem(**problem_kwargs),
        train_csv=train_csv,
        test_csv=test_csv,
        output_path=out.get("report", "bench_report.json"),
        estimator_options=options,
    )


def load_benchmark_data(cfg: BenchConfig):
    """Training levels plus the held-out test set for a config."""
    if cfg.source == "analytic":
        return gen_analytic(cfg.seed, cfg.sampling, cfg.problem)
    mf = load_mf_csv(cfg.train_csv)
    if cfg.test_csv is None:
        raise ConfigurationError("csv source requires test_csv for benchmarking")
    return mf, load_csv_dataset(cfg.test_csv)


def train_estimator(name: str, mf: MFDataset, tc: TrainConfig):
    if name == "kriging":
        return train_kriging(mf.level(1), tc)
    if name == "proposed":
        return train_proposed(mf, tc)
    if name == "koh":
        return train_koh(mf, tc)
    if name == "nargp":
        return train_nargp(mf, tc)
    if name == "cokriging":
        return train_cokriging(mf, tc.optimizer, rank=tc.cokriging_rank)
    raise ConfigurationError(f"unknown estimator {name!r}")


def run_benchmark(cfg: BenchConfig, write: bool = True):
    """Train every selected estimator and collect metrics on the test set.

    Returns (report dict, all_failed flag). Individual estimator failures
    are recorded in the report and the run continues.
    """
    mf, test = load_benchmark_data(cfg)
    blocks = {}
    failures = 0
    for name in cfg.estimators:
        t0 = time.perf_counter()
        try:
            model = train_estimator(name, mf, cfg.train_config(name))
            post = model.predict(test.inputs)
            metrics = MetricsReport.from_posterior(
                post.mean, post.variance, test.outputs, log_ml=model.log_ml
            )
            blocks[name] = {
                "metrics": metrics.to_dict(),
                "error": None,
                "wall_time_s": time.perf_counter() - t0,
            }
        except Exception as exc:  # recorded, run continues
            failures += 1
            blocks[name] = {
                "metrics": None,
                "error": f"{type(exc).__name__}: {exc}",
                "wall_time_s": time.perf_counter() - t0,
            }
    report = {
        "report_version": REPORT_VERSION,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "estimators": blocks,
    }
    if write:
        write_report(cfg.output_path, report)
    return report, failures == len(cfg.estimators)


def render_report(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True) + "\n"


def write_report(path, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_report(report))
