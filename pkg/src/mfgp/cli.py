"""Command-line interface.

Subcommands:

    bench    --config CFG [--analytic] [--seed S] [--out PATH]
    train    --config CFG --out MODEL
    predict  --model MODEL --inputs CSV --out CSV
    evaluate --pred CSV --truth CSV

Exit codes: 0 success, 1 runtime failure, 2 usage error. The environment
variable MFGP_THREADS caps the BLAS thread count (speed only; results do
not depend on it).
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys
from dataclasses import replace

from . import bench as bench_mod
from .errors import ConfigurationError
from .metrics import ci_coverage, gp_rmse, r_squared, rmse
from .storage import (
    load_inputs_csv,
    load_model,
    load_table_csv,
    save_model,
    save_predictions_csv,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfgp", description="Multifidelity GP surrogate modeling benchmark"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_bench = sub.add_parser("bench", help="train estimators and write a report")
    p_bench.add_argument("--config", help="INI config file")
    p_bench.add_argument(
        "--analytic", action="store_true", help="use the built-in analytic problem"
    )
    p_bench.add_argument("--seed", type=int, help="override the run seed")
    p_bench.add_argument("--out", help="override the report path")

    p_train = sub.add_parser("train", help="train one estimator and save the model")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--out", required=True)

    p_pred = sub.add_parser("predict", help="predict mean,variance for input rows")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--inputs", required=True)
    p_pred.add_argument("--out", required=True)

    p_eval = sub.add_parser("evaluate", help="score predictions against truth")
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--truth", required=True)
    return parser


def _cmd_bench(args) -> int:
    if args.config:
        cfg = bench_mod.load_config(args.config)
    else:
        cfg = bench_mod.BenchConfig()
    if args.analytic:
        cfg = replace(cfg, source="analytic")
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed, optimizer=replace(cfg.optimizer, seed=args.seed))
    if args.out:
        cfg = replace(cfg, output_path=args.out)
    report, all_failed = bench_mod.run_benchmark(cfg)
    for name, block in report["estimators"].items():
        status = "ok" if block["error"] is None else f"FAILED ({block['error']})"
        print(f"{name}: {status}")
    print(f"report written to {cfg.output_path}")
    return 1 if all_failed else 0


def _cmd_train(args) -> int:
    cfg = bench_mod.load_config(args.config)
    if len(cfg.estimators) != 1:
        raise ConfigurationError(
            "train needs exactly one [estimators.<name>] section, got "
            + ", ".join(cfg.estimators)
        )
    name = cfg.estimators[0]
    if cfg.source == "analytic":
        mf, _ = bench_mod.load_benchmark_data(cfg)
    else:
        mf = bench_mod.load_mf_csv(cfg.train_csv)
    model = bench_mod.train_estimator(name, mf, cfg.train_config(name))
    save_model(args.out, model)
    print(f"{name} model written to {args.out}")
    return 0


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    X = load_inputs_csv(args.inputs)
    post = model.predict(X)
    save_predictions_csv(args.out, post.mean, post.variance)
    print(f"{X.shape[0]} predictions written to {args.out}")
    return 0


def _values_from_table(cols: dict, path: str):
    if "mean" in cols:
        return cols["mean"], cols.get("variance")
    if "y" in cols:
        return cols["y"], None
    raise ConfigurationError(f"{path}: need a 'mean' or 'y' column")


def _cmd_evaluate(args) -> int:
    pred_cols = load_table_csv(args.pred)
    truth_cols = load_table_csv(args.truth)
    pred, variance = _values_from_table(pred_cols, args.pred)
    truth, _ = _values_from_table(truth_cols, args.truth)
    print(f"rmse = {rmse(pred, truth)!r}")
    try:
        print(f"r_squared = {r_squared(pred, truth)!r}")
    except ConfigurationError:
        pass
    if variance is not None:
        print(f"gp_rmse = {gp_rmse(pred, variance, truth)!r}")
        print(f"ci_coverage_2sigma = {ci_coverage(pred, variance, truth, 2.0)!r}")
    return 0


def _thread_limit():
    value = os.environ.get("MFGP_THREADS")
    if not value:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=int(value))
    except (ImportError, ValueError):
        return contextlib.nullcontext()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "bench": _cmd_bench,
        "train": _cmd_train,
        "predict": _cmd_predict,
        "evaluate": _cmd_evaluate,
    }
    try:
        with _thread_limit():
            return handlers[args.command](args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
