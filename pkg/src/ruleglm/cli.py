# ruleglm/cli.py
"""Command-line interface: train, predict, cv, sweep.

Flags override values from an optional TOML config file, which overrides
built-in defaults. Exit codes: 0 success, 1 usage error, 2 data error,
3 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:                      # Python 3.10
    import tomli as tomllib

from .datatable import DataError, load_csv, load_table, target_mode
from .binarizer import binarize, build_dictionary
from .evaluate import (cross_validate, default_grid, nested_cross_validate,
                       pareto, sweep, sweep_csv)
from .model import complexity, load, predict_table, render, save
from .trainer import PricingConfig, TrainConfig, train


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_MODEL_FLAGS = [
    # (flag dest, type, default)
    ("family", str, "logistic"),
    ("variant", str, "LRR"),
    ("lambda0", float, 1e-3),
    ("lambda1", float, None),
    ("quantiles", int, 9),
    ("pricing_mode", str, "heuristic"),
    ("pricing_dmax", int, 5),
    ("pricing_beam", int, 1),
    ("pricing_kbest", int, 1),
    ("pricing_early_stop", str, "none"),
    ("pricing_node_budget", int, 10_000_000),
    ("max_cg_iters", int, 100),
    ("time_budget", float, 300.0),
    ("debias", bool, True),
    ("debias_threshold", float, 1e-5),
    ("penalize_intercept", bool, False),
]

_COMMON_FLAGS = [
    ("seed", int, 0),
    ("threads", int, None),      # None -> available cores
]


def _add_model_flags(p: _Parser) -> None:
    p.add_argument("--data", required=True, help="training CSV path")
    p.add_argument("--target", required=True, help="name of the label column")
    p.add_argument("--family", choices=["logistic", "linear"])
    p.add_argument("--variant", choices=["LR1", "LR1N", "LRR", "LRRN"])
    p.add_argument("--lambda0", type=float, help="base penalty per column")
    p.add_argument("--lambda1", type=float,
                   help="per-literal penalty (default 0.2 * lambda0)")
    p.add_argument("--quantiles", type=int, help="interior thresholds per numeric column")
    p.add_argument("--pricing-mode", dest="pricing_mode", choices=["heuristic", "exact"])
    p.add_argument("--pricing-dmax", dest="pricing_dmax", type=int,
                   help="maximum conjunction degree searched")
    p.add_argument("--pricing-beam", dest="pricing_beam", type=int)
    p.add_argument("--pricing-kbest", dest="pricing_kbest", type=int)
    p.add_argument("--pricing-early-stop", dest="pricing_early_stop",
                   choices=["none", "immediate", "after_degree"])
    p.add_argument("--pricing-node-budget", dest="pricing_node_budget", type=int)
    p.add_argument("--max-cg-iters", dest="max_cg_iters", type=int)
    p.add_argument("--time-budget", dest="time_budget", type=float)
    p.add_argument("--debias", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--debias-threshold", dest="debias_threshold", type=float)
    p.add_argument("--penalize-intercept", dest="penalize_intercept",
                   action=argparse.BooleanOptionalAction, default=None,
                   help="apply lambda0 to the intercept as well")


def _add_common_flags(p: _Parser) -> None:
    p.add_argument("--config", help="TOML file with flag defaults")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)


def build_parser() -> _Parser:
    parser = _Parser(prog="ruleglm",
                     description="Train and evaluate generalized linear rule models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit one model and write model JSON")
    _add_model_flags(p_train)
    _add_common_flags(p_train)
    p_train.add_argument("--out", default="model.json", help="model JSON output path")
    p_train.add_argument("--trace", help="write CG trace as JSON lines")

    p_pred = sub.add_parser("predict", help="apply a saved model to a CSV")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--data", required=True)
    p_pred.add_argument("--out", default="-", help="predictions CSV path, - for stdout")
    _add_common_flags(p_pred)

    p_cv = sub.add_parser("cv", help="k-fold cross-validated metrics as JSON")
    _add_model_flags(p_cv)
    _add_common_flags(p_cv)
    p_cv.add_argument("--folds", type=int, default=10)
    p_cv.add_argument("--nested-grid", dest="nested_grid",
                      help="comma-separated lambda0 grid for nested selection")
    p_cv.add_argument("--criterion", choices=["brier", "accuracy", "r2"],
                      help="nested selection criterion (default by family)")
    p_cv.add_argument("--inner-folds", dest="inner_folds", type=int, default=5)

    p_sweep = sub.add_parser("sweep", help="lambda0 sweep; writes trade-off CSV")
    _add_model_flags(p_sweep)
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--folds", type=int, default=10)
    p_sweep.add_argument("--grid", help="comma-separated lambda0 values")
    p_sweep.add_argument("--metric", choices=["brier", "accuracy", "r2"],
                         help="performance metric (default: brier for logistic, r2 for linear)")
    p_sweep.add_argument("--out", default="sweep.csv")
    return parser


def _resolve(args: argparse.Namespace, config: dict):
    """flag > config file > default, for every known option."""
    merged = {}
    for name, _type, default in _MODEL_FLAGS + _COMMON_FLAGS:
        flag = getattr(args, name, None)
        if flag is not None:
            merged[name] = flag
        elif name in config:
            merged[name] = config[name]
        else:
            merged[name] = default
    if merged["threads"] is None:
        merged["threads"] = os.cpu_count() or 1
    return merged


def _train_config(opts: dict) -> TrainConfig:
    return TrainConfig(
        family=opts["family"],
        lambda0=float(opts["lambda0"]),
        lambda1=None if opts["lambda1"] is None else float(opts["lambda1"]),
        variant=opts["variant"],
        max_cg_iters=int(opts["max_cg_iters"]),
        time_budget=float(opts["time_budget"]),
        pricing=PricingConfig(
            mode=opts["pricing_mode"],
            d_max=int(opts["pricing_dmax"]),
            beam=int(opts["pricing_beam"]),
            k_best=int(opts["pricing_kbest"]),
            early_stop=opts["pricing_early_stop"],
            node_budget=int(opts["pricing_node_budget"]),
        ),
        debias=bool(opts["debias"]),
        debias_threshold=float(opts["debias_threshold"]),
        penalize_intercept=bool(opts["penalize_intercept"]),
        n_quantiles=int(opts["quantiles"]),
    )


def _parse_grid(text: str | None):
    if not text:
        return None
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}") from None


def _load_config(path: str | None) -> dict:
    """Read a TOML config; a [pricing] table maps to the pricing_* options
    (pricing.mode -> pricing_mode and so on)."""
    if not path:
        return {}
    try:
        with open(path, "rb") as f:
            doc = tomllib.load(f)
    except OSError as e:
        raise DataError(f"cannot read config {path}: {e}") from None
    except tomllib.TOMLDecodeError as e:
        raise DataError(f"bad config {path}: {e}") from None
    aliases = {"pricing_d_max": "pricing_dmax", "pricing_k_best": "pricing_kbest"}
    flat = {}
    for key, value in doc.items():
        if isinstance(value, dict):
            for sub, sub_value in value.items():
                name = f"{key}_{sub}".replace("-", "_")
                flat[aliases.get(name, name)] = sub_value
        else:
            name = key.replace("-", "_")
            flat[aliases.get(name, name)] = value
    return flat


def _cmd_train(args) -> int:
    opts = _resolve(args, _load_config(args.config))
    cfg = _train_config(opts)
    table, targets = load_csv(args.data, args.target)
    values, label_map = target_mode(targets, cfg.family)
    dictionary = build_dictionary(table, cfg.n_quantiles)
    data = binarize(table, dictionary, values, include_numeric=cfg.uses_numeric())
    model, trace = train(data, cfg, label_map)
    save(model, args.out)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as f:
            f.write(trace.to_jsonl())
    print(render(model))
    print(f"weighted complexity: {complexity(model):.3f}")
    print(f"termination: {trace.termination_reason}")
    for w in trace.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def _cmd_predict(args) -> int:
    model = load(args.model)
    table = load_table(args.data)       # extra columns (e.g. a target) are ignored
    preds = predict_table(model, table)
    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="", encoding="utf-8")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["row_index", "prediction"])
        for i, p in enumerate(preds):
            w.writerow([i, repr(float(p))])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_cv(args) -> int:
    opts = _resolve(args, _load_config(args.config))
    cfg = _train_config(opts)
    table, targets = load_csv(args.data, args.target)
    grid = _parse_grid(args.nested_grid)
    if grid:
        criterion = args.criterion or ("brier" if cfg.family == "logistic" else "r2")
        ms, chosen = nested_cross_validate(
            table, targets, cfg, grid, k=args.folds, inner_k=args.inner_folds,
            criterion=criterion, seed=opts["seed"], threads=opts["threads"])
        doc = ms.to_dict()
        doc["chosen_lambda0"] = chosen
    else:
        ms = cross_validate(table, targets, cfg, k=args.folds,
                            seed=opts["seed"], threads=opts["threads"])
        doc = ms.to_dict()
    print(json.dumps(doc, indent=1))
    return 0


def _cmd_sweep(args) -> int:
    opts = _resolve(args, _load_config(args.config))
    cfg = _train_config(opts)
    table, targets = load_csv(args.data, args.target)
    grid = _parse_grid(args.grid) or default_grid()
    metric = args.metric or ("brier" if cfg.family == "logistic" else "r2")
    direction = "min" if metric == "brier" else "max"
    points = sweep(table, targets, cfg, grid, k=args.folds,
                   seed=opts["seed"], threads=opts["threads"])
    text = sweep_csv(points, metric, direction)
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(text)
    front = pareto(points, metric, direction)
    print(f"{len(points)} points, {len(front)} on the pareto frontier -> {args.out}")
    return 0


_COMMANDS = {"train": _cmd_train, "predict": _cmd_predict, "cv": _cmd_cv, "sweep": _cmd_sweep}


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        print(parser.format_usage(), file=sys.stderr, end="")
        return 1
    except SystemExit as e:            # --help
        return int(e.code) if e.code else 0
    try:
        return _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except Exception as e:             # pragma: no cover - defensive
        print(f"failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
