# ruleglm/evaluate.py
"""Cross-validated evaluation: Brier score, accuracy, R^2, lambda selection
and accuracy-complexity sweeps.

Every fold rebuilds the binarization dictionary and standardization
constants from its training part only, so no test information leaks into
the transform. All splits are pure functions of (n, k, labels, seed).
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .binarizer import binarize, build_dictionary
from .datatable import DataError, RawTable, target_mode
from .model import complexity, predict_table
from .trainer import TrainConfig, train


def brier(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean squared error of probabilistic predictions."""
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if probs.shape != labels.shape:
        raise ValueError("probs and labels length mismatch")
    return float(np.mean((probs - labels) ** 2))


def accuracy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Fraction classified correctly at threshold 0.5; a tie predicts 1."""
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if probs.shape != labels.shape:
        raise ValueError("probs and labels length mismatch")
    return float(np.mean((probs >= 0.5) == (labels == 1)))


def r_squared(preds: np.ndarray, targets: np.ndarray) -> float:
    """1 - SSE/SST with SST about the target mean; defined as 0 when SST=0."""
    preds = np.asarray(preds, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if preds.shape != targets.shape:
        raise ValueError("preds and targets length mismatch")
    sst = float(np.sum((targets - targets.mean()) ** 2))
    if sst == 0.0:
        return 0.0
    sse = float(np.sum((targets - preds) ** 2))
    return 1.0 - sse / sst


@dataclass(frozen=True)
class MetricSet:
    brier: float
    brier_se: float
    accuracy: float
    accuracy_se: float
    r2: float
    r2_se: float
    weighted_rules: float
    weighted_rules_se: float
    n_rules: float
    n_rules_se: float

    def metric(self, name: str) -> float:
        return getattr(self, name)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class TradeoffPoint:
    lambda0: float
    lambda1: float
    metrics: MetricSet


def make_folds(n: int, k: int, seed: int, labels: np.ndarray | None = None) -> np.ndarray:
    """Fold id per instance. With labels, each class is shuffled and dealt
    round-robin (continuing across classes), so per-fold class counts are
    within one instance of n_c/k and fold sizes within one of n/k."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise DataError(f"cannot make {k} folds from {n} instances")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(n, dtype=int)
    pos = 0
    if labels is None:
        order = rng.permutation(n)
        for i in order:
            fold_of[i] = pos % k
            pos += 1
    else:
        labels = np.asarray(labels)
        for c in np.unique(labels):
            idx = rng.permutation(np.flatnonzero(labels == c))
            for i in idx:
                fold_of[i] = pos % k
                pos += 1
    return fold_of


def _fold_metrics(family: str, preds: np.ndarray, truth: np.ndarray, model) -> dict:
    return {
        "brier": brier(preds, truth),
        "accuracy": accuracy(preds, truth) if family == "logistic" else float("nan"),
        "r2": r_squared(preds, truth),
        "weighted_rules": complexity(model),
        "n_rules": float(len(model.rules)),
    }


def _aggregate(fold_rows: list) -> MetricSet:
    k = len(fold_rows)
    out = {}
    for name in ("brier", "accuracy", "r2", "weighted_rules", "n_rules"):
        vals = np.array([row[name] for row in fold_rows])
        out[name] = float(vals.mean())
        out[name + "_se"] = float(vals.std(ddof=1) / np.sqrt(k)) if k > 1 else 0.0
    return MetricSet(**out)


def _run_fold(table, values, label_map, cfg, fold_of, fold):
    train_idx = np.flatnonzero(fold_of != fold)
    test_idx = np.flatnonzero(fold_of == fold)
    train_table = table.select_rows(train_idx)
    dictionary = build_dictionary(train_table, cfg.n_quantiles)
    data = binarize(train_table, dictionary, values[train_idx],
                    include_numeric=cfg.uses_numeric())
    model, _trace = train(data, cfg, label_map)
    preds = predict_table(model, table.select_rows(test_idx))
    return _fold_metrics(cfg.family, preds, values[test_idx], model)


def cross_validate(table: RawTable, targets, cfg: TrainConfig, k: int = 10,
                   seed: int = 0, threads: int = 1) -> MetricSet:
    """k-fold CV; folds are stratified for logistic, shuffled for linear."""
    values, label_map = target_mode(targets, cfg.family)
    fold_of = make_folds(table.n_rows, k,
                         seed, values if cfg.family == "logistic" else None)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(
                lambda f: _run_fold(table, values, label_map, cfg, fold_of, f), range(k)))
    else:
        rows = [_run_fold(table, values, label_map, cfg, fold_of, f) for f in range(k)]
    return _aggregate(rows)


_CRITERIA = {"brier": "min", "accuracy": "max", "r2": "max"}


def _lambda1_for(cfg: TrainConfig, lambda0: float) -> float | None:
    if cfg.lambda1 is None:
        return None                       # keep the default 0.2 * lambda0 coupling
    if cfg.lambda0 > 0:
        return lambda0 * cfg.lambda1 / cfg.lambda0
    return cfg.lambda1


def select_lambda(table: RawTable, targets, cfg: TrainConfig, grid,
                  inner_k: int = 5, criterion: str = "brier", seed: int = 0,
                  threads: int = 1) -> float:
    """Grid value optimizing the inner-CV mean criterion; ties prefer the
    larger lambda0 (the simpler model)."""
    if criterion not in _CRITERIA:
        raise ValueError(f"criterion must be one of {sorted(_CRITERIA)}")
    if len(grid) == 0:
        raise ValueError("empty lambda grid")
    direction = _CRITERIA[criterion]
    best_lam, best_score = None, None
    for lam0 in grid:
        point_cfg = replace(cfg, lambda0=lam0, lambda1=_lambda1_for(cfg, lam0))
        score = cross_validate(table, targets, point_cfg, inner_k, seed,
                               threads=threads).metric(criterion)
        better = (
            best_score is None
            or (direction == "min" and score < best_score)
            or (direction == "max" and score > best_score)
            or (score == best_score and lam0 > best_lam)
        )
        if better:
            best_lam, best_score = lam0, score
    return float(best_lam)


def nested_cross_validate(table: RawTable, targets, cfg: TrainConfig, grid,
                          k: int = 10, inner_k: int = 5, criterion: str = "brier",
                          seed: int = 0, threads: int = 1):
    """Outer k-fold CV with per-fold inner selection of lambda0.

    Returns (MetricSet, chosen lambdas per outer fold)."""
    values, label_map = target_mode(targets, cfg.family)
    fold_of = make_folds(table.n_rows, k,
                         seed, values if cfg.family == "logistic" else None)
    rows, chosen = [], []

    def run(fold):
        train_idx = np.flatnonzero(fold_of != fold)
        test_idx = np.flatnonzero(fold_of == fold)
        train_table = table.select_rows(train_idx)
        lam0 = select_lambda(train_table, targets[train_idx], cfg, grid,
                             inner_k, criterion, seed=seed * 1000 + fold)
        fold_cfg = replace(cfg, lambda0=lam0, lambda1=_lambda1_for(cfg, lam0))
        dictionary = build_dictionary(train_table, cfg.n_quantiles)
        data = binarize(train_table, dictionary, values[train_idx],
                        include_numeric=cfg.uses_numeric())
        model, _trace = train(data, fold_cfg, label_map)
        preds = predict_table(model, table.select_rows(test_idx))
        return _fold_metrics(cfg.family, preds, values[test_idx], model), lam0

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, range(k)))
    else:
        results = [run(f) for f in range(k)]
    for row, lam0 in results:
        rows.append(row)
        chosen.append(lam0)
    return _aggregate(rows), chosen


def default_grid() -> list:
    """12 values log-spaced in [1e-4, 1], largest first."""
    return [float(v) for v in np.logspace(0, -4, 12)]


def sweep(table: RawTable, targets, cfg: TrainConfig, grid, k: int = 10,
          seed: int = 0, threads: int = 1) -> list:
    """One TradeoffPoint per grid value (full k-fold CV each), in grid order."""
    points = []
    for lam0 in grid:
        point_cfg = replace(cfg, lambda0=lam0, lambda1=_lambda1_for(cfg, lam0))
        ms = cross_validate(table, targets, point_cfg, k, seed, threads=threads)
        points.append(TradeoffPoint(float(lam0), point_cfg.resolved_lambda1(), ms))
    return points


def pareto(points: list, perf_metric: str = "brier",
           perf_direction: str = "min") -> list:
    """Points not dominated by any point with both strictly better
    performance and strictly lower weighted complexity, sorted by
    complexity ascending."""
    if perf_direction not in ("min", "max"):
        raise ValueError("perf_direction must be 'min' or 'max'")

    def perf(p):
        v = p.metrics.metric(perf_metric)
        return v if perf_direction == "min" else -v

    keep = []
    for p in points:
        dominated = any(
            perf(q) < perf(p) and q.metrics.weighted_rules < p.metrics.weighted_rules
            for q in points)
        if not dominated:
            keep.append(p)
    keep.sort(key=lambda p: (p.metrics.weighted_rules, perf(p)))
    return keep


def sweep_csv(points: list, perf_metric: str = "brier",
              perf_direction: str = "min") -> str:
    """CSV rows in grid order with a pareto membership flag."""
    front = {id(p) for p in pareto(points, perf_metric, perf_direction)}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda0", "lambda1", "metric", "metric_se", "weighted_rules",
                "weighted_rules_se", "n_rules", "pareto"])
    for p in points:
        w.writerow([
            repr(p.lambda0), repr(p.lambda1),
            repr(p.metrics.metric(perf_metric)), repr(p.metrics.metric(perf_metric + "_se")),
            repr(p.metrics.weighted_rules), repr(p.metrics.weighted_rules_se),
            repr(p.metrics.n_rules), int(id(p) in front),
        ])
    return buf.getvalue()
