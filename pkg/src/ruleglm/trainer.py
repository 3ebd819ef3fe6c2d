# ruleglm/trainer.py
"""Column-generation training loop.

Variants: LR1 / LR1N fit the first-degree columns once (optionally with the
raw numeric features) and never price. LRR / LRRN alternate a restricted
weighted-L1 fit with pricing for both signs, adding the best negative
reduced-cost conjunctions until neither sign can improve, then refit the
surviving support without regularization to de-bias the coefficients.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .binarizer import BinarizedDataset
from .glm import (DesignMatrix, FitResult, fit_weighted_l1, objective, residuals)
from .model import assemble_ensemble
from .pricing import PricingProblem, price_exact, price_heuristic

VARIANTS = ("LR1", "LR1N", "LRR", "LRRN")

RC_EPS = 1e-8    # a reduced cost above -RC_EPS is treated as non-improving


@dataclass
class PricingConfig:
    mode: str = "heuristic"          # heuristic | exact
    d_max: int = 5
    beam: int = 1
    k_best: int = 1
    early_stop: str = "none"
    node_budget: int = 10_000_000


@dataclass
class TrainConfig:
    family: str = "logistic"
    lambda0: float = 1e-3
    lambda1: float | None = None     # None -> 0.2 * lambda0
    variant: str = "LRR"
    max_cg_iters: int = 100
    time_budget: float = 300.0
    pricing: PricingConfig = field(default_factory=PricingConfig)
    debias: bool = True
    debias_threshold: float = 1e-5
    solver_tol: float = 1e-7
    solver_max_iter: int = 10_000
    penalize_intercept: bool = False
    n_quantiles: int = 9             # used by callers that binarize

    def resolved_lambda1(self) -> float:
        return 0.2 * self.lambda0 if self.lambda1 is None else self.lambda1

    def uses_pricing(self) -> bool:
        return self.variant in ("LRR", "LRRN")

    def uses_numeric(self) -> bool:
        return self.variant in ("LR1N", "LRRN")

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.lambda0 < 0 or (self.lambda1 is not None and self.lambda1 < 0):
            raise ValueError("penalties must be non-negative")
        if self.pricing.mode not in ("heuristic", "exact"):
            raise ValueError("pricing.mode must be 'heuristic' or 'exact'")


@dataclass
class AddedColumn:
    literals: tuple
    sign: int
    reduced_cost: float


@dataclass
class IterationRecord:
    iteration: int
    objective: float
    best_rc_plus: float
    best_rc_minus: float
    added: list
    n_columns: int
    elapsed: float


@dataclass
class TrainTrace:
    """Per-iteration CG history. ``termination_reason`` is one of
    certified_optimal, no_improving_column, max_iters, time_budget, or
    single_fit for the non-CG variants."""
    records: list = field(default_factory=list)
    termination_reason: str = ""
    warnings: list = field(default_factory=list)

    def objectives(self) -> list:
        return [r.objective for r in self.records]

    def to_jsonl(self) -> str:
        lines = []
        for r in self.records:
            lines.append(json.dumps({
                "iteration": r.iteration,
                "objective": r.objective,
                "best_rc_plus": r.best_rc_plus,
                "best_rc_minus": r.best_rc_minus,
                "added": [{"literals": list(a.literals), "sign": a.sign,
                           "reduced_cost": a.reduced_cost} for a in r.added],
                "n_columns": r.n_columns,
                "elapsed": r.elapsed,
            }))
        lines.append(json.dumps({
            "termination_reason": self.termination_reason,
            "warnings": self.warnings,
        }))
        return "\n".join(lines) + "\n"


def init_restricted_set(data: BinarizedDataset, cfg: TrainConfig) -> DesignMatrix:
    """Intercept + one column per singleton-basis feature (penalty
    lambda0 + lambda1, degree 1) + standardized numeric columns
    (penalty lambda0) for the N variants."""
    lam0, lam1 = cfg.lambda0, cfg.resolved_lambda1()
    basis = list(data.dictionary.singleton_basis)
    cols = [np.ones(data.n_rows)]
    pens = [lam0 if cfg.penalize_intercept else 0.0]
    keys = ["intercept"]
    for f in basis:
        cols.append(data.bits[:, f].astype(float))
        pens.append(lam0 + lam1)
        keys.append(("rule", (f,)))
    if cfg.uses_numeric():
        if data.numeric_raw is None:
            raise ValueError(f"variant {cfg.variant} needs numeric_raw in the dataset")
        for i, c in enumerate(data.numeric_columns):
            cols.append(data.numeric_raw[:, i])
            pens.append(lam0)
            keys.append(("numeric", c))
    return DesignMatrix(cfg.family, np.column_stack(cols), np.array(pens), keys)


def _fit(design: DesignMatrix, y, cfg: TrainConfig, warm, trace: TrainTrace) -> FitResult:
    fit = fit_weighted_l1(design, y, warm=warm, tol=cfg.solver_tol,
                          max_iter=cfg.solver_max_iter)
    if not fit.converged:
        trace.warnings.append(
            f"solver stopped after {fit.sweeps} sweeps with KKT residual {fit.kkt:.3g}")
    return fit


def _price_both_signs(data, r, lam0, lam1, pc: PricingConfig):
    """Returns {sign: list of PricedColumn} and whether both searches were
    certified exact."""
    results = {}
    certified = pc.mode == "exact"
    for sign in (1, -1):
        prob = PricingProblem.from_dataset(
            data, r, lam0, lam1, sign, d_max=pc.d_max, beam_width=pc.beam,
            k_best=pc.k_best, early_stop=pc.early_stop, node_budget=pc.node_budget)
        if pc.mode == "exact":
            col = price_exact(prob)
            results[sign] = [col] if col is not None else []
            if col is not None and not col.certified:
                certified = False
        else:
            results[sign] = price_heuristic(prob)
    return results, certified


def debias(design: DesignMatrix, y: np.ndarray, beta: np.ndarray,
           threshold: float, cfg: TrainConfig):
    """Drop columns with |beta| <= threshold (intercept always kept) and
    refit the survivors with all penalties zero, warm-started from beta.
    Returns (design, beta, fell_back); on a diverging refit the penalized
    inputs are returned unchanged with fell_back=True."""
    keep = [0] + [k for k in range(1, design.p) if abs(beta[k]) > threshold]
    sub = DesignMatrix(design.family, design.X[:, keep],
                       np.zeros(len(keep)), [design.keys[k] for k in keep])
    fit = fit_weighted_l1(sub, y, warm=beta[keep], tol=cfg.solver_tol,
                          max_iter=cfg.solver_max_iter)
    if not np.all(np.isfinite(fit.beta)):
        return design, beta, True
    return sub, fit.beta, False


def train(data: BinarizedDataset, cfg: TrainConfig, label_map: dict | None = None):
    """Fit a rule ensemble; returns (RuleEnsemble, TrainTrace)."""
    y = data.targets
    lam0, lam1 = cfg.lambda0, cfg.resolved_lambda1()
    trace = TrainTrace()
    start = time.monotonic()

    design = init_restricted_set(data, cfg)
    fit = _fit(design, y, cfg, None, trace)

    if not cfg.uses_pricing():
        trace.termination_reason = "single_fit"
    else:
        existing = {key[1] for key in design.keys if isinstance(key, tuple) and key[0] == "rule"}
        n_basis = len(data.dictionary.singleton_basis)
        full_depth = cfg.pricing.d_max >= n_basis
        for it in range(1, cfg.max_cg_iters + 1):
            obj_now = objective(design, y, fit.beta)
            r = residuals(design, y, fit.beta)
            results, certified = _price_both_signs(data, r, lam0, lam1, cfg.pricing)
            best_plus = min((c.objective for c in results[1]), default=np.inf)
            best_minus = min((c.objective for c in results[-1]), default=np.inf)
            best = min(best_plus, best_minus)

            added = []
            if best >= -RC_EPS:
                reason = ("certified_optimal"
                          if cfg.pricing.mode == "exact" and full_depth and certified
                          else "no_improving_column")
            else:
                for sign in (1, -1):
                    taken = 0
                    for col in results[sign]:
                        if taken >= cfg.pricing.k_best or col.objective >= -RC_EPS:
                            break
                        lits = col.conjunction.literals
                        if lits in existing:
                            continue
                        existing.add(lits)
                        design = design.with_columns(
                            col.column_bits.astype(float),
                            [lam0 + lam1 * col.conjunction.degree],
                            [("rule", lits)])
                        added.append(AddedColumn(lits, sign, col.objective))
                        taken += 1
                reason = "no_improving_column" if not added else ""
                if not added:
                    trace.warnings.append(
                        "pricing found only conjunctions already in the design")

            trace.records.append(IterationRecord(
                it, obj_now, float(best_plus), float(best_minus), added, design.p,
                time.monotonic() - start))

            if reason:
                trace.termination_reason = reason
                break
            fit = _fit(design, y, cfg,
                       np.concatenate([fit.beta, np.zeros(design.p - len(fit.beta))]), trace)
            if time.monotonic() - start > cfg.time_budget:
                trace.termination_reason = "time_budget"
                break
        else:
            trace.termination_reason = "max_iters"

    beta = fit.beta
    if len(beta) < design.p:
        beta = np.concatenate([beta, np.zeros(design.p - len(beta))])
    if cfg.debias:
        design, beta, fell_back = debias(design, y, beta, cfg.debias_threshold, cfg)
        if fell_back:
            trace.warnings.append("de-bias refit diverged; keeping penalized coefficients")

    ensemble = assemble_ensemble(design, beta, data, cfg.family, label_map)
    return ensemble, trace
