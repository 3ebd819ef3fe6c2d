# ruleglm/pricing.py
"""Search for conjunctions with negative reduced cost.

The reduced cost of a candidate conjunction with column a (its 0/1 truth
vector) is  sign * (1/n) sum_i r_i a_i + lambda0 + lambda1 * degree,
where r are the current prediction residuals. Minimizing it over all
conjunctions of the singleton basis is done two ways:

* ``price_heuristic`` grows conjunctions one literal at a time, degree by
  degree. Children of the chosen parents are scored by their objective
  change dv and an optimistic lower bound lb on all deeper descendants;
  the next parents are the best children by (dv + lb)/2, after discarding
  children whose bound cannot beat the incumbent.

* ``price_exact`` is a depth-first branch and bound over literal subsets.
  Its node bound keeps every favorable active residual and drops every
  unfavorable one for free, which is valid for all descendants, so the
  returned minimum is certified exact (unless the node budget runs out).

Tie-breaking is everywhere by lowest literal index, making runs
bit-reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binarizer import BinarizedDataset

EARLY_STOP_MODES = ("none", "immediate", "after_degree")


@dataclass(frozen=True, order=True)
class Conjunction:
    """A rule antecedent: AND of the basis literals in ``literals`` (sorted)."""
    literals: tuple

    def __post_init__(self):
        if tuple(sorted(set(self.literals))) != self.literals:
            raise ValueError("literals must be sorted and distinct")

    @property
    def degree(self) -> int:
        return len(self.literals)


@dataclass(frozen=True)
class PricedColumn:
    conjunction: Conjunction
    objective: float
    column_bits: np.ndarray
    certified: bool = False     # True only for an exact search within budget


@dataclass
class PricingProblem:
    """One sign of the pricing subproblem over a candidate literal matrix.

    ``bits`` columns are the candidate literals (the singleton basis when
    built from a dataset); ``feature_ids`` maps columns back to dictionary
    feature indices. ``exclusion_groups`` are column-index sets of which a
    conjunction may use at most one member.
    """
    bits: np.ndarray
    residuals: np.ndarray
    lambda0: float
    lambda1: float
    sign: int
    d_max: int = 5
    beam_width: int = 1
    k_best: int = 1
    early_stop: str = "none"
    node_budget: int = 10_000_000
    feature_ids: tuple | None = None
    exclusion_groups: tuple = ()

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        self.residuals = np.asarray(self.residuals, dtype=float)
        if self.bits.shape[0] != len(self.residuals):
            raise ValueError("bits and residuals disagree on n")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.d_max < 1:
            raise ValueError("d_max must be >= 1")
        if self.early_stop not in EARLY_STOP_MODES:
            raise ValueError(f"early_stop must be one of {EARLY_STOP_MODES}")

    @staticmethod
    def from_dataset(data: BinarizedDataset, residuals: np.ndarray, lambda0: float,
                     lambda1: float, sign: int, **knobs) -> "PricingProblem":
        basis = list(data.dictionary.singleton_basis)
        pos_of = {f: c for c, f in enumerate(basis)}
        groups = []
        for group in data.dictionary.exclusion_groups:
            cols = tuple(sorted(pos_of[f] for f in group if f in pos_of))
            if len(cols) >= 2:
                groups.append(cols)
        return PricingProblem(
            data.bits[:, basis], residuals, lambda0, lambda1, sign,
            feature_ids=tuple(basis), exclusion_groups=tuple(groups), **knobs)

    def column_group(self) -> np.ndarray:
        """Group id per column, -1 for ungrouped."""
        g = np.full(self.bits.shape[1], -1, dtype=int)
        for gid, group in enumerate(self.exclusion_groups):
            for c in group:
                g[c] = gid
        return g

    def to_feature_literals(self, cols) -> tuple:
        if self.feature_ids is None:
            return tuple(sorted(cols))
        return tuple(sorted(self.feature_ids[c] for c in cols))


def reduced_cost(column_bits: np.ndarray, r: np.ndarray, lambda0: float,
                 lambda1: float, degree: int, sign: int) -> float:
    """sign * (1/n) sum r_i a_i + lambda0 + lambda1 * degree."""
    n = len(r)
    return sign * float(np.asarray(column_bits, dtype=float) @ r) / n + lambda0 + lambda1 * degree


def delta_v(x_j: np.ndarray, active: np.ndarray, r: np.ndarray,
            lambda1: float, sign: int) -> float:
    """Objective change from adding literal j under a parent active-row set:
    lambda1 minus the sign-scaled residuals of the active rows the literal
    removes (those with x_ij = 0). The 1/n uses the full instance count."""
    s = sign * r[active] / len(r)
    return lambda1 - float(s[np.asarray(x_j, dtype=np.uint8)[active] == 0].sum())


def lower_bound(x_j: np.ndarray, active: np.ndarray, r: np.ndarray,
                lambda1: float, sign: int) -> float:
    """Optimistic bound on the objective change of any strict descendant of
    child j: one more literal (2*lambda1 total) removes every remaining
    positive-residual row, while negative-residual rows are removed only by
    j itself."""
    s = sign * r[active] / len(r)
    removed = np.asarray(x_j, dtype=np.uint8)[active] == 0
    return 2.0 * lambda1 - float(s[s > 0].sum()) - float(s[(s < 0) & removed].sum())


def _column_bits(bits: np.ndarray, cols) -> np.ndarray:
    out = bits[:, cols[0]].copy()
    for c in cols[1:]:
        out &= bits[:, c]
    return out


@dataclass
class _Node:
    cols: tuple                  # candidate-matrix column indices, sorted
    value: float                 # lambda0 + lambda1*degree + sum of active scaled residuals
    active: np.ndarray           # rows where the conjunction holds


class _Best:
    """K smallest (objective, literals) with deterministic tie-breaking."""

    def __init__(self, k: int):
        self.k = k
        self.items: dict = {}

    def offer(self, cols: tuple, objective: float) -> None:
        prev = self.items.get(cols)
        if prev is None or objective < prev:
            self.items[cols] = objective

    def ranked(self) -> list:
        return sorted(self.items.items(), key=lambda kv: (kv[1], kv[0]))[: self.k]

    def best_value(self) -> float:
        return min(self.items.values()) if self.items else np.inf


def _eligible(p: PricingProblem, node: _Node, group_of: np.ndarray) -> np.ndarray:
    """Columns that may extend ``node``: unused and group-compatible."""
    mask = np.ones(p.bits.shape[1], dtype=bool)
    for c in node.cols:
        mask[c] = False
        if group_of[c] >= 0:
            mask &= group_of != group_of[c]
    return np.flatnonzero(mask)


def price_heuristic(p: PricingProblem) -> list:
    """Beam search in order of increasing degree; returns up to k_best
    columns, each with its objective recomputed exactly from full bits."""
    n, d = p.bits.shape
    if d == 0 or n == 0:
        return []
    s = p.sign * p.residuals / n
    group_of = p.column_group()
    best = _Best(p.k_best)

    root = _Node(cols=(), value=p.lambda0 + float(s.sum()), active=np.arange(n))
    parents = [root]
    stop = False
    for _depth in range(1, p.d_max + 1):
        scored = {}      # cols tuple -> (bound_abs, score, child_obj, parent, j)
        for parent in parents:
            cand = _eligible(p, parent, group_of)
            if len(cand) == 0 or len(parent.active) == 0:
                continue
            sub = p.bits[np.ix_(parent.active, cand)]
            s_act = s[parent.active]
            removed = (1 - sub).astype(float)
            dv = p.lambda1 - s_act @ removed
            lb = (2.0 * p.lambda1 - s_act[s_act > 0].sum()
                  - np.minimum(s_act, 0.0) @ removed)
            # children constant over the active rows are evaluated as
            # incumbents but are redundant as parents (degenerate children)
            varying = sub.min(axis=0) != sub.max(axis=0)
            for i in range(len(cand)):
                j = int(cand[i])
                child_cols = tuple(sorted(parent.cols + (j,)))
                child_obj = parent.value + float(dv[i])
                best.offer(child_cols, child_obj)
                if p.early_stop == "immediate" and child_obj < 0:
                    stop = True
                    break
                if not varying[i]:
                    continue
                entry = (parent.value + float(lb[i]),
                         parent.value + float(dv[i] + lb[i]) / 2.0,
                         child_obj, parent, j)
                old = scored.get(child_cols)
                if old is None or entry[1] < old[1]:
                    scored[child_cols] = entry
            if stop:
                break
        if stop or _depth == p.d_max:
            break
        if p.early_stop == "after_degree" and best.best_value() < 0:
            break
        incumbent = best.best_value()
        survivors = sorted(
            ((cols, e) for cols, e in scored.items() if e[0] < incumbent),
            key=lambda kv: (kv[1][1], kv[0]))[: p.beam_width]
        if not survivors:
            break
        parents = []
        for child_cols, (_bound, _score, obj, parent, j) in survivors:
            active = parent.active[p.bits[parent.active, j] == 1]
            parents.append(_Node(child_cols, obj, active))

    out = []
    for cols, _obj in best.ranked():
        col_bits = _column_bits(p.bits, list(cols))
        lits = p.to_feature_literals(cols)
        out.append(PricedColumn(
            Conjunction(lits),
            reduced_cost(col_bits, p.residuals, p.lambda0, p.lambda1, len(cols), p.sign),
            col_bits,
        ))
    out.sort(key=lambda c: (c.objective, c.conjunction.literals))
    return out


@dataclass
class _ExactState:
    best_obj: float = np.inf
    best_cols: tuple | None = None
    nodes: int = 0
    exhausted: bool = False


def price_exact(p: PricingProblem) -> PricedColumn | None:
    """Depth-first branch and bound over literal subsets (degree <= d_max).

    Candidates at each node are ordered by dv ascending and expanded with
    suffix candidate lists, so every subset is visited at most once. A
    subtree is pruned when lambda0 + lambda1*(depth+1) plus the favorable
    active residual mass cannot beat the incumbent. Returns None when there
    are no candidate literals; ``certified`` is False if the node budget was
    exhausted before the search completed.
    """
    n, d = p.bits.shape
    if d == 0 or n == 0:
        return None
    s = p.sign * p.residuals / n
    group_of = p.column_group()
    state = _ExactState()

    def visit(cols: tuple, value: float, active: np.ndarray, cand: np.ndarray) -> None:
        if state.exhausted:
            return
        depth = len(cols)
        if depth >= 1 and (value < state.best_obj
                           or (value == state.best_obj and state.best_cols is not None
                               and cols < state.best_cols)):
            state.best_obj = value
            state.best_cols = cols
        if depth == p.d_max or len(cand) == 0:
            return
        neg_mass = float(np.minimum(s[active], 0.0).sum())
        if p.lambda0 + p.lambda1 * (depth + 1) + neg_mass >= state.best_obj:
            return
        s_act = s[active]
        sub = p.bits[np.ix_(active, cand)]
        dv = p.lambda1 - s_act @ (1 - sub).astype(float)
        order = np.lexsort((cand, dv))
        for pos_rank, i in enumerate(order):
            state.nodes += 1
            if state.nodes > p.node_budget:
                state.exhausted = True
                return
            j = int(cand[i])
            child_cols = tuple(sorted(cols + (j,)))
            child_active = active[sub[:, i] == 1]
            rest = order[pos_rank + 1:]
            child_cand = cand[rest]
            if group_of[j] >= 0:
                child_cand = child_cand[group_of[child_cand] != group_of[j]]
            visit(child_cols, value + float(dv[i]), child_active, child_cand)
            if state.exhausted:
                return

    root_value = p.lambda0 + float(s.sum())
    visit((), root_value, np.arange(n), np.arange(d))

    if state.best_cols is None:
        return None
    col_bits = _column_bits(p.bits, list(state.best_cols))
    lits = p.to_feature_literals(state.best_cols)
    return PricedColumn(
        Conjunction(lits),
        reduced_cost(col_bits, p.residuals, p.lambda0, p.lambda1, len(state.best_cols), p.sign),
        col_bits,
        certified=not state.exhausted,
    )
