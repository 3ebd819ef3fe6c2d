# ruleglm/model.py
"""The trained artifact: rules with coefficients, plus prediction on raw rows.

Rules are stored by predicate (column name, operator, value) rather than by
dictionary index, and numeric terms carry their training standardization
constants, so a saved model is self-contained.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .binarizer import feature_display
from .datatable import DataError, RawTable
from .glm import predict_mean

MODEL_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RuleLiteral:
    column: str
    op: str
    value: object

    def holds(self, raw_value) -> bool:
        if self.op == "leq":
            return float(raw_value) <= self.value
        if self.op == "gt":
            return float(raw_value) > self.value
        if self.op == "eq":
            return str(raw_value) == self.value
        if self.op == "neq":
            return str(raw_value) != self.value
        raise ValueError(f"unknown op {self.op!r}")

    @property
    def display(self) -> str:
        return feature_display(self.column, self.op, self.value)


@dataclass(frozen=True)
class Rule:
    literals: tuple       # RuleLiteral, sorted by (column, op, value) text
    coef: float

    @property
    def degree(self) -> int:
        return len(self.literals)

    @property
    def display(self) -> str:
        return " AND ".join(l.display for l in self.literals)

    def holds(self, row: dict) -> bool:
        return all(l.holds(row[l.column]) for l in self.literals)


@dataclass(frozen=True)
class NumericTerm:
    column: str
    mean: float
    scale: float
    coef: float


@dataclass(frozen=True)
class RuleEnsemble:
    family: str
    intercept: float
    rules: tuple             # Rule, nonzero coefficients, distinct antecedents
    numeric_terms: tuple     # NumericTerm, nonzero coefficients
    feature_columns: tuple   # training schema (without the target)
    label_map: dict | None = None    # logistic: raw label -> {0, 1}

    def linear_score(self, row: dict) -> float:
        eta = self.intercept
        for rule in self.rules:
            if rule.holds(row):
                eta += rule.coef
        for t in self.numeric_terms:
            eta += t.coef * (float(row[t.column]) - t.mean) / t.scale
        return eta


def assemble_ensemble(design, beta: np.ndarray, data, family: str,
                      label_map: dict | None) -> RuleEnsemble:
    """Map fitted design columns back to predicates; zero coefficients drop."""
    d = data.dictionary
    intercept = float(beta[0])
    rules = []
    numeric_terms = []
    for key, b in zip(design.keys[1:], beta[1:]):
        if b == 0.0:
            continue
        kind, payload = key
        if kind == "rule":
            lits = tuple(
                RuleLiteral(d.column_names[d.features[f].source_column],
                            d.features[f].op, d.features[f].value)
                for f in payload)
            rules.append(Rule(tuple(sorted(lits, key=lambda l: (l.column, l.op, str(l.value)))), float(b)))
        else:
            i = data.numeric_columns.index(payload)
            numeric_terms.append(NumericTerm(
                d.column_names[payload],
                float(data.numeric_means[i]), float(data.numeric_scales[i]), float(b)))
    return RuleEnsemble(family, intercept, tuple(rules), tuple(numeric_terms),
                        d.column_names, label_map)


def predict_row(m: RuleEnsemble, row: dict) -> float:
    """Mean prediction for one raw row (mapping column name -> value).

    Logistic output is the probability of the label mapped to 1. Values must
    be non-missing; batch prediction through a RawTable gets load-time
    imputation."""
    missing = [c for c in m.feature_columns if c not in row]
    if missing:
        raise DataError(f"row is missing columns {missing}")
    return float(predict_mean(m.family, m.linear_score(row)))


def predict_table(m: RuleEnsemble, table: RawTable) -> np.ndarray:
    if set(m.feature_columns) - set(table.column_names):
        raise DataError(
            f"table lacks model columns {sorted(set(m.feature_columns) - set(table.column_names))}")
    cols = {name: table.column(name).values for name in m.feature_columns}
    out = np.empty(table.n_rows)
    for i in range(table.n_rows):
        out[i] = predict_row(m, {name: vals[i] for name, vals in cols.items()})
    return out


def complexity(m: RuleEnsemble, w: float = 0.2) -> float:
    """Weighted rule count: sum over rules of (1 + w * degree), plus 1 per
    nonzero numeric term. The intercept does not count."""
    if w < 0:
        raise ValueError("w must be non-negative")
    total = sum(1.0 + w * r.degree for r in m.rules)
    total += sum(1 for t in m.numeric_terms if t.coef != 0)
    return float(total)


def render(m: RuleEnsemble) -> str:
    """One line per term, |coefficient| descending, ties by term text."""
    terms = [(abs(m.intercept), "intercept", m.intercept)]
    for r in m.rules:
        terms.append((abs(r.coef), f"[{r.display}]", r.coef))
    for t in m.numeric_terms:
        terms.append((abs(t.coef), f"standardized({t.column})", t.coef))
    terms.sort(key=lambda x: (-x[0], x[1]))
    return "\n".join(f"{coef:.3f} · {text}" for _mag, text, coef in terms)


def _to_document(m: RuleEnsemble) -> dict:
    return {
        "version": MODEL_SCHEMA_VERSION,
        "family": m.family,
        "intercept": m.intercept,
        "label_map": m.label_map,
        "rules": [
            {"literals": [{"column": l.column, "op": l.op, "value": l.value}
                          for l in r.literals],
             "coef": r.coef}
            for r in m.rules
        ],
        "numeric_terms": [
            {"column": t.column, "mean": t.mean, "scale": t.scale, "coef": t.coef}
            for t in m.numeric_terms
        ],
        "feature_columns": list(m.feature_columns),
    }


def _from_document(doc: dict) -> RuleEnsemble:
    if not isinstance(doc, dict) or "version" not in doc:
        raise DataError("malformed model document")
    if doc["version"] != MODEL_SCHEMA_VERSION:
        raise DataError(
            f"model schema version {doc['version']!r} not supported (expected {MODEL_SCHEMA_VERSION})")
    rules = tuple(
        Rule(tuple(RuleLiteral(l["column"], l["op"], l["value"]) for l in r["literals"]),
             float(r["coef"]))
        for r in doc["rules"])
    terms = tuple(
        NumericTerm(t["column"], float(t["mean"]), float(t["scale"]), float(t["coef"]))
        for t in doc["numeric_terms"])
    return RuleEnsemble(doc["family"], float(doc["intercept"]), rules, terms,
                        tuple(doc["feature_columns"]), doc["label_map"])


def save(m: RuleEnsemble, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_to_document(m), f, indent=1)
        f.write("\n")


def load(path) -> RuleEnsemble:
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise DataError(f"cannot read model {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise DataError(f"malformed model document: {e}") from None
    return _from_document(doc)
