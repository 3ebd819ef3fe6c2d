# ruleglm/binarizer.py
"""Binary feature construction.

Numeric columns become bidirectional threshold tests (x <= t, x > t) at
interior sample quantiles; categorical columns become one-hot tests and
their negations (x == c, x != c). Every feature has a complement; one
member of each pair is kept in the singleton basis so that the basis plus
an intercept spans the same space as the full feature set.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .datatable import NUMERIC, DataError, RawTable

LEQ, GT, EQ, NEQ = "leq", "gt", "eq", "neq"
_COMPLEMENT_OP = {LEQ: GT, GT: LEQ, EQ: NEQ, NEQ: EQ}
_OP_SYMBOL = {LEQ: "<=", GT: ">", EQ: "==", NEQ: "!="}


@dataclass(frozen=True)
class BinaryFeature:
    source_column: int
    op: str          # leq | gt | eq | neq
    value: object    # threshold (float) or category (str)
    display: str

    def evaluate(self, raw_value) -> bool:
        if self.op == LEQ:
            return float(raw_value) <= self.value
        if self.op == GT:
            return float(raw_value) > self.value
        if self.op == EQ:
            return str(raw_value) == self.value
        return str(raw_value) != self.value


def feature_display(column_name: str, op: str, value) -> str:
    v = f"{value:g}" if isinstance(value, float) else str(value)
    return f"{column_name} {_OP_SYMBOL[op]} {v}"


@dataclass(frozen=True)
class FeatureDictionary:
    features: tuple                 # BinaryFeature per index
    complement_of: dict             # feature index -> complementary feature index
    exclusion_groups: tuple         # tuples of eq-feature indices per categorical column
    singleton_basis: tuple          # sorted indices: leq and eq members of each pair
    column_names: tuple
    column_kinds: tuple

    def __post_init__(self):
        for a, b in self.complement_of.items():
            if self.complement_of.get(b) != a:
                raise ValueError("complement_of must be a symmetric involution")

    @property
    def n_features(self) -> int:
        return len(self.features)

    def group_index(self) -> dict:
        """Map feature index -> exclusion group id (features without a group absent)."""
        out = {}
        for gid, group in enumerate(self.exclusion_groups):
            for j in group:
                out[j] = gid
        return out

    def to_json(self) -> str:
        return json.dumps({
            "columns": [{"name": n, "kind": k} for n, k in zip(self.column_names, self.column_kinds)],
            "features": [
                {"source_column": f.source_column, "op": f.op, "value": f.value,
                 "complement": self.complement_of[i]}
                for i, f in enumerate(self.features)
            ],
            "exclusion_groups": [list(g) for g in self.exclusion_groups],
            "singleton_basis": list(self.singleton_basis),
        }, indent=1)

    @staticmethod
    def from_json(text: str) -> "FeatureDictionary":
        doc = json.loads(text)
        names = tuple(c["name"] for c in doc["columns"])
        kinds = tuple(c["kind"] for c in doc["columns"])
        feats = tuple(
            BinaryFeature(f["source_column"], f["op"], f["value"],
                          feature_display(names[f["source_column"]], f["op"], f["value"]))
            for f in doc["features"]
        )
        comp = {i: f["complement"] for i, f in enumerate(doc["features"])}
        return FeatureDictionary(
            feats, comp,
            tuple(tuple(g) for g in doc["exclusion_groups"]),
            tuple(doc["singleton_basis"]), names, kinds,
        )


@dataclass(frozen=True)
class BinarizedDataset:
    """Immutable binary matrix over all dictionary features, plus targets.

    ``numeric_raw`` (optional) holds the original numeric columns after
    standardization with the stored means/scales; at training time those
    constants come from this same data, at transform time from the fit.
    """
    bits: np.ndarray                # n x n_features, uint8
    targets: np.ndarray
    dictionary: FeatureDictionary
    numeric_raw: np.ndarray | None = None
    numeric_columns: tuple = ()     # raw column index per numeric_raw column
    numeric_means: np.ndarray | None = None
    numeric_scales: np.ndarray | None = None

    @property
    def n_rows(self) -> int:
        return self.bits.shape[0]

    def basis_bits(self) -> np.ndarray:
        return self.bits[:, list(self.dictionary.singleton_basis)]


def interior_quantile_thresholds(values: np.ndarray, n_quantiles: int) -> list:
    """Distinct thresholds at levels k/(n_quantiles+1), k=1..n_quantiles.

    Thresholds equal to the column maximum are dropped: x <= max is constant
    and carries no information (a constant column therefore yields none).
    """
    if n_quantiles < 1:
        raise ValueError("n_quantiles must be >= 1")
    levels = [k / (n_quantiles + 1) for k in range(1, n_quantiles + 1)]
    qs = np.quantile(values, levels)
    top = values.max()
    out = []
    for t in qs:
        t = float(t)
        if t >= top:
            continue
        if not out or t > out[-1]:
            out.append(t)
    return out


def build_dictionary(table: RawTable, n_quantiles: int = 9) -> FeatureDictionary:
    """Derive the binary feature catalog from a training table."""
    if table.n_cols == 0:
        raise DataError("table has no feature columns")
    features = []
    complement = {}
    groups = []
    basis = []

    def add_pair(col, op, value, name):
        i = len(features)
        features.append(BinaryFeature(col, op, value, feature_display(name, op, value)))
        cop = _COMPLEMENT_OP[op]
        features.append(BinaryFeature(col, cop, value, feature_display(name, cop, value)))
        complement[i] = i + 1
        complement[i + 1] = i
        basis.append(i)
        return i

    for c, (name, col) in enumerate(zip(table.column_names, table.columns)):
        if col.kind == NUMERIC:
            for t in interior_quantile_thresholds(col.values, n_quantiles):
                add_pair(c, LEQ, t, name)
        else:
            cats = sorted({str(v) for v in col.values})
            eq_idx = [add_pair(c, EQ, cat, name) for cat in cats]
            if len(eq_idx) >= 2:
                groups.append(tuple(eq_idx))

    return FeatureDictionary(
        tuple(features), complement, tuple(groups), tuple(basis),
        tuple(table.column_names),
        tuple(col.kind for col in table.columns),
    )


def binarize(
    table: RawTable,
    dictionary: FeatureDictionary,
    targets: np.ndarray,
    include_numeric: bool = False,
    numeric_stats: tuple | None = None,
) -> BinarizedDataset:
    """Evaluate every dictionary predicate on every row.

    ``numeric_stats`` = (means, scales) reuses a training fit's
    standardization; when None the constants are computed from ``table``.
    A category unseen by the dictionary turns every eq bit off and every
    neq bit on, so transform never fails on new data.
    """
    if table.column_names != dictionary.column_names:
        raise DataError(
            f"schema mismatch: table columns {table.column_names} vs dictionary {dictionary.column_names}")
    for name, col, kind in zip(table.column_names, table.columns, dictionary.column_kinds):
        if col.kind != kind:
            raise DataError(f"column {name!r} is {col.kind}, dictionary expects {kind}")

    n = table.n_rows
    bits = np.zeros((n, dictionary.n_features), dtype=np.uint8)
    for j, f in enumerate(dictionary.features):
        col = table.columns[f.source_column]
        if f.op == LEQ:
            bits[:, j] = col.values <= f.value
        elif f.op == GT:
            bits[:, j] = col.values > f.value
        elif f.op == EQ:
            bits[:, j] = col.values == f.value
        else:
            bits[:, j] = col.values != f.value

    numeric_raw = None
    num_cols: tuple = ()
    means = scales = None
    if include_numeric:
        num_cols = tuple(
            c for c, kind in enumerate(dictionary.column_kinds) if kind == NUMERIC)
        raw = np.column_stack(
            [table.columns[c].values for c in num_cols]) if num_cols else np.zeros((n, 0))
        if numeric_stats is not None:
            means, scales = (np.asarray(a, dtype=float) for a in numeric_stats)
        else:
            means = raw.mean(axis=0) if num_cols else np.zeros(0)
            sd = raw.std(axis=0, ddof=1) if n > 1 and num_cols else np.zeros(len(num_cols))
            scales = np.where(sd > 0, sd, 1.0)
        numeric_raw = (raw - means) / scales

    return BinarizedDataset(
        bits, np.asarray(targets, dtype=float), dictionary,
        numeric_raw, num_cols, means, scales,
    )
