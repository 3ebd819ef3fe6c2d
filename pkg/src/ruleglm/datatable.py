# ruleglm/datatable.py
"""CSV loading and typed, immutable tables.

A loaded table keeps the original cell text (for exact round-trips) next to
parsed values. Numeric columns are median-imputed at load time; categorical
missing entries become their own category.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

MISSING_TOKENS = {"", "?", "NA", "N/A", "na", "n/a", "NaN", "nan", "null", "NULL", "None"}
MISSING_CATEGORY = "<missing>"

NUMERIC = "numeric"
CATEGORICAL = "categorical"


class DataError(ValueError):
    """Raised for malformed input data: bad files, bad schemas, bad targets."""


def _parse_finite(text: str) -> float | None:
    try:
        v = float(text)
    except ValueError:
        return None
    return v if np.isfinite(v) else None


@dataclass(frozen=True)
class RawColumn:
    """One column: parsed values plus the original cell text.

    ``values`` is a numpy array: float64 with missing entries median-imputed
    for numeric columns, object (str) with missing mapped to MISSING_CATEGORY
    for categorical columns. ``raw_text`` keeps cells as read (None = missing).
    """
    kind: str
    values: np.ndarray
    raw_text: tuple

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise ValueError(f"unknown column kind {self.kind!r}")


@dataclass(frozen=True)
class RawTable:
    column_names: tuple
    columns: tuple
    n_rows: int

    def __post_init__(self):
        if len(set(self.column_names)) != len(self.column_names):
            raise DataError("duplicate column names")
        for name, col in zip(self.column_names, self.columns):
            if len(col.values) != self.n_rows:
                raise DataError(f"column {name!r} has {len(col.values)} entries, expected {self.n_rows}")

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    def column(self, name: str) -> RawColumn:
        try:
            i = self.column_names.index(name)
        except ValueError:
            raise DataError(f"no column named {name!r}") from None
        return self.columns[i]

    def select_rows(self, idx) -> "RawTable":
        """New table restricted to the given row indices (parsed values are
        sliced as-is; numeric imputation is not recomputed)."""
        idx = np.asarray(idx, dtype=int)
        cols = tuple(
            RawColumn(c.kind, c.values[idx], tuple(c.raw_text[i] for i in idx))
            for c in self.columns
        )
        return RawTable(self.column_names, cols, len(idx))

    def to_csv_text(self) -> str:
        """Re-serialize from the original cell text (missing cells -> '')."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.column_names)
        for i in range(self.n_rows):
            w.writerow([c.raw_text[i] if c.raw_text[i] is not None else "" for c in self.columns])
        return buf.getvalue()


def _build_column(cells: list) -> RawColumn:
    raw = tuple(None if c in MISSING_TOKENS else c for c in cells)
    present = [c for c in raw if c is not None]
    parsed = [_parse_finite(c) for c in present]
    if present and all(v is not None for v in parsed):
        vals = np.full(len(raw), np.nan)
        fill = float(np.median(parsed))
        for i, c in enumerate(raw):
            vals[i] = _parse_finite(c) if c is not None else fill
        return RawColumn(NUMERIC, vals, raw)
    if not present:
        # all-missing column: numeric by the vacuous rule, constant zero
        return RawColumn(NUMERIC, np.zeros(len(raw)), raw)
    vals = np.array([c if c is not None else MISSING_CATEGORY for c in raw], dtype=object)
    return RawColumn(CATEGORICAL, vals, raw)


def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            rows = list(reader)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(header)
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: row {r + 2} has {len(row)} fields, expected {width}")
    return header, rows


def load_table(path) -> RawTable:
    """Load a CSV with a header row; every column becomes a feature column.
    A column is numeric iff every non-missing cell parses as a finite real;
    otherwise it is categorical."""
    header, rows = _read_rows(path)
    cols = tuple(_build_column([row[i] for row in rows]) for i in range(len(header)))
    return RawTable(tuple(header), cols, len(rows))


def load_csv(path, target_name: str):
    """Load a CSV and split off the target column.

    Returns (RawTable, targets) where targets is an object array of raw
    target strings.
    """
    header, rows = _read_rows(path)
    if target_name not in header:
        raise DataError("target column not found")
    t = header.index(target_name)
    targets = np.array([row[t] for row in rows], dtype=object)
    names = tuple(h for i, h in enumerate(header) if i != t)
    cols = tuple(
        _build_column([row[i] for row in rows])
        for i in range(len(header)) if i != t
    )
    return RawTable(names, cols, len(rows)), targets


def target_mode(targets: np.ndarray, family: str):
    """Coerce raw target strings for the given family.

    logistic: exactly two distinct labels, mapped to {0, 1} in sorted order;
    returns (float array, label_map) with label_map = {raw_label: 0 or 1}.
    linear: every target must parse as a finite real; label_map is None.
    """
    if family == "logistic":
        labels = sorted({str(t) for t in targets})
        if len(labels) != 2:
            raise DataError(f"logistic target needs exactly 2 distinct labels, got {len(labels)}")
        label_map = {labels[0]: 0, labels[1]: 1}
        return np.array([label_map[str(t)] for t in targets], dtype=float), label_map
    if family == "linear":
        out = np.empty(len(targets))
        for i, t in enumerate(targets):
            v = _parse_finite(str(t))
            if v is None:
                raise DataError(f"non-numeric target value {t!r} for linear family")
            out[i] = v
        return out, None
    raise ValueError(f"unknown family {family!r}")
