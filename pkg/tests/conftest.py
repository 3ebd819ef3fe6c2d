# tests/conftest.py
import csv
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))           # for oracles.py

from ruleglm.datatable import NUMERIC, CATEGORICAL, RawColumn, RawTable

DATA_DIR = Path(__file__).parent.parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


def numeric_column(values) -> RawColumn:
    vals = np.asarray(values, dtype=float)
    return RawColumn(NUMERIC, vals, tuple(str(v) for v in values))


def categorical_column(values) -> RawColumn:
    vals = np.array([str(v) for v in values], dtype=object)
    return RawColumn(CATEGORICAL, vals, tuple(str(v) for v in values))


def make_table(**columns) -> RawTable:
    """Build a RawTable from keyword columns; numeric when all floats."""
    cols = []
    names = []
    n = None
    for name, values in columns.items():
        names.append(name)
        try:
            [float(v) for v in values]
            cols.append(numeric_column(values))
        except (TypeError, ValueError):
            cols.append(categorical_column(values))
        n = len(values)
    return RawTable(tuple(names), tuple(cols), n)


def write_csv(path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return Path(path)


def replay_training(data, cfg, trace):
    """Re-run the CG fit sequence from a trace, yielding per-iteration
    (record, design, fit, residuals). The solver is deterministic, so the
    replayed states reproduce the in-run states bit for bit."""
    from ruleglm.glm import fit_weighted_l1, residuals
    from ruleglm.trainer import init_restricted_set

    lam0, lam1 = cfg.lambda0, cfg.resolved_lambda1()
    design = init_restricted_set(data, cfg)
    fit = fit_weighted_l1(design, data.targets, tol=cfg.solver_tol,
                          max_iter=cfg.solver_max_iter)
    out = []
    for rec in trace.records:
        r = residuals(design, data.targets, fit.beta)
        out.append((rec, design, fit, r))
        if not rec.added:
            break
        for a in rec.added:
            col = np.ones(data.n_rows, dtype=np.uint8)
            for f in a.literals:
                col &= data.bits[:, f]
            design = design.with_columns(
                col.astype(float), [lam0 + lam1 * len(a.literals)],
                [("rule", tuple(a.literals))])
        fit = fit_weighted_l1(
            design, data.targets,
            warm=np.concatenate([fit.beta, np.zeros(design.p - len(fit.beta))]),
            tol=cfg.solver_tol, max_iter=cfg.solver_max_iter)
    return out


def make_xor_dataset(n_per_cell=25, include_numeric=False):
    """Noise-free y = x1 XOR x2 over categorical 0/1 features, binarized."""
    from ruleglm.binarizer import binarize, build_dictionary
    a = [str((i // 2) % 2) for i in range(4 * n_per_cell)]
    b = [str(i % 2) for i in range(4 * n_per_cell)]
    y = np.array([int(ai) ^ int(bi) for ai, bi in zip(a, b)], dtype=float)
    table = make_table(x1=a, x2=b)
    d = build_dictionary(table, 9)
    return table, binarize(table, d, y, include_numeric=include_numeric)
