# tests/test_model.py
import numpy as np
import pytest

from ruleglm.datatable import DataError
from ruleglm.model import (NumericTerm, Rule, RuleEnsemble, RuleLiteral,
                           complexity, load, predict_row, render, save)


def rule(coef, *literals):
    return Rule(tuple(RuleLiteral(c, op, v) for c, op, v in literals), coef)


def ensemble(family="logistic", intercept=0.0, rules=(), numeric_terms=(),
             columns=("a", "b")):
    return RuleEnsemble(family, intercept, tuple(rules), tuple(numeric_terms),
                        tuple(columns), {"0": 0, "1": 1} if family == "logistic" else None)


def test_empty_logistic_predicts_half():
    m = ensemble()
    for row in ({"a": 1, "b": "x"}, {"a": -5, "b": "y"}):
        assert predict_row(m, row) == 0.5


def test_single_rule_fires_and_is_silent():
    m = ensemble(family="linear", rules=[rule(2.0, ("a", "leq", 3.0))])
    assert predict_row(m, {"a": 1, "b": "x"}) == 2.0
    assert predict_row(m, {"a": 5, "b": "x"}) == 0.0


def test_numeric_term_uses_standardization():
    m = ensemble(family="linear",
                 numeric_terms=[NumericTerm("a", mean=10.0, scale=2.0, coef=3.0)])
    assert predict_row(m, {"a": 14.0, "b": "x"}) == pytest.approx(3.0 * (14 - 10) / 2)


def test_missing_column_raises():
    m = ensemble()
    with pytest.raises(DataError, match="missing columns"):
        predict_row(m, {"a": 1})


def test_predict_depends_only_on_binarized_representation():
    m = ensemble(rules=[rule(1.0, ("a", "leq", 3.0)), rule(-2.0, ("b", "eq", "red"))])
    p1 = predict_row(m, {"a": 2.1, "b": "red"})
    p2 = predict_row(m, {"a": 2.9, "b": "red"})    # same side of every threshold
    assert p1 == p2


def test_logistic_predictions_open_interval():
    m = ensemble(intercept=50.0)
    p = predict_row(m, {"a": 0, "b": "x"})
    assert 0.0 < p < 1.0


def test_complexity_examples():
    m = ensemble(rules=[rule(1.0, ("a", "leq", 1.0)),
                        rule(-0.5, ("a", "leq", 2.0), ("b", "eq", "u"), ("b", "neq", "v"))])
    assert complexity(m, 0.2) == pytest.approx(1.2 + 1.6)
    assert complexity(ensemble(intercept=3.0)) == 0.0
    m2 = ensemble(rules=[rule(1.0, ("a", "leq", 1.0), ("b", "eq", "u"))],
                  numeric_terms=[NumericTerm("a", 0.0, 1.0, 0.7)])
    assert complexity(m2, 0.2) == pytest.approx(1.0 + 1.4)


def test_complexity_invariant_to_order_and_magnitude():
    r1 = rule(5.0, ("a", "leq", 1.0))
    r2 = rule(-0.1, ("b", "eq", "u"), ("a", "gt", 2.0))
    assert complexity(ensemble(rules=[r1, r2])) == complexity(ensemble(rules=[r2, r1]))
    r1_big = rule(500.0, ("a", "leq", 1.0))
    assert complexity(ensemble(rules=[r1_big, r2])) == complexity(ensemble(rules=[r1, r2]))


def test_render_format_and_order():
    m = ensemble(intercept=0.25,
                 rules=[rule(-1.5, ("a", "leq", 3.0), ("b", "eq", "red")),
                        rule(0.75, ("a", "gt", 7.0))])
    lines = render(m).split("\n")
    assert lines[0] == "-1.500 · [a <= 3 AND b == red]"
    assert lines[1] == "0.750 · [a > 7]"
    assert lines[2] == "0.250 · intercept"


def test_render_intercept_only():
    lines = render(ensemble(intercept=-0.2)).split("\n")
    assert len(lines) == 1
    assert "intercept" in lines[0]


def test_render_tie_break_lexicographic():
    m = ensemble(rules=[rule(1.0, ("b", "eq", "u")), rule(-1.0, ("a", "leq", 1.0))])
    lines = render(m).split("\n")
    assert lines[0].endswith("[a <= 1]")
    assert lines[1].endswith("[b == u]")


def test_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    m = ensemble(intercept=0.3,
                 rules=[rule(-1.5, ("a", "leq", 3.0), ("b", "eq", "red")),
                        rule(0.7, ("a", "gt", 1.0))],
                 numeric_terms=[NumericTerm("a", 1.25, 0.75, -0.4)])
    path = tmp_path / "m.json"
    save(m, path)
    back = load(path)
    assert back == m
    for _ in range(100):
        row = {"a": float(rng.uniform(-5, 8)), "b": rng.choice(["red", "blue"])}
        assert predict_row(back, row) == predict_row(m, row)


def test_load_truncated_file(tmp_path):
    path = tmp_path / "m.json"
    save(ensemble(), path)
    path.write_text(path.read_text()[:20])
    with pytest.raises(DataError, match="malformed"):
        load(path)


def test_load_version_mismatch(tmp_path):
    import json
    path = tmp_path / "m.json"
    save(ensemble(), path)
    doc = json.loads(path.read_text())
    doc["version"] = 0
    path.write_text(json.dumps(doc))
    with pytest.raises(DataError, match="version"):
        load(path)
