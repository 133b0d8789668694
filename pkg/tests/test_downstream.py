import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import RESULT_TABLES
from dysfair.downstream import (
    ChangeConvention,
    MissingCategoryWarning,
    TaskResultTable,
    UnknownConditionError,
    compare_conditions,
    load_result_tables,
    relative_change,
    render_comparison,
)

OLD, NEW = ChangeConvention.RELATIVE_TO_OLD, ChangeConvention.RELATIVE_TO_NEW


@pytest.fixture
def tables():
    return load_result_tables(json.dumps(RESULT_TABLES))


@pytest.mark.parametrize(
    "old,new,conv,expected",
    [
        (89.07, 94.19, OLD, 5.748288),   # 5.74 when truncated
        (87.53, 94.23, OLD, 7.654518),
        (62.50, 73.75, OLD, 18.0),
        (53.00, 36.66, NEW, 44.571740),
    ],
)
def test_relative_change_reported_values(old, new, conv, expected):
    assert relative_change(old, new, conv) == pytest.approx(expected, abs=1e-6)


def test_relative_change_zero_denominator():
    with pytest.raises(ZeroDivisionError):
        relative_change(0, 5, OLD)
    with pytest.raises(ZeroDivisionError):
        relative_change(5, 0, "new")


def test_convention_parse():
    assert ChangeConvention.parse("relative_to_new") is NEW
    assert ChangeConvention.parse("old") is OLD
    with pytest.raises(ValueError):
        ChangeConvention.parse("sideways")


@given(st.floats(0.01, 1e4))
def test_identity(x):
    assert relative_change(x, x, OLD) == 0 and relative_change(x, x, NEW) == 0


@given(st.floats(0.1, 1e3), st.floats(0.1, 1e3))
def test_conventions_related(old, new):
    r_old = relative_change(old, new, OLD)
    r_new = relative_change(old, new, NEW)
    assert r_new == pytest.approx(-r_old / (1 + r_old / 100), rel=1e-9, abs=1e-9)


def test_compare_model1_model3(tables):
    asr, det = tables
    changes = compare_conditions(asr, "model1", "model3", OLD)
    assert changes["high"] == pytest.approx(7.65, abs=0.01)
    assert changes["mid"] == pytest.approx(5.75, abs=0.01)
    assert compare_conditions(det, "model1", "model3")["overall"] == pytest.approx(18.0)


def test_compare_model1_model2_low(tables):
    # (76.69 - 53.00) / 53.00 * 100 = 44.698...
    assert compare_conditions(tables[0], "model1", "model2", OLD)["low"] == pytest.approx(44.698113, abs=1e-6)


def test_compare_identity(tables):
    assert set(compare_conditions(tables[0], "model1", "model1").values()) == {0.0}


def test_compare_unknown_condition(tables):
    with pytest.raises(UnknownConditionError, match="model9"):
        compare_conditions(tables[0], "model1", "model9")


def test_compare_missing_category_warns():
    table = TaskResultTable("t", {"a": {"x": 1.0, "y": 2.0}, "b": {"x": 2.0}})
    with pytest.warns(MissingCategoryWarning):
        assert compare_conditions(table, "a", "b") == {"x": 100.0}


def test_table_rejects_negative_and_non_numbers():
    with pytest.raises(ValueError):
        TaskResultTable("t", {"a": {"x": -1.0}})
    with pytest.raises(ValueError):
        TaskResultTable("t", {"a": {"x": "12%"}})


def test_load_single_and_wrapped():
    single = load_result_tables(json.dumps(RESULT_TABLES[1]))
    assert single[0].task == "detection_accuracy" and single[0].conditions == ["model1", "model2", "model3"]
    wrapped = load_result_tables(json.dumps({"tables": RESULT_TABLES}))
    assert [t.task for t in wrapped] == ["asr_wer", "detection_accuracy"]
    with pytest.raises(ValueError):
        load_result_tables("[1]")


def test_render_names_convention(tables):
    text = render_comparison(tables, "model1", "model3", NEW)
    assert "relative_to_new" in text
    assert "| asr_wer | low | 53.00 | 36.66 | +44.57 |" in text
