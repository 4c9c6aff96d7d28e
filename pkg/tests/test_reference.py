import math

import pytest

from app.reference import FIT_COEFFICIENTS, T0_C, build_report, compare, published_values


def test_published_values_are_complete():
    """Все опубликованные числа на месте, ключи уникальны."""
    values = published_values()
    keys = [v.key for v in values]
    assert len(keys) == len(set(keys))
    assert len(values) == 12 + 12 + len(T0_C) + 1 + 4 * len(FIT_COEFFICIENTS)
    assert all(v.source for v in values)


def test_esd_row_matches_closed_constant():
    esd = next(v for v in published_values() if v.key == "esd")
    row = compare(esd.key, esd.quantity, esd.value, math.log(1 + math.sqrt(2)) / 2, esd.source)
    assert row.rel_deviation <= 1e-6


def test_compare_reports_deviation_without_failing():
    row = compare("f_max:perfect:di", "F_max", 0.92163, 0.999477, "test")
    assert row.abs_deviation == pytest.approx(0.077847)
    assert row.rel_deviation == pytest.approx(0.077847 / 0.92163)


def test_compare_handles_missing_values():
    row = compare("x", "q", None, 0.5, "computed only")
    assert row.abs_deviation is None and row.rel_deviation is None
    row = compare("y", "q", 0.0, 0.5, "zero reference")
    assert row.abs_deviation == 0.5
    assert row.rel_deviation is None


@pytest.mark.slow
def test_report_has_a_row_for_every_published_value():
    """Каждое опубликованное число получает строку с вычисленным значением."""
    rows = {r.key: r for r in build_report(t0_points=24, threads=4)}
    for value in published_values():
        assert value.key in rows
        row = rows[value.key]
        assert row.published == value.value
        if value.key.startswith("t0_c:"):
            # корня может не быть: тогда причина в note
            assert row.computed is not None or row.note
        else:
            assert row.computed is not None, value.key
    assert rows["printed_form:no:di"].published != rows["printed_form:no:di"].computed
