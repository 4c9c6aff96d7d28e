import math

import pytest

from app.verify import printed_form_note, run_verification, two_path_deviation

NEW_CHECKS = {
    "kron_mixed_product",
    "partial_trace_keeps_trace",
    "eigenvalue_sum",
    "adjoint_involution",
    "unitary_trace_invariance",
    "channel_states_valid",
    "static_identity",
    "serial_threaded_identical",
}


def test_printed_form_note_states_deviation():
    """Отступление от напечатанной константы 2/3 видно в выводе verify."""
    note = printed_form_note()
    assert "7/12" in note and "2/3" in note
    assert "difference=" in note


@pytest.mark.slow
def test_full_two_path_grid():
    """Замкнутые формулы и численный конвейер совпадают на полной сетке."""
    worst, n = two_path_deviation(quick=False, threads=2)
    assert n == 3 * 5 * 4 * 3 * 4 * 3
    assert worst <= 1e-6


@pytest.mark.slow
def test_quick_suite_covers_module_invariants():
    summary = run_verification(quick=True, threads=2)
    names = {c.name for c in summary.checks}
    assert NEW_CHECKS <= names
    failed = [c for c in summary.checks if not c.passed]
    assert not failed, [(c.name, c.measured, c.detail) for c in failed]
    assert summary.notes and math.isfinite(summary.checks[0].measured)
