import math

import numpy as np
import pytest

from app.analysis import (
    CLASSICAL_LIMIT,
    FIT_WINDOWS,
    asymptotic_fidelity,
    critical_omega,
    critical_t0,
    critical_time,
    fidelity_function,
    fit_double_exponential,
    fit_single_exponential,
    golden_section_max,
    max_fidelity,
    ordering_report,
    pool_map,
    scan_step,
    search_window,
    sweep,
)
from app.core.exceptions import DegenerateDataError
from app.environment import esd_time
from app.schemas.common import ChannelKind, SweepSpec


def test_golden_section_finds_parabola_peak():
    t, f, iterations = golden_section_max(lambda x: -(x - 1.3) ** 2, 0.0, 3.0)
    assert t == pytest.approx(1.3, abs=1e-8)
    assert f == pytest.approx(0.0, abs=1e-15)
    assert iterations > 0


def test_search_window_rule():
    assert search_window(1.0, 0.1) == pytest.approx(200.0)
    assert search_window(1.0, 0.0) == pytest.approx(4 * math.pi)
    assert search_window(0.0, 0.0) == 1.0


def test_monotone_function_gives_boundary_maximum():
    """e^{-t} достигает максимума на левом краю окна."""
    res = critical_time(lambda t: np.exp(-np.asarray(t)), omega=1.0, gamma=0.1)
    assert res.boundary
    assert res.t_c == 0.0
    assert res.f_max == pytest.approx(1.0)


@pytest.mark.parametrize("beta", ["di", "no", "de"])
def test_decoherence_free_critical_time(beta):
    """При γ = 0 максимум F = 1 в момент π/ω (самый ранний из равных)."""
    omega = 2.0
    res = max_fidelity("perfect", beta, 0.0, omega)
    assert res.t_c == pytest.approx(math.pi / omega, abs=1e-6)
    assert res.f_max == pytest.approx(1.0, abs=1e-9)
    assert not res.boundary


def test_local_maxima_include_global():
    res = max_fidelity("perfect", "di", 0.0, 2.0)
    assert any(abs(t - res.t_c) < 1e-9 for t, _ in res.local_maxima)


@pytest.mark.slow
def test_critical_time_two_path():
    """Окно поиска по умолчанию: T = max(4π/ω, 20/γ) = 200."""
    closed = max_fidelity("perfect", "di", 0.1, 5.0)
    numeric = max_fidelity("perfect", "di", 0.1, 5.0, method="numeric")
    assert closed.window == (0.0, pytest.approx(200.0))
    assert numeric.t_c == pytest.approx(closed.t_c, abs=1e-5)
    assert numeric.f_max == pytest.approx(closed.f_max, abs=1e-6)


def test_unknown_method_rejected():
    with pytest.raises(ValueError):
        fidelity_function("perfect", "di", 0.1, 1.0, method="exact")


@pytest.mark.slow
@pytest.mark.parametrize("beta", ["di", "no", "de"])
def test_critical_omega_straddles_classical_limit(beta):
    """F_max(ω_c ± 1e-3) лежит по разные стороны от 2/3."""
    res = critical_omega("perfect", beta, 0.1)
    assert res.omega_c is not None
    below = max_fidelity("perfect", beta, 0.1, res.omega_c - 1e-3).f_max
    above = max_fidelity("perfect", beta, 0.1, res.omega_c + 1e-3).f_max
    assert below < CLASSICAL_LIMIT < above


@pytest.mark.slow
def test_critical_omega_missing_root_is_reported():
    """Шумовой канал при t0 = 5 не превышает 2/3 ни при каком ω."""
    res = critical_omega("no", "di", 0.1, t0=5.0)
    assert res.omega_c is None
    assert res.note


def test_critical_t0_edge_cases():
    assert critical_t0("perfect", 0.1).t0_c is None
    with pytest.raises(ValueError):
        critical_t0("di", 0.0)


@pytest.mark.slow
def test_critical_t0_noisy_lies_below_sudden_death():
    res = critical_t0("no", 0.1)
    assert res.t0_c is not None
    assert 0.0 < res.t0_c <= esd_time("no", 0.1) + 1e-4
    assert "omega_ref" in res.sensitivity


@pytest.mark.slow
def test_critical_t0_dissipative_is_finite():
    res = critical_t0("di", 0.1)
    assert res.t0_c is not None and math.isfinite(res.t0_c)
    assert res.t0_c > 0


def test_asymptotic_fidelity():
    assert asymptotic_fidelity("di", 0.1, 2.0) == pytest.approx(0.890107, abs=1e-6)
    assert asymptotic_fidelity("perfect", 0.1, 2.0) == pytest.approx(1.0)


def test_single_exponential_fit():
    x = np.linspace(0.0, 5.0, 20)
    res = fit_single_exponential(x, 2.0 * np.exp(0.3 * x))
    assert res.a == pytest.approx(2.0, abs=1e-6)
    assert res.b == pytest.approx(0.3, abs=1e-6)


def test_double_exponential_fit_recovers_exact_data():
    """Точные данные модели a·e^{bx} + c·e^{dx} восстанавливаются с RMS < 1e-6."""
    x = np.linspace(0.15, 7.85, 40)
    y = 0.1 * np.exp(0.12 * x) + 0.003 * np.exp(0.47 * x)
    res = fit_double_exponential(x, y)
    assert res.rms_residual < 1e-6
    assert np.max(np.abs(res.predict(x) - y)) < 1e-5
    assert abs(res.a) >= abs(res.c)
    assert res.n_points == 40


def test_fit_window_filters_points():
    x = np.linspace(0.0, 10.0, 41)
    y = 0.2 * np.exp(0.1 * x)
    res = fit_single_exponential(x, y, window=(2.0, 8.0))
    assert res.fit_window == (2.0, 8.0)
    assert res.n_points == 25


def test_fit_rejects_degenerate_data():
    with pytest.raises(DegenerateDataError):
        fit_double_exponential(np.arange(5.0), np.arange(5.0))
    with pytest.raises(DegenerateDataError):
        fit_double_exponential(np.arange(10.0), np.ones(10))


def test_pool_map_keeps_order():
    assert pool_map(lambda v: v * v, range(20), threads=4) == [v * v for v in range(20)]


def test_sweep_over_time():
    plan = SweepSpec(axis="t", values=[2.0, 0.0, 1.0], alpha="perfect", beta="di", gamma=0.1, omega=1.0)
    rows = sweep(plan)
    assert [r["value"] for r in rows] == [0.0, 1.0, 2.0]
    assert rows[0]["F"] == pytest.approx(0.5)


def test_empty_sweep():
    assert sweep(SweepSpec(axis="omega", values=[])) == []


def test_omega_sweep_trends():
    """t_c убывает с ростом ω, F_max не убывает."""
    plan = SweepSpec(axis="omega", values=[0.5, 1.0, 2.0, 4.0], alpha="perfect", beta="di", gamma=0.1)
    rows = sweep(plan, threads=2)
    t_c = [r["t_c"] for r in rows]
    f_max = [r["f_max"] for r in rows]
    assert all(a > b for a, b in zip(t_c, t_c[1:]))
    assert all(b >= a for a, b in zip(f_max, f_max[1:]))


@pytest.mark.slow
def test_fidelity_orderings_hold():
    rows = ordering_report(0.1, 2.0, omegas=(1.0, 5.0), include_critical=False, threads=2)
    gating = [r for r in rows if r["gating"]]
    assert gating
    assert all(r["holds"] for r in gating)


def test_scan_step_rule():
    """Шаг сканирования min(π/(20ω), T/2000); 1/(20γ) только для замкнутых формул."""
    window = search_window(1e-4, 0.1)
    assert scan_step(1e-4, 0.1, window) == pytest.approx(window / 2000)
    assert scan_step(1e-4, 0.1, window, resolve_decay=True) == pytest.approx(0.5)
    assert scan_step(5.0, 0.1, 200.0) == pytest.approx(math.pi / 100)


@pytest.mark.slow
def test_critical_omega_numeric_path():
    """Численный путь проходит всю скобку [1e-4, 16] и совпадает с замкнутыми формулами."""
    closed = critical_omega("perfect", "di", 0.1)
    numeric = critical_omega("perfect", "di", 0.1, method="numeric")
    assert numeric.omega_c is not None
    assert numeric.omega_c == pytest.approx(closed.omega_c, abs=1e-5)


@pytest.mark.slow
def test_fit_of_computed_critical_omega_curve():
    """Двухэкспоненциальная модель описывает вычисленную кривую ω_c(t0) с RMS ≤ 1e-3."""
    lo, hi = FIT_WINDOWS[ChannelKind.DISSIPATIVE]
    grid = np.linspace(lo, hi, 16)
    omega_c = [critical_omega("di", "di", 0.1, t0).omega_c for t0 in grid]
    assert all(w is not None for w in omega_c)
    res = fit_double_exponential(grid, omega_c)
    assert res.rms_residual <= 1e-3
    assert res.n_points == 16


@pytest.mark.slow
def test_critical_t0_scales_with_gamma():
    """γ·t0_c не зависит от γ."""
    a = critical_t0("de", 0.1)
    b = critical_t0("de", 0.2)
    if a.t0_c is None:
        assert b.t0_c is None
    else:
        assert 0.2 * b.t0_c == pytest.approx(0.1 * a.t0_c, rel=1e-3)


def test_sweep_is_identical_serial_and_threaded():
    plan = SweepSpec(axis="omega", values=[0.3, 1.0, 2.5, 6.0], alpha="di", beta="no", gamma=0.1, t0=1.0)
    assert sweep(plan, threads=1) == sweep(plan, threads=4)
