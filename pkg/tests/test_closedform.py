import math

import numpy as np
import pytest

from app.closedform import f_channel, f_perfect, hyp_pair, params
from app.teleport import numeric_fidelity

BETAS = ["di", "no", "de"]


def test_hyp_pair_examples():
    """Вырожденный корень, гиперболическая и тригонометрическая ветви."""
    p = hyp_pair(0.0, 3.0)
    assert p.c == pytest.approx(1.0)
    assert p.s_over_w == pytest.approx(3.0)

    p = hyp_pair(1.0, 1.0)
    assert p.c == pytest.approx(1.543081, abs=1e-6)
    assert p.s_over_w == pytest.approx(1.175201, abs=1e-6)

    p = hyp_pair(-4.0, math.pi / 2)
    assert p.c == pytest.approx(-1.0)
    assert p.s_over_w == pytest.approx(0.0, abs=1e-15)


def test_hyp_pair_damping_stays_finite():
    """cosh(wt)·e^{-dt} без переполнения при больших t."""
    p = hyp_pair(1.0, 2000.0, damping=1.5)
    assert np.isfinite(p.c) and np.isfinite(p.s_over_w)
    p = hyp_pair(1.0, 200.0, damping=1.5)
    assert p.c == pytest.approx(0.5 * math.exp(-0.5 * 200.0))
    assert p.s_over_w == pytest.approx(0.5 * math.exp(-0.5 * 200.0))


def test_hyp_pair_rejects_negative_time():
    with pytest.raises(ValueError):
        hyp_pair(1.0, -1.0)


def test_params_at_zero_time():
    p = params(0.1, 1.0, 0.0)
    got = (p.alpha1, p.alpha2, p.alpha3, p.beta1, p.beta2, p.mu1, p.mu2)
    assert np.allclose(got, (1, 0, 0, 1, 0, 1, 0), atol=1e-15)


def test_params_without_decoherence_at_half_turn():
    """γ = 0, ωt = π: α1 = 0, α2 = 1, α3 = 1."""
    p = params(0.0, 2.0, math.pi / 2)
    assert p.alpha1 == pytest.approx(0.0, abs=1e-12)
    assert p.alpha2 == pytest.approx(1.0)
    assert p.alpha3 == pytest.approx(1.0)


def test_params_continuous_at_degenerate_root():
    """γ = 4ω: ветвь ряда совпадает с соседними ω ± 1e-6."""
    gamma, omega, t = 0.4, 0.1, 3.0
    mid = params(gamma, omega, t)
    for w in (omega - 1e-6, omega + 1e-6):
        near = params(gamma, w, t)
        assert near.alpha1 == pytest.approx(mid.alpha1, abs=1e-5)
        assert near.alpha2 == pytest.approx(mid.alpha2, abs=1e-5)
        assert near.mu1 == pytest.approx(mid.mu1, abs=1e-5)


@pytest.mark.parametrize("beta", BETAS)
def test_perfect_channel_at_zero_time(beta):
    assert f_perfect(beta, 0.1, 1.0, 0.0) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("beta", BETAS)
def test_perfect_channel_ideal_recovery(beta):
    assert f_perfect(beta, 0.0, 1.0, math.pi) == pytest.approx(1.0, abs=1e-12)


def test_perfect_channel_fast_rotation():
    assert f_perfect("di", 0.1, 200.0, math.pi / 200) == pytest.approx(0.999477, abs=1e-6)


def test_dissipative_pair_at_zero_time():
    for t0 in (0.0, 1.0, 7.5):
        assert f_channel("di", "di", 0.1, 3.0, 0.0, t0) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("alpha", ["di", "no", "de"])
@pytest.mark.parametrize("beta", BETAS)
def test_channels_reduce_to_perfect_at_zero_transmission(alpha, beta):
    """При t0 = 0 каждый канал совпадает с идеальным."""
    t = np.linspace(0.0, 12.0, 25)
    expected = f_perfect(beta, 0.1, 0.7, t)
    assert np.max(np.abs(f_channel(alpha, beta, 0.1, 0.7, t, 0.0) - expected)) < 1e-12


def test_printed_noisy_line_differs_by_missing_term():
    gamma, t = 0.1, 2.5
    printed = f_channel("di", "no", gamma, 1.0, t, 0.0, as_printed=True)
    consistent = f_channel("di", "no", gamma, 1.0, t, 0.0)
    assert printed - consistent == pytest.approx((1 - math.exp(-2 * gamma * t)) / 12, abs=1e-14)


def test_vectorized_shapes():
    t = np.linspace(0.0, 5.0, 11)
    out = f_channel("no", "de", 0.1, 1.0, t, 2.0)
    assert out.shape == (11,)
    assert isinstance(f_channel("no", "de", 0.1, 1.0, 1.0, 2.0), float)


def test_values_stay_in_unit_interval():
    t = np.linspace(0.0, 200.0, 4001)
    for alpha in ("perfect", "di", "no", "de"):
        for beta in BETAS:
            f = f_channel(alpha, beta, 0.1, 3.0, t, 2.0)
            assert np.all(f >= 0.0) and np.all(f <= 1.0)


def test_negative_arguments_rejected():
    with pytest.raises(ValueError):
        f_channel("di", "di", 0.1, 1.0, 1.0, -2.0)
    with pytest.raises(ValueError):
        f_channel("di", "di", -0.1, 1.0, 1.0, 2.0)


def test_dephasing_pair_matches_numeric_pipeline():
    """Аналитическая формула и численный конвейер согласуются до 1e-6."""
    t = math.pi / 5
    closed = f_channel("de", "de", 0.1, 5.0, t, 2.0)
    numeric = numeric_fidelity("de", "de", 0.1, 5.0, t, 2.0)
    assert abs(closed - numeric) <= 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("alpha", ["perfect", "di", "no", "de"])
@pytest.mark.parametrize("beta", BETAS)
def test_closed_forms_match_numeric_pipeline(alpha, beta):
    t = np.array([0.3, 1.7, 6.0])
    closed = f_channel(alpha, beta, 0.1, 2.0, t, 2.0)
    numeric = numeric_fidelity(alpha, beta, 0.1, 2.0, t, 2.0)
    assert np.max(np.abs(closed - numeric)) <= 1e-6
