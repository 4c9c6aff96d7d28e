import math

import numpy as np
import pytest

from app.core.exceptions import DegenerateOutcomeError
from app.environment import channel_state_closed
from app.lindblad import evolve
from app.qmat import pauli, projector
from app.schemas.common import InputState, RecoveryConfig
from app.teleport import (
    OUTCOMES,
    average_fidelity,
    average_fidelity_many,
    bell_state,
    conditional_state,
    ideal_correction_fidelity,
    numeric_fidelity,
    outcome_probability,
    output_state,
    quadrature_rule,
    recovery_model,
)

PLUS = projector(np.array([1, 1], dtype=complex) / np.sqrt(2))
ZERO = projector(np.array([1, 0], dtype=complex))


def _random_pure(seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return projector(v / np.linalg.norm(v))


def test_bell_basis():
    assert np.allclose(bell_state(0), np.array([1, 0, 0, 1]) / np.sqrt(2))
    assert np.allclose(bell_state(2), np.array([0, 1, -1, 0]) / np.sqrt(2))
    gram = np.array([[np.vdot(bell_state(i), bell_state(j)) for j in OUTCOMES] for i in OUTCOMES])
    assert np.allclose(gram, np.eye(4))
    with pytest.raises(IndexError):
        bell_state(4)


def test_perfect_channel_outcomes_are_uniform():
    """Для идеального канала P_m = 1/4 при любом входе."""
    channel = channel_state_closed("perfect", 0.1, 0.0)
    rho = _random_pure(3)
    for m in OUTCOMES:
        assert outcome_probability(m, rho, channel) == pytest.approx(0.25, abs=1e-12)


def test_noisy_channel_outcomes_are_uniform():
    channel = channel_state_closed("no", 0.1, 2.0)
    state = InputState(theta=1.1, phi=0.4)
    probs = [outcome_probability(m, state, channel) for m in OUTCOMES]
    assert np.allclose(probs, 0.25, atol=1e-12)


def test_dissipative_outcomes_sum_to_one():
    channel = channel_state_closed("di", 1.0, 5.0)
    probs = [outcome_probability(m, ZERO, channel) for m in OUTCOMES]
    assert sum(probs) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("m", OUTCOMES)
def test_perfect_channel_conditional_state(m):
    """Исход m даёт Бобу σ^m ρ_in σ^m."""
    channel = channel_state_closed("perfect", 0.0, 0.0)
    rho = _random_pure(5)
    expected = pauli(m) @ rho @ pauli(m)
    assert np.allclose(conditional_state(m, rho, channel), expected, atol=1e-12)


@pytest.mark.parametrize("m", OUTCOMES)
def test_relaxed_channel_leaves_bob_in_excited_state(m):
    channel = channel_state_closed("di", 1.0, 50.0)
    assert np.allclose(conditional_state(m, PLUS, channel), np.diag([0.0, 1.0]), atol=1e-12)


def test_degenerate_outcome_raises():
    """Вход |0> и чистое |11> не дают исхода m=0."""
    rho = np.zeros((4, 4), dtype=complex)
    rho[3, 3] = 1.0
    channel = channel_state_closed("perfect", 0.0, 0.0).model_copy(update={"rho": rho})
    with pytest.raises(DegenerateOutcomeError):
        conditional_state(0, ZERO, channel)


def test_recovery_rotation_without_decoherence():
    omega = 2.0
    model = recovery_model("de", 1, 0.0, omega)
    assert np.allclose(evolve(model, ZERO, math.pi / omega), np.diag([0.0, 1.0]), atol=1e-8)


def test_output_state_without_recovery_time():
    channel = channel_state_closed("perfect", 0.1, 0.0)
    rho = _random_pure(7)
    out = output_state(0, rho, channel, RecoveryConfig(beta="di", omega=1.0, t=0.0))
    assert np.allclose(out, rho)


@pytest.mark.parametrize("m", OUTCOMES)
def test_ideal_recovery_restores_input(m):
    """При γ = 0 и t = π/ω коррекция точно восстанавливает вход."""
    channel = channel_state_closed("perfect", 0.0, 0.0)
    rho = _random_pure(11)
    rec = RecoveryConfig(beta="no", omega=1.5, t=math.pi / 1.5)
    assert np.allclose(output_state(m, rho, channel, rec), rho, atol=1e-8)


def test_dissipative_recovery_relaxes():
    channel = channel_state_closed("perfect", 1.0, 0.0)
    out = output_state(0, PLUS, channel, RecoveryConfig(beta="di", omega=0.0, t=60.0))
    assert np.allclose(out, np.diag([0.0, 1.0]), atol=1e-9)


def test_average_fidelity_ideal_protocol():
    channel = channel_state_closed("perfect", 0.0, 0.0)
    report = average_fidelity(channel, RecoveryConfig(beta="di", omega=1.0, t=math.pi))
    assert report.average == pytest.approx(1.0, abs=1e-8)
    assert sum(report.probabilities) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("beta", ["di", "no", "de"])
def test_average_fidelity_without_recovery_is_half(beta):
    channel = channel_state_closed("perfect", 0.1, 0.0)
    report = average_fidelity(channel, RecoveryConfig(beta=beta, omega=1.0, t=0.0))
    assert report.average == pytest.approx(0.5, abs=1e-12)


def test_ideal_correction_gives_entangled_fraction_bound():
    """(2F_e + 1)/3 с F_e ≈ 0.835160 для диссипативного канала."""
    assert ideal_correction_fidelity("di", 0.1, 2.0) == pytest.approx(0.890107, abs=1e-6)


def test_quadratures_agree():
    """Октаэдр из 6 точек точен для квадратичного подынтегрального выражения."""
    channel = channel_state_closed("di", 0.1, 2.0)
    rec = RecoveryConfig(beta="di", omega=1.0, t=1.0)
    six = average_fidelity(channel, rec, "octahedral6").average
    dense = average_fidelity(channel, rec, "dense", n_theta=6, n_phi=12).average
    assert six == pytest.approx(dense, abs=1e-9)


def test_quadrature_weights_sum_to_one():
    for name in ("octahedral6", "dense"):
        _, _, w = quadrature_rule(name, 4, 8)
        assert w.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        quadrature_rule("lebedev")


def test_detail_lists_every_point():
    channel = channel_state_closed("de", 0.1, 1.0)
    report = average_fidelity(channel, RecoveryConfig(beta="de", omega=2.0, t=0.5), detail=True)
    assert len(report.points) == 6
    assert all(len(p.probabilities) == 4 for p in report.points)


def test_many_channels_match_single_evaluations():
    rec = RecoveryConfig(beta="no", omega=2.0, t=1.2)
    channels = [channel_state_closed(a, 0.1, 2.0) for a in ("perfect", "di", "no", "de")]
    together = average_fidelity_many(channels, rec)
    alone = [average_fidelity(c, rec).average for c in channels]
    assert np.allclose(together, alone, atol=1e-12)
    assert average_fidelity_many([], rec) == []
    with pytest.raises(ValueError):
        average_fidelity_many([channels[0], channel_state_closed("di", 0.2, 2.0)], rec)


def test_numeric_fidelity_accepts_time_arrays():
    values = numeric_fidelity("perfect", "di", 0.1, 1.0, np.array([0.0, 1.0, 2.0]), 0.0)
    assert values.shape == (3,)
    assert values[0] == pytest.approx(0.5, abs=1e-12)
    assert isinstance(numeric_fidelity("perfect", "di", 0.1, 1.0, 1.0, 0.0), float)
