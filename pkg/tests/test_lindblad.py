import math

import numpy as np
import pytest

from app.closedform import f_channel
from app.core.exceptions import DimensionError, IntegratorError, NotDensityMatrixError
from app.lindblad import (
    LindbladModel,
    drift_allowance,
    evolve,
    liouvillian_apply,
    propagator,
    rk4_step,
    step_map,
    step_size,
)
from app.qmat import SIGMA_MINUS, SIGMA_PLUS, pauli, projector
from app.schemas.common import IntegratorConfig
from app.teleport import numeric_fidelity
from app.verify import composition_gap, evolution_hygiene, random_density_matrices

PLUS = projector(np.array([1, 1], dtype=complex) / np.sqrt(2))


def _dephasing(gamma: float) -> LindbladModel:
    return LindbladModel(hamiltonian=np.zeros((2, 2)), collapse_ops=[SIGMA_PLUS @ SIGMA_MINUS], gamma=gamma)


def test_static_model_has_zero_rhs():
    """Без гамильтониана и операторов Линдблада состояние стоит на месте."""
    model = LindbladModel(hamiltonian=np.zeros((2, 2)))
    assert model.is_static
    assert np.allclose(liouvillian_apply(model, PLUS), 0)


def test_dephasing_coherence_rate():
    """dρ01/dt = -(γ/2)·ρ01 для L = σ⁺σ⁻."""
    rho = np.array([[0.6, 0.2 + 0.1j], [0.2 - 0.1j, 0.4]])
    d = liouvillian_apply(_dephasing(0.4), rho)
    assert d[0, 1] == pytest.approx(-0.2 * (0.2 + 0.1j))
    assert abs(d[0, 0]) < 1e-15


def test_dissipation_population_rate():
    """dρ00/dt = -γ для L = σ⁻ и ρ = |0><0|."""
    model = LindbladModel(hamiltonian=np.zeros((2, 2)), collapse_ops=[SIGMA_MINUS], gamma=0.3)
    d = liouvillian_apply(model, np.diag([1.0, 0.0]).astype(complex))
    assert d[0, 0].real == pytest.approx(-0.3)
    assert d[1, 1].real == pytest.approx(0.3)


def test_step_map_matches_rk4_step():
    model = _dephasing(0.5)
    rho = np.array([[0.7, 0.3j], [-0.3j, 0.3]])
    h = 0.01
    via_map = (step_map(model, h) @ rho.reshape(4)).reshape(2, 2)
    assert np.allclose(via_map, rk4_step(model, rho, h), atol=1e-15)


def test_propagator_uses_uniform_steps():
    _, n = propagator(_dephasing(0.1), 1.0, 0.3)
    assert n == 4


def test_step_size_shrinks_with_rotation():
    slow = LindbladModel(hamiltonian=-0.5 * pauli(1))
    fast = LindbladModel(hamiltonian=-0.5 * 100.0 * pauli(1))
    assert step_size(fast) < step_size(slow)
    assert step_size(slow, IntegratorConfig(step=1e-4)) == pytest.approx(1e-4)


def test_evolve_zero_duration_returns_copy():
    out = evolve(_dephasing(0.2), PLUS, 0.0)
    assert np.array_equal(out, PLUS)
    assert out is not PLUS


def test_dephasing_decay_matches_exponential():
    """|ρ01(t)| = |ρ01(0)|·e^{-γt/2}."""
    gamma, t = 0.3, 2.0
    out = evolve(_dephasing(gamma), PLUS, t)
    assert abs(out[0, 1]) == pytest.approx(0.5 * math.exp(-gamma * t / 2), abs=1e-8)


def test_pi_rotation_flips_state():
    """H = -ωσ¹/2 за время π/ω переводит |0> в |1>."""
    omega = 1.0
    model = LindbladModel(hamiltonian=-0.5 * omega * pauli(1))
    out = evolve(model, np.diag([1.0, 0.0]).astype(complex), math.pi / omega)
    assert np.allclose(out, np.diag([0.0, 1.0]), atol=1e-8)


def test_evolve_preserves_trace_for_stack():
    model = LindbladModel(hamiltonian=-0.5 * pauli(2), collapse_ops=[SIGMA_MINUS, SIGMA_PLUS], gamma=0.2)
    stack = np.stack([PLUS, np.eye(2) / 2, np.diag([1.0, 0.0])])
    out = evolve(model, stack, 3.0, IntegratorConfig(richardson_check=True))
    assert out.shape == (3, 2, 2)
    assert np.allclose(np.trace(out, axis1=-2, axis2=-1), 1.0, atol=1e-9)


def test_evolve_rejects_bad_input():
    model = _dephasing(0.1)
    with pytest.raises(IntegratorError):
        evolve(model, PLUS, -1.0)
    with pytest.raises(NotDensityMatrixError):
        evolve(model, np.eye(2), 1.0)
    with pytest.raises(DimensionError):
        evolve(model, np.eye(4) / 4, 1.0)


def test_model_rejects_mismatched_operators():
    # pydantic оборачивает DimensionError в ValidationError (тоже ValueError)
    with pytest.raises(ValueError):
        LindbladModel(hamiltonian=np.zeros((2, 2)), collapse_ops=[np.eye(4)], gamma=0.1)


def test_static_model_is_identity_on_random_states():
    states = random_density_matrices(50, 2, np.random.default_rng(21))
    out = evolve(LindbladModel(hamiltonian=np.zeros((2, 2))), states, 7.0)
    assert np.array_equal(out, states)


def test_drift_allowance_grows_past_reference_horizon():
    """До 10/γ действует фиксированный допуск, дальше он растёт с длительностью."""
    assert drift_allowance(1e-9, 100.0, 0.1, 1000) == pytest.approx(1e-9)
    assert drift_allowance(1e-9, 1e5, 0.1, 1000) == pytest.approx(1e-6)
    assert drift_allowance(1e-9, 1e5, 0.0, 10**9) > 1e-9


def test_long_recovery_stays_within_allowance():
    """Очень медленное вращение: окно поиска 4π/ω ≈ 1.26e5, интегрирование не падает."""
    t = 4 * math.pi / 1e-4
    numeric = numeric_fidelity("perfect", "di", 0.1, 1e-4, t, 0.0)
    assert numeric == pytest.approx(float(f_channel("perfect", "di", 0.1, 1e-4, t, 0.0)), abs=1e-6)


@pytest.mark.slow
def test_hygiene_on_fifty_random_states():
    states = random_density_matrices(50, 2, np.random.default_rng(11))
    assert evolution_hygiene(states) <= 1e-9


@pytest.mark.slow
def test_composition_of_evolutions():
    """evolve(t1 + t2) = evolve(t2) ∘ evolve(t1) для всех трёх сред."""
    states = random_density_matrices(50, 2, np.random.default_rng(12))
    assert composition_gap(states) <= 1e-8
