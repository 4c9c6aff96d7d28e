"""Numerical teleportation pipeline.

Qubit order in the three-qubit register: 0 is the input qubit, 1 is Alice's half
of the resource and 2 is Bob's half. Alice measures qubits 0 and 1 in the Bell
basis; for outcome m Bob's qubit evolves under H_m = -ωσ^m/2 with the collapse
operators of the recovery environment for a time t.

Quadrature points, outcomes and (optionally) several resource states are kept in
one numpy stack, so a whole sphere average is a handful of array operations.
"""
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.config import settings, Tolerances
from app.core.exceptions import DegenerateOutcomeError
from app.environment import channel_state_closed, channel_state_numeric, generators
from app.lindblad import LindbladModel, evolve
from app.qmat import IDENTITY2, kron, partial_trace, pauli, projector, trace
from app.schemas.common import (
    ChannelKind,
    ChannelState,
    EnvironmentKind,
    FidelityPoint,
    FidelityReport,
    InputState,
    IntegratorConfig,
    RecoveryConfig,
)
from app.utils import logger

OUTCOMES = (0, 1, 2, 3)

_SQRT_HALF = 1.0 / np.sqrt(2.0)
_BELL = (
    np.array([1, 0, 0, 1], dtype=complex) * _SQRT_HALF,
    np.array([0, 1, 1, 0], dtype=complex) * _SQRT_HALF,
    np.array([0, 1, -1, 0], dtype=complex) * _SQRT_HALF,
    np.array([1, 0, 0, -1], dtype=complex) * _SQRT_HALF,
)

# smallest outcome probability that still defines a conditional state
_MIN_PROBABILITY = 1e-300


def bell_state(m: int) -> np.ndarray:
    if m not in OUTCOMES:
        raise IndexError(f"Bell state index must be 0..3, got {m}")
    return _BELL[m].copy()


def _measurement_projectors() -> np.ndarray:
    """Π_m ⊗ I on the three-qubit register, shape (4, 8, 8)."""
    return np.stack([kron(projector(_BELL[m]), IDENTITY2) for m in OUTCOMES])


_PROJECTORS = _measurement_projectors()


def _as_density(rho_in) -> np.ndarray:
    if isinstance(rho_in, InputState):
        return projector(rho_in.ket())
    return np.asarray(rho_in, dtype=complex)


def _branches(rho_in: np.ndarray, channel_rho: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unnormalized Bob states and outcome probabilities.

    rho_in (..., 2, 2) and channel_rho (..., 4, 4) broadcast; results carry an
    extra outcome axis: states (..., 4, 2, 2), probabilities (..., 4).
    """
    joint = kron(rho_in, channel_rho)[..., None, :, :]
    projected = _PROJECTORS @ joint @ _PROJECTORS
    bob = partial_trace(projected, keep=[2])
    return bob, np.real(trace(bob))


def outcome_probability(m: int, rho_in, channel: ChannelState) -> float:
    """P_m = tr[(Π_m ⊗ I)(ρ_in ⊗ ρ^(α))]."""
    bell_state(m)
    _, probs = _branches(_as_density(rho_in), channel.rho)
    return float(probs[..., m])


def conditional_state(m: int, rho_in, channel: ChannelState) -> np.ndarray:
    """Bob's normalized state right after Alice reports outcome m."""
    bell_state(m)
    bob, probs = _branches(_as_density(rho_in), channel.rho)
    p = probs[..., m]
    if np.any(p <= _MIN_PROBABILITY):
        raise DegenerateOutcomeError(f"Outcome {m} has zero probability for this input and channel")
    return bob[..., m, :, :] / p[..., None, None]


def recovery_model(beta: Union[str, EnvironmentKind], m: int, gamma: float, omega: float) -> LindbladModel:
    """Bob's correction for outcome m: rotation H_m = -ωσ^m/2 in environment β."""
    return LindbladModel(
        hamiltonian=-0.5 * omega * pauli(m),
        collapse_ops=generators(beta, 1),
        gamma=gamma,
    )


def output_state(
    m: int,
    rho_in,
    channel: ChannelState,
    rec: RecoveryConfig,
    cfg: Optional[IntegratorConfig] = None,
    tol: Optional[Tolerances] = None,
    recovery_gamma: Optional[float] = None,
) -> np.ndarray:
    gamma = channel.gamma if recovery_gamma is None else recovery_gamma
    model = recovery_model(rec.beta, m, gamma, rec.omega)
    return evolve(model, conditional_state(m, rho_in, channel), rec.t, cfg, tol)


def octahedral6() -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """±x, ±y, ±z with weight 1/6; exact for integrands of degree ≤ 2 on the sphere."""
    half = np.pi / 2
    theta = np.array([0.0, np.pi, half, half, half, half])
    phi = np.array([0.0, 0.0, 0.0, np.pi, half, 3 * half])
    return theta, phi, np.full(6, 1.0 / 6.0)


def dense_grid(n_theta: int, n_phi: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Legendre in cos θ times the uniform trapezoid rule in φ."""
    nodes, weights = np.polynomial.legendre.leggauss(n_theta)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    theta = np.repeat(np.arccos(nodes), n_phi)
    phi = np.tile(phis, n_theta)
    w = np.repeat(weights / 2.0, n_phi) / n_phi
    return theta, phi, w


def quadrature_rule(
    quadrature: str = "octahedral6",
    n_theta: Optional[int] = None,
    n_phi: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if quadrature == "octahedral6":
        return octahedral6()
    if quadrature == "dense":
        return dense_grid(n_theta or settings.DENSE_N_THETA, n_phi or settings.DENSE_N_PHI)
    raise ValueError(f"Unknown quadrature '{quadrature}'")


def input_states(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    kets = np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=-1)
    return projector(kets)


def _recovered(
    bob: np.ndarray,
    probs: np.ndarray,
    rec: RecoveryConfig,
    gamma: float,
    cfg: Optional[IntegratorConfig],
    tol: Optional[Tolerances],
) -> np.ndarray:
    """Evolve every branch for time rec.t; degenerate branches are left untouched."""
    out = np.zeros_like(bob)
    for m in OUTCOMES:
        p = probs[..., m]
        live = p > _MIN_PROBABILITY
        if not np.any(live):
            continue
        states = bob[..., m, :, :][live] / p[live][:, None, None]
        model = recovery_model(rec.beta, m, gamma, rec.omega)
        branch = np.zeros(bob.shape[:-3] + (2, 2), dtype=complex)
        branch[live] = evolve(model, states, rec.t, cfg, tol)
        out[..., m, :, :] = branch
    return out


def _sphere_average(
    channel_rho: np.ndarray,
    rec: RecoveryConfig,
    gamma: float,
    quadrature: str,
    n_theta: Optional[int],
    n_phi: Optional[int],
    cfg: Optional[IntegratorConfig],
    tol: Optional[Tolerances],
):
    theta, phi, weights = quadrature_rule(quadrature, n_theta, n_phi)
    rho_in = input_states(theta, phi)
    # (..., K, 2, 2) against (..., 1, 4, 4)
    bob, probs = _branches(rho_in, channel_rho[..., None, :, :])
    out = _recovered(bob, probs, rec, gamma, cfg, tol)
    fid = np.real(np.einsum("...kij,...kmji->...km", rho_in, out))
    return theta, phi, weights, probs, fid


def _report(theta, phi, weights, probs, fid, detail: bool) -> FidelityReport:
    p_avg = probs.T @ weights
    pf_avg = (probs * fid).T @ weights
    f_avg = np.divide(pf_avg, p_avg, out=np.zeros_like(pf_avg), where=p_avg > 0)
    points = None
    if detail:
        points = [
            FidelityPoint(
                theta=float(theta[k]),
                phi=float(phi[k]),
                weight=float(weights[k]),
                probabilities=probs[k].tolist(),
                fidelities=fid[k].tolist(),
            )
            for k in range(len(weights))
        ]
    return FidelityReport(
        probabilities=p_avg.tolist(),
        fidelities=f_avg.tolist(),
        average=float(pf_avg.sum()),
        method="numeric",
        points=points,
    )


def average_fidelity(
    channel: ChannelState,
    rec: RecoveryConfig,
    quadrature: str = "octahedral6",
    n_theta: Optional[int] = None,
    n_phi: Optional[int] = None,
    detail: bool = False,
    cfg: Optional[IntegratorConfig] = None,
    tol: Optional[Tolerances] = None,
    recovery_gamma: Optional[float] = None,
) -> FidelityReport:
    """Sphere- and outcome-averaged fidelity F = ∫ Σ_m P_m f_m dΩ/4π.

    `recovery_gamma` replaces the channel's γ during recovery only (0 gives an
    ideal, decoherence-free correction).
    """
    gamma = channel.gamma if recovery_gamma is None else recovery_gamma
    theta, phi, weights, probs, fid = _sphere_average(
        channel.rho, rec, gamma, quadrature, n_theta, n_phi, cfg, tol
    )
    return _report(theta, phi, weights, probs, fid, detail)


def average_fidelity_many(
    channels: Sequence[ChannelState],
    rec: RecoveryConfig,
    quadrature: str = "octahedral6",
    cfg: Optional[IntegratorConfig] = None,
    tol: Optional[Tolerances] = None,
) -> List[float]:
    """Average fidelity for several resource states sharing one γ and one recovery."""
    if not channels:
        return []
    gammas = {c.gamma for c in channels}
    if len(gammas) != 1:
        raise ValueError("average_fidelity_many needs channels with a common gamma")
    stack = np.stack([c.rho for c in channels])
    _, _, weights, probs, fid = _sphere_average(stack, rec, gammas.pop(), quadrature, None, None, cfg, tol)
    return np.einsum("ck,ckm->c", np.broadcast_to(weights, probs.shape[:-1]), probs * fid).tolist()


def numeric_fidelity(
    alpha: Union[str, ChannelKind],
    beta: Union[str, EnvironmentKind],
    gamma: float,
    omega: float,
    t,
    t0: float,
    quadrature: str = "octahedral6",
    cfg: Optional[IntegratorConfig] = None,
    tol: Optional[Tolerances] = None,
    gamma_factor: float = 1.0,
):
    """F(t) through the numerical pipeline; `t` may be an array.

    `gamma_factor` scales γ in this path only and exists to exercise the
    verification suite's fault detection.
    """
    g = gamma * gamma_factor
    channel = channel_state_numeric(alpha, g, t0, cfg, tol)
    times = np.atleast_1d(np.asarray(t, dtype=float))
    values = np.empty(times.shape)
    for i, ti in enumerate(times.flat):
        rec = RecoveryConfig(beta=beta, omega=omega, t=float(ti))
        values.flat[i] = average_fidelity(channel, rec, quadrature, cfg=cfg, tol=tol).average
    if np.ndim(t) == 0:
        return float(values[0])
    return values


def ideal_correction_fidelity(alpha: Union[str, ChannelKind], gamma: float, t0: float, omega: float = 1.0) -> float:
    """Pipeline average with a decoherence-free recovery of duration π/ω."""
    channel = channel_state_closed(alpha, gamma, t0)
    rec = RecoveryConfig(beta=EnvironmentKind.DEPHASING, omega=omega, t=np.pi / omega)
    report = average_fidelity(channel, rec, recovery_gamma=0.0)
    logger.debug(f"ideal correction for {channel.alpha.value}: F={report.average:.9f}")
    return report.average
