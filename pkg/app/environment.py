"""Local decoherence environments and the two-qubit resource states they produce.

Each qubit of the shared pair couples to its own environment; the transmission
Hamiltonian is zero, so the resource after a transmission time t0 is the
Lindblad evolution of |Ψ0> = (|00> + |11>)/√2 under the local generators only.
"""
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.optimize import bisect

from app.core.config import settings, Tolerances
from app.core.exceptions import NotDensityMatrixError
from app.lindblad import LindbladModel, evolve
from app.qmat import IDENTITY2, SIGMA_MINUS, SIGMA_PLUS, kron, projector
from app.schemas.common import ChannelKind, ChannelState, EnvironmentKind, IntegratorConfig
from app.utils import logger

PSI0 = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / np.sqrt(2.0)

# positions of the X-state pattern (0-based)
X_ENTRIES = ((0, 0), (1, 1), (2, 2), (3, 3), (0, 3), (3, 0), (1, 2), (2, 1))


def _local_ops(kind: EnvironmentKind) -> List[np.ndarray]:
    if kind is EnvironmentKind.DISSIPATIVE:
        return [SIGMA_MINUS]
    if kind is EnvironmentKind.NOISY:
        return [SIGMA_MINUS, SIGMA_PLUS]
    return [SIGMA_PLUS @ SIGMA_MINUS]


def generators(kind: Union[str, EnvironmentKind], qubits: int = 1) -> List[np.ndarray]:
    """Collapse operators of one environment kind on 1 or 2 qubits.

    For two qubits every local operator appears twice, as op⊗I and I⊗op.
    """
    kind = EnvironmentKind.parse(kind)
    local = _local_ops(kind)
    if qubits == 1:
        return [op.copy() for op in local]
    if qubits == 2:
        return [kron(op, IDENTITY2) for op in local] + [kron(IDENTITY2, op) for op in local]
    raise ValueError(f"qubits must be 1 or 2, got {qubits}")


def bell_projector() -> np.ndarray:
    return projector(PSI0)


def channel_state_closed(alpha: Union[str, ChannelKind], gamma: float, t0: float) -> ChannelState:
    """Resource state ρ^(α)(t0) from the element formulas."""
    alpha = ChannelKind.parse(alpha)
    if gamma < 0 or t0 < 0:
        raise ValueError(f"gamma and t0 must be non-negative, got gamma={gamma}, t0={t0}")

    x = gamma * t0
    rho = np.zeros((4, 4), dtype=complex)
    if alpha is ChannelKind.PERFECT or x == 0.0:
        rho[0, 0] = rho[3, 3] = rho[0, 3] = rho[3, 0] = 0.5
    elif alpha is ChannelKind.DISSIPATIVE:
        e1, e2 = np.exp(-x), np.exp(-2 * x)
        rho[0, 0] = e2 / 2
        rho[0, 3] = rho[3, 0] = e1 / 2
        rho[1, 1] = rho[2, 2] = (e1 - e2) / 2
        rho[3, 3] = 1 - e1 + e2 / 2
    elif alpha is ChannelKind.NOISY:
        e2, e4 = np.exp(-2 * x), np.exp(-4 * x)
        rho[0, 0] = rho[3, 3] = (1 + e4) / 4
        rho[0, 3] = rho[3, 0] = e2 / 2
        rho[1, 1] = rho[2, 2] = (1 - e4) / 4
    else:
        rho[0, 0] = rho[3, 3] = 0.5
        rho[0, 3] = rho[3, 0] = np.exp(-x) / 2

    return ChannelState(alpha=alpha, gamma=gamma, t0=t0, rho=rho)


def channel_model(kind: Union[str, EnvironmentKind], gamma: float) -> LindbladModel:
    """Two-qubit transmission model: zero Hamiltonian, local generators."""
    return LindbladModel(
        hamiltonian=np.zeros((4, 4), dtype=complex),
        collapse_ops=generators(kind, 2),
        gamma=gamma,
    )


def channel_state_numeric(
    alpha: Union[str, ChannelKind],
    gamma: float,
    t0: float,
    cfg: Optional[IntegratorConfig] = None,
    tol: Optional[Tolerances] = None,
) -> ChannelState:
    """Resource state obtained by integrating the master equation from |Ψ0><Ψ0|."""
    alpha = ChannelKind.parse(alpha)
    rho0 = bell_projector()
    if alpha is ChannelKind.PERFECT:
        return ChannelState(alpha=alpha, gamma=gamma, t0=t0, rho=rho0)

    rho = evolve(channel_model(alpha.environment, gamma), rho0, t0, cfg, tol)
    # local generators never leave the X pattern; drop round-off outside it
    mask = np.ones((4, 4), dtype=bool)
    for i, j in X_ENTRIES:
        mask[i, j] = False
    rho[mask] = 0.0
    return ChannelState(alpha=alpha, gamma=gamma, t0=t0, rho=rho)


def _x_matrix(state: Union[ChannelState, np.ndarray]) -> np.ndarray:
    rho = state.rho if isinstance(state, ChannelState) else np.asarray(state, dtype=complex)
    if rho.shape != (4, 4):
        raise NotDensityMatrixError(f"Concurrence needs a 4x4 state, got {rho.shape}")
    mask = np.ones((4, 4), dtype=bool)
    for i, j in X_ENTRIES:
        mask[i, j] = False
    if np.max(np.abs(rho[mask])) > settings.TOL.concurrence:
        raise NotDensityMatrixError("Concurrence formula is only valid for X-states")
    return rho


def concurrence_margin(state: Union[ChannelState, np.ndarray]) -> float:
    """2·max{|ρ14| - √(ρ22ρ33), |ρ23| - √(ρ11ρ44)} without the clip at zero.

    Changes sign exactly at sudden death, so root finders can work on it.
    """
    rho = _x_matrix(state)
    d = np.real(np.diag(rho)).clip(min=0.0)
    first = abs(rho[0, 3]) - np.sqrt(d[1] * d[2])
    second = abs(rho[1, 2]) - np.sqrt(d[0] * d[3])
    return float(2.0 * max(first, second))


def concurrence(state: Union[ChannelState, np.ndarray]) -> float:
    return max(0.0, concurrence_margin(state))


def concurrence_curve(alpha: Union[str, ChannelKind], gamma: float, t0_grid: Sequence[float]) -> np.ndarray:
    return np.array([concurrence(channel_state_closed(alpha, gamma, t0)) for t0 in t0_grid])


def esd_time(kind: Union[str, EnvironmentKind], gamma: float) -> Optional[float]:
    """Entanglement sudden death time; only the noisy channel has one."""
    kind = EnvironmentKind.parse(kind)
    if gamma <= 0:
        raise ValueError(f"gamma must be positive for sudden death, got {gamma}")
    if kind is EnvironmentKind.NOISY:
        return float(np.log(np.sqrt(2.0) + 1.0) / (2.0 * gamma))
    return None


def esd_time_bisect(kind: Union[str, EnvironmentKind], gamma: float, xtol: float = 1e-12) -> Optional[float]:
    """Sudden death time located by bisection on the concurrence margin."""
    kind = EnvironmentKind.parse(kind)
    if gamma <= 0:
        raise ValueError(f"gamma must be positive for sudden death, got {gamma}")

    def margin(t0: float) -> float:
        return concurrence_margin(channel_state_closed(kind.value, gamma, t0))

    hi = 10.0 / gamma
    if margin(hi) > 0:
        logger.debug(f"No sudden death for {kind.value} up to t0={hi}")
        return None
    return float(bisect(margin, 0.0, hi, xtol=xtol, maxiter=500))


def fully_entangled_fraction(state: Union[ChannelState, np.ndarray]) -> float:
    """Overlap <Ψ0|ρ|Ψ0> with the Bell state the protocol is built on."""
    rho = state.rho if isinstance(state, ChannelState) else np.asarray(state, dtype=complex)
    return float(np.real(PSI0.conj() @ rho @ PSI0))

