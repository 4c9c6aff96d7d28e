"""Lindblad master equation: right-hand side and a fixed-step RK4 integrator.

dρ/dt = -i[H, ρ] + (γ/2) Σ_k (2 L_k ρ L_k† - L_k† L_k ρ - ρ L_k† L_k)

The generator is linear and time independent, so one RK4 step is a fixed linear
map on the d*d entries of ρ. `evolve` builds that map once from `rk4_step` and
raises it to the number of steps, which gives the same numbers as stepping in a
loop while staying cheap for long durations and for stacks of initial states.
"""
import math
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings, Tolerances
from app.core.exceptions import DimensionError, IntegratorError, NotDensityMatrixError
from app.qmat import (
    adjoint,
    density_deviation,
    matrix_dim,
    operator_norm,
    validate_density_matrix,
)
from app.schemas.common import IntegratorConfig
from app.utils import logger

# the fixed drift bounds hold for γ·duration up to this value
HORIZON_GAMMA_T = 10.0
ROUNDOFF_PER_STEP = 16.0 * np.finfo(float).eps


class LindbladModel(BaseModel):
    """Гамильтониан, список операторов Линдблада и скорость декогеренции γ."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    hamiltonian: np.ndarray
    collapse_ops: List[np.ndarray] = Field(default_factory=list)
    gamma: float = Field(0.0, ge=0.0)

    @field_validator("hamiltonian", mode="before")
    @classmethod
    def _as_matrix(cls, value) -> np.ndarray:
        m = np.array(value, dtype=complex)
        if m.ndim != 2:
            raise DimensionError(f"Hamiltonian must be a single matrix, got shape {m.shape}")
        matrix_dim(m)
        m.setflags(write=False)
        return m

    @field_validator("collapse_ops", mode="before")
    @classmethod
    def _as_matrices(cls, value) -> List[np.ndarray]:
        ops = []
        for op in value or []:
            m = np.array(op, dtype=complex)
            m.setflags(write=False)
            ops.append(m)
        return ops

    @model_validator(mode="after")
    def _same_dims(self) -> "LindbladModel":
        dim = self.hamiltonian.shape[-1]
        for op in self.collapse_ops:
            if op.shape != (dim, dim):
                raise DimensionError(f"Collapse operator shape {op.shape} does not match Hamiltonian {dim}x{dim}")
        return self

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[-1]

    @property
    def is_static(self) -> bool:
        """True when the generator vanishes identically (H ∝ I and no active dissipation)."""
        traceless = self.hamiltonian - np.trace(self.hamiltonian) / self.dim * np.eye(self.dim)
        no_dissipation = self.gamma == 0.0 or not self.collapse_ops
        return no_dissipation and not np.any(traceless)

    def frequency_scale(self) -> float:
        """Spectral spread of H; the identity part generates no dynamics."""
        traceless = self.hamiltonian - np.trace(self.hamiltonian) / self.dim * np.eye(self.dim)
        return 2.0 * operator_norm(traceless)


def liouvillian_apply(model: LindbladModel, rho: np.ndarray) -> np.ndarray:
    """dρ/dt for a single ρ or a stack (..., d, d)."""
    rho = np.asarray(rho, dtype=complex)
    d = model.dim
    if rho.shape[-2:] != (d, d):
        raise DimensionError(f"State shape {rho.shape[-2:]} does not match model dimension {d}")

    h = model.hamiltonian
    out = -1j * (h @ rho - rho @ h)
    if model.gamma > 0.0 and model.collapse_ops:
        dissipator = np.zeros_like(out)
        for op in model.collapse_ops:
            op_dag = adjoint(op)
            number = op_dag @ op
            dissipator += 2.0 * (op @ rho @ op_dag) - number @ rho - rho @ number
        out = out + 0.5 * model.gamma * dissipator
    return out


def rk4_step(model: LindbladModel, rho: np.ndarray, h: float) -> np.ndarray:
    """Один классический шаг Рунге-Кутты 4-го порядка."""
    k1 = liouvillian_apply(model, rho)
    k2 = liouvillian_apply(model, rho + 0.5 * h * k1)
    k3 = liouvillian_apply(model, rho + 0.5 * h * k2)
    k4 = liouvillian_apply(model, rho + h * k3)
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_map(model: LindbladModel, h: float) -> np.ndarray:
    """Matrix S with vec(rk4_step(ρ, h)) = S @ vec(ρ), row-major vec."""
    d = model.dim
    units = np.eye(d * d, dtype=complex).reshape(d * d, d, d)
    images = rk4_step(model, units, h)
    return images.reshape(d * d, d * d).T


def step_size(model: LindbladModel, cfg: Optional[IntegratorConfig] = None) -> float:
    """Step rule h = min(step, (1/50)/max(γ, ω_scale, 1)).

    The automatic step shrinks with the rotation rate so that the RK4 phase error
    stays far below the two-path tolerance over long recoveries.
    """
    cfg = cfg or IntegratorConfig()
    omega_scale = model.frequency_scale()
    chosen = cfg.step or settings.INTEGRATOR_STEP / max(1.0, omega_scale)
    scale = max(model.gamma, omega_scale, 1.0)
    return min(chosen, (1.0 / 50.0) / scale)


def propagator(model: LindbladModel, duration: float, h: float) -> Tuple[np.ndarray, int]:
    """RK4 propagator over `duration` with the largest uniform step not above h."""
    n_steps = max(1, math.ceil(duration / h - 1e-12))
    h_eff = duration / n_steps
    return np.linalg.matrix_power(step_map(model, h_eff), n_steps), n_steps


def _apply(prop: np.ndarray, rho: np.ndarray) -> np.ndarray:
    d = rho.shape[-1]
    flat = rho.reshape(rho.shape[:-2] + (d * d,))
    return (flat @ prop.T).reshape(rho.shape)


def drift_allowance(base: float, duration: float, gamma: float, n_steps: int) -> float:
    """Допуск на дрейф следа/эрмитовости/положительности.

    Up to 10/γ the fixed bound applies; past it the bound grows with the horizon,
    and it never drops below the round-off floor of n_steps RK4 steps.
    """
    horizon = duration * gamma / HORIZON_GAMMA_T if gamma > 0 else 0.0
    return max(base, base * horizon, ROUNDOFF_PER_STEP * n_steps)


def _violations(rho: np.ndarray, tol: Tolerances, duration: float = 0.0, gamma: float = 0.0, n_steps: int = 1) -> List[str]:
    dev = density_deviation(rho)
    problems = []
    if dev["trace_error"] > drift_allowance(tol.evolve_trace, duration, gamma, n_steps):
        problems.append(f"trace drift {dev['trace_error']:.3e}")
    if dev["hermitian_error"] > drift_allowance(tol.evolve_hermitian, duration, gamma, n_steps):
        problems.append(f"hermiticity drift {dev['hermitian_error']:.3e}")
    if dev["min_eigenvalue"] < -drift_allowance(tol.evolve_positivity, duration, gamma, n_steps):
        problems.append(f"min eigenvalue {dev['min_eigenvalue']:.3e}")
    return problems


def _attempt(model, rho0, duration, h, richardson, tol) -> Tuple[np.ndarray, List[str]]:
    prop, n_steps = propagator(model, duration, h)
    rho = _apply(prop, rho0)
    problems = _violations(rho, tol, duration, model.gamma, n_steps)
    if richardson and not problems:
        half, _ = propagator(model, duration, h / 2.0)
        diff = float(np.max(np.abs(_apply(half, rho0) - rho)))
        if diff > tol.richardson:
            problems.append(f"half-step disagreement {diff:.3e}")
    logger.debug(f"evolve: d={model.dim} duration={duration} steps={n_steps} problems={problems}")
    return rho, problems


def evolve(
    model: LindbladModel,
    rho0: np.ndarray,
    duration: float,
    cfg: Optional[IntegratorConfig] = None,
    tol: Optional[Tolerances] = None,
) -> np.ndarray:
    """Integrate the master equation from rho0 (single state or stack) for `duration`.

    The result is checked for trace, Hermiticity and positivity drift against
    `drift_allowance`; on failure the step is cut by four once before
    IntegratorError is raised.
    """
    cfg = cfg or IntegratorConfig(richardson_check=settings.RICHARDSON_CHECK)
    tol = tol or settings.TOL
    if duration < 0 or not math.isfinite(duration):
        raise IntegratorError(f"Duration must be finite and non-negative, got {duration}")

    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape[-2:] != (model.dim, model.dim):
        raise DimensionError(f"State shape {rho0.shape[-2:]} does not match model dimension {model.dim}")
    try:
        validate_density_matrix(
            rho0,
            tol,
            trace_tol=tol.evolve_trace,
            hermitian_tol=tol.evolve_hermitian,
            positivity_tol=tol.evolve_positivity,
        )
    except NotDensityMatrixError as e:
        raise NotDensityMatrixError(f"Initial state rejected: {e.detail}")

    if duration == 0.0 or model.is_static:
        return rho0.copy()

    h = step_size(model, cfg)
    rho, problems = _attempt(model, rho0, duration, h, cfg.richardson_check, tol)
    if not problems:
        return rho

    logger.warning(f"Integrator check failed at h={h:.3e} ({'; '.join(problems)}), retrying with h/4")
    rho, problems = _attempt(model, rho0, duration, h / 4.0, cfg.richardson_check, tol)
    if problems:
        raise IntegratorError(f"Integration failed after step reduction: {'; '.join(problems)}")
    return rho
