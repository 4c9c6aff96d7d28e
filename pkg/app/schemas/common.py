from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, field_validator, model_validator

from app.core.config import Tolerances


class EnvironmentKind(str, Enum):
    DISSIPATIVE = "di"
    NOISY = "no"
    DEPHASING = "de"

    @classmethod
    def parse(cls, value: "str | EnvironmentKind") -> "EnvironmentKind":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        for kind in cls:
            if text in (kind.value, kind.name.lower()):
                return kind
        raise ValueError(f"Unknown environment kind '{value}' (expected di, no or de)")


class ChannelKind(str, Enum):
    PERFECT = "perfect"
    DISSIPATIVE = "di"
    NOISY = "no"
    DEPHASING = "de"

    @classmethod
    def parse(cls, value: "str | ChannelKind | EnvironmentKind") -> "ChannelKind":
        if isinstance(value, cls):
            return value
        if isinstance(value, EnvironmentKind):
            return cls(value.value)
        text = str(value).strip().lower()
        if text in ("p", "perfect"):
            return cls.PERFECT
        return cls(EnvironmentKind.parse(text).value)

    @property
    def environment(self) -> Optional[EnvironmentKind]:
        return None if self is ChannelKind.PERFECT else EnvironmentKind(self.value)


class IntegratorConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: Optional[PositiveFloat] = None  # None -> settings.INTEGRATOR_STEP
    richardson_check: bool = False


class InputState(BaseModel):
    """Точка на сфере Блоха: cos(θ/2)|0> + e^{iφ} sin(θ/2)|1>."""

    model_config = ConfigDict(frozen=True)

    theta: float = Field(ge=0.0, le=np.pi)
    phi: float = Field(ge=0.0, lt=2 * np.pi)

    def ket(self) -> np.ndarray:
        return np.array(
            [np.cos(self.theta / 2), np.exp(1j * self.phi) * np.sin(self.theta / 2)],
            dtype=complex,
        )

    def bloch(self) -> np.ndarray:
        return np.array([
            np.sin(self.theta) * np.cos(self.phi),
            np.sin(self.theta) * np.sin(self.phi),
            np.cos(self.theta),
        ])


class ChannelState(BaseModel):
    """Двухкубитный ресурс ρ^(α)(t0), X-состояние."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alpha: ChannelKind
    gamma: float = Field(ge=0.0)
    t0: float = Field(ge=0.0)
    rho: np.ndarray

    @field_validator("rho", mode="before")
    @classmethod
    def _x_state(cls, rho) -> np.ndarray:
        rho = np.array(rho, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError(f"Channel state must be 4x4, got {rho.shape}")
        mask = np.ones((4, 4), dtype=bool)
        for i, j in ((0, 0), (1, 1), (2, 2), (3, 3), (0, 3), (3, 0), (1, 2), (2, 1)):
            mask[i, j] = False
        if np.max(np.abs(rho[mask])) > 1e-12:
            raise ValueError("Channel state is not an X-state")
        rho.setflags(write=False)
        return rho

    def element(self, i: int, j: int) -> complex:
        """Элемент ρ_ij в нумерации 1..4, как в формулах канала."""
        return complex(self.rho[i - 1, j - 1])


class RecoveryConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta: EnvironmentKind
    omega: float = Field(ge=0.0)
    t: float = Field(ge=0.0)

    @field_validator("beta", mode="before")
    @classmethod
    def _parse_beta(cls, value):
        return EnvironmentKind.parse(value)


class FidelityPoint(BaseModel):
    theta: float
    phi: float
    weight: float
    probabilities: List[float]
    fidelities: List[float]


class FidelityReport(BaseModel):
    probabilities: List[float]
    fidelities: List[float]
    average: float
    method: Literal["numeric", "closed"]
    points: Optional[List[FidelityPoint]] = None

    @model_validator(mode="after")
    def _check(self) -> "FidelityReport":
        if self.method == "numeric":
            if abs(sum(self.probabilities) - 1.0) > 1e-9:
                raise ValueError(f"Outcome probabilities sum to {sum(self.probabilities)}")
        if not -1e-9 <= self.average <= 1.0 + 1e-9:
            raise ValueError(f"Average fidelity {self.average} outside [0, 1]")
        return self


class CriticalPointResult(BaseModel):
    t_c: Optional[float] = None
    f_max: Optional[float] = None
    omega_c: Optional[float] = None
    t0_c: Optional[float] = None
    window: Tuple[float, float] = (0.0, 0.0)
    iterations: int = 0
    boundary: bool = False
    local_maxima: List[Tuple[float, float]] = Field(default_factory=list)
    sensitivity: Optional[Dict[str, float]] = None
    note: str = ""


class FitResult(BaseModel):
    a: float
    b: float
    c: float
    d: float
    rms_residual: float = Field(ge=0.0)
    fit_window: Tuple[float, float]
    n_points: int
    seed: int = 0

    def predict(self, t0):
        t0 = np.asarray(t0, dtype=float)
        return self.a * np.exp(self.b * t0) + self.c * np.exp(self.d * t0)


class SweepSpec(BaseModel):
    axis: Literal["omega", "t", "t0", "gamma"]
    values: List[float]
    alpha: ChannelKind = ChannelKind.PERFECT
    beta: EnvironmentKind = EnvironmentKind.DISSIPATIVE
    gamma: float = Field(0.1, ge=0.0)
    omega: float = Field(1.0, ge=0.0)
    t: float = Field(0.0, ge=0.0)
    t0: float = Field(0.0, ge=0.0)
    method: Literal["closed", "numeric"] = "closed"

    @field_validator("values")
    @classmethod
    def _non_negative(cls, values: List[float]) -> List[float]:
        if any(v < 0 or not np.isfinite(v) for v in values):
            raise ValueError("Sweep values must be finite and non-negative")
        return sorted(values)


class CheckResult(BaseModel):
    name: str
    module: str
    invariant: str
    measured: float
    tolerance: float
    passed: bool
    elapsed_ms: int = 0
    detail: str = ""


class ComparisonRow(BaseModel):
    key: str
    quantity: str
    published: Optional[float]
    computed: Optional[float]
    abs_deviation: Optional[float]
    rel_deviation: Optional[float]
    source: str
    note: str = ""


class RunConfig(BaseModel):
    """Validated command-line request: flags over TELEPORT_* environment over defaults."""

    command: str
    alphas: List[ChannelKind] = Field(default_factory=lambda: [ChannelKind.PERFECT])
    betas: List[EnvironmentKind] = Field(default_factory=lambda: [EnvironmentKind.DISSIPATIVE])
    gamma: float = Field(ge=0.0)
    omega: float = Field(ge=0.0)
    t: float = Field(ge=0.0)
    t0: float = Field(ge=0.0)
    method: Literal["closed", "numeric", "both"] = "closed"
    quadrature: Literal["octahedral6", "dense"] = "octahedral6"
    output: Optional[str] = None
    fmt: Literal["csv", "json", "markdown"] = "csv"
    threads: int = Field(1, gt=0)
    verbose: bool = False
    tol: Tolerances = Field(default_factory=Tolerances)

    @field_validator("alphas", mode="before")
    @classmethod
    def _parse_alphas(cls, value):
        return [ChannelKind.parse(v) for v in value]

    @field_validator("betas", mode="before")
    @classmethod
    def _parse_betas(cls, value):
        return [EnvironmentKind.parse(v) for v in value]

    @property
    def alpha(self) -> ChannelKind:
        return self.alphas[0]

    @property
    def beta(self) -> EnvironmentKind:
        return self.betas[0]
