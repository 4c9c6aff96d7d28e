import os
import logging
from typing import Literal, Optional

from dotenv import load_dotenv, find_dotenv
from pydantic import BaseModel, Field, PositiveFloat
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger("teleport")
load_dotenv(find_dotenv())


class Tolerances(BaseModel):
    """All numerical tolerances in one place; tests and the verify suite read them from here."""

    # density matrices (qmat)
    trace: PositiveFloat = 1e-9
    hermitian: PositiveFloat = 1e-9
    positivity: PositiveFloat = 1e-9
    eig_offdiag: PositiveFloat = 1e-12

    # integrator (lindblad)
    evolve_trace: PositiveFloat = 1e-9
    evolve_hermitian: PositiveFloat = 1e-9
    evolve_positivity: PositiveFloat = 1e-8
    richardson: PositiveFloat = 1e-8

    # cross-checks
    channel_state: PositiveFloat = 1e-8
    two_path: PositiveFloat = 1e-6
    quadrature: PositiveFloat = 1e-9
    concurrence: PositiveFloat = 1e-12

    # searches (analysis)
    golden: PositiveFloat = 1e-10
    omega_bisect: PositiveFloat = 1e-7
    t0_bisect: PositiveFloat = 1e-5
    simplex: PositiveFloat = 1e-10

    def override(self, **changes: float) -> "Tolerances":
        unknown = set(changes) - set(type(self).model_fields)
        if unknown:
            raise KeyError(", ".join(sorted(unknown)))
        return self.model_copy(update=changes)


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="TELEPORT_",
        env_nested_delimiter="__",
        extra="ignore",
    )

    PROJECT_NAME: str = "DisturbedTeleport"
    LOG_LEVEL: str = "INFO"

    # Run defaults (command-line flags take precedence)
    GAMMA: float = Field(0.1, ge=0)
    OMEGA: float = Field(1.0, ge=0)
    T: float = Field(0.0, ge=0)
    T0: float = Field(0.0, ge=0)
    METHOD: Literal["closed", "numeric", "both"] = "closed"
    QUADRATURE: Literal["octahedral6", "dense"] = "octahedral6"
    DENSE_N_THETA: int = Field(64, gt=0)
    DENSE_N_PHI: int = Field(128, gt=0)
    OUTPUT_FORMAT: Literal["csv", "json"] = "csv"
    THREADS: Optional[int] = Field(None, gt=0)

    # Integrator
    INTEGRATOR_STEP: PositiveFloat = 1e-3
    RICHARDSON_CHECK: bool = False

    TOL: Tolerances = Tolerances()

    def __init__(self, **kwargs):
        super().__init__(**kwargs)

        # Worker pool follows the machine unless pinned
        if self.THREADS is None:
            self.THREADS = os.cpu_count() or 1

        self.LOG_LEVEL = self.LOG_LEVEL.upper()


# Initialize settings with logging
try:
    settings = Settings()
    logger.debug("Settings loaded successfully")
except Exception as e:
    logger.error(f"Error loading settings: {e}")
    raise
