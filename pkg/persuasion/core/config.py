from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # App
    APP_NAME: str = Field(default="persuasion-equilibria")
    APP_VERSION: str = Field(default="0.1.0")
    ENVIRONMENT: str = Field(default="development")
    LOG_LEVEL: str = Field(default="WARNING")

    # Payoff evaluation
    TIE_TOL: float = Field(default=1e-12, ge=0.0)
    DEFAULT_K: int = Field(default=512, ge=1)

    # Simplex
    LP_TOL: float = Field(default=1e-9, gt=0.0)
    PIVOT_RULE: str = Field(default="dantzig")
    BLAND_STALL_FACTOR: int = Field(default=10, ge=1)

    # Verification tolerance model: c1 * h * Vmax + c2 * Vmax / K
    DEFAULT_GRID: int = Field(default=51, ge=2)
    VERIFY_C1: float = Field(default=2.0, ge=0.0)
    VERIFY_C2: float = Field(default=2.0, ge=0.0)

    # Scalar root finding and feasibility scans
    SCAN_STEP: float = Field(default=1e-3, gt=0.0)
    BISECT_TOL: float = Field(default=1e-9, gt=0.0)
    NEWTON_MAX_ITER: int = Field(default=200, ge=1)

    # Fixtures and sweeps
    FIXTURE_PIECES: int = Field(default=16, ge=1)
    SWEEP_WORKERS: int = Field(default=1, ge=1)

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="PERSUASION_",
        case_sensitive=False,
        extra="ignore",
    )


@lru_cache(maxsize=1)
def get_settings() -> "Settings":
    return Settings()
