from pathlib import Path
import os

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

BASE_DIR = Path(__file__).resolve().parent.parent


def available_parallelism() -> int:
    """Number of CPUs this process may run on"""
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


class Settings(BaseSettings):
    """Application settings loaded from environment variables"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        populate_by_name=True,
        extra="ignore",
    )

    # General
    app_name: str = Field(default="mwvariance", alias="APP_NAME")
    log_level: str = Field(default="INFO", alias="LOG_LEVEL")
    log_dir: Path = Field(default=BASE_DIR / "logs", alias="LOG_DIR")
    log_to_file: bool = Field(default=False, alias="LOG_TO_FILE")

    # Simulation
    default_seed: int = Field(default=20240601, ge=0, lt=2**64, alias="DEFAULT_SEED")
    default_nsim: int = Field(default=100_000, ge=1, alias="DEFAULT_NSIM")
    threads: int = Field(default=0, ge=0, alias="THREADS")  # 0 = available parallelism
    experiments_dir: Path = Field(default=BASE_DIR / "config" / "experiments", alias="EXPERIMENTS_DIR")

    # Verification
    enumeration_budget: int = Field(default=10_000_000, ge=1, alias="ENUMERATION_BUDGET")
    bound_tolerance: float = Field(default=1e-12, ge=0, alias="BOUND_TOLERANCE")

    # Reporting
    ci_level: float = Field(default=0.95, gt=0, lt=1, alias="CI_LEVEL")

    def resolve_threads(self, requested: int | None = None) -> int:
        """Worker count for a run; 0 or None falls back to available parallelism"""
        threads = requested if requested else self.threads
        return threads if threads > 0 else available_parallelism()


settings = Settings()
