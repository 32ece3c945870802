"""Process settings using Pydantic Settings."""

from functools import lru_cache
from pathlib import Path
from typing import Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings with ``GAUGELAB_`` environment variable support."""

    model_config = SettingsConfigDict(
        env_prefix="GAUGELAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    # Output
    out_dir: Path = Path("out")

    # Workers
    threads: int = Field(default=4, ge=1)

    # Reproducibility
    default_seed: int = Field(default=20240, ge=0, lt=2**64)

    # Integration defaults
    t_min: float = Field(default=1e-3, gt=0.0, lt=1.0)
    rel_tol: float = Field(default=1e-8, gt=0.0)
    abs_tol: float = Field(default=1e-10, gt=0.0)
    n_checkpoints: int = Field(default=64, ge=2)

    @field_validator("log_level", mode="before")
    @classmethod
    def normalise_level(cls, v: str) -> str:
        """Accept lower-case level names from the environment."""
        return v.upper() if isinstance(v, str) else v


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
