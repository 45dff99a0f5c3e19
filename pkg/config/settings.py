"""
Configuration Management Module
Centralized runtime settings using Pydantic Settings
"""
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings with validation"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="GPOM_",
        case_sensitive=False,
        extra="ignore"
    )

    # Application Settings
    app_name: str = "WGPOM Mapping Toolkit"
    app_version: str = "1.0.0"
    environment: str = "development"
    log_level: str = "INFO"

    # Logging
    log_format: str = "console"

    # Observability
    enable_tracing: bool = False

    # Performance
    worker_threads: int = Field(1, ge=1)
    gram_chunk_rows: int = Field(64, ge=1)

    # Linear Algebra
    jitter_scale: float = Field(1e-8, gt=0)
    psd_clip_tolerance: float = Field(1e-8, gt=0)
    fusion_precision_floor: float = Field(1e-9, gt=0)

    # Warped GP
    inverse_warp_nodes: int = Field(20, ge=1)
    max_bracket_doublings: int = Field(1000, ge=1)

    # Unscented Transform
    ut_alpha: float = Field(1e-3, gt=0)
    ut_beta: float = 2.0
    ut_kappa: float = 0.0

    # Hyperparameter Optimisation
    optimizer_budget: int = Field(200, ge=1)
    optimizer_restarts: int = Field(3, ge=0)

    # Reproducibility
    default_seed: int = 7

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v):
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"Log level must be one of {valid_levels}")
        return v.upper()

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v):
        if v.lower() not in ("console", "json"):
            raise ValueError("Log format must be 'console' or 'json'")
        return v.lower()


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """Get application settings"""
    return settings


def override_settings(**values) -> Settings:
    """Replace the global settings instance (used by the CLI and tests)"""
    global settings
    settings = Settings(**{**settings.model_dump(), **values})
    return settings
