"""Configuration management for mckv using pydantic-settings."""

import psutil
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings loaded from environment variables and ``.env``."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Execution
    mckv_threads: int | None = None  # fallback for --threads
    mckv_seed: int = 0

    # Output
    mckv_log_level: str = "INFO"
    mckv_output_dir: str = "runs"


def resolve_threads(threads: int | None = None) -> int:
    """Pick the worker count: explicit value, then MCKV_THREADS, then cores.

    Args:
        threads: Value given on the command line, if any.

    Returns:
        A positive thread count.
    """
    if threads is None:
        threads = settings.mckv_threads
    if threads is None:
        threads = psutil.cpu_count(logical=False) or 1
    return max(1, int(threads))


# Global settings instance
settings = Settings()
