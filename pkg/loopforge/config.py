"""Runtime configuration settings.

This module provides centralized configuration management for loopforge.
All settings can be overridden via environment variables.

Environment Variables:
    LOOPFORGE_THREADS: Maximum number of worker threads for suites and
        per-point field evaluation
        Default: 1
        Note: values below 1 are clamped to 1

    LOOPFORGE_DEFAULT_SEED: Seed used when no --seed flag or config seed is given
        Default: 0

    ENVIRONMENT: Deployment environment name
        Default: development
        Options: development, production
        Affects: logging format (colored vs JSON lines)

    LOG_LEVEL: Logging verbosity level
        Default: INFO (production), DEBUG (development)
        Options: DEBUG, INFO, WARNING, ERROR, CRITICAL

Usage:
    >>> from loopforge.config import settings
    >>> print(settings.threads)
    >>> if settings.is_production:
    ...     print("Emitting JSON log lines")
"""
import os


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name, "")
    try:
        return int(raw) if raw.strip() else default
    except ValueError:
        return default


class Settings:
    """Settings loaded from environment variables.

    Attributes are read once at import time; tests that need a different value
    patch the attribute on the global ``settings`` instance.
    """

    # Parallelism
    LOOPFORGE_THREADS: int = _int_env("LOOPFORGE_THREADS", 1)
    """Upper bound on worker threads. Outputs never depend on this value."""

    # Reproducibility
    LOOPFORGE_DEFAULT_SEED: int = _int_env("LOOPFORGE_DEFAULT_SEED", 0)
    """Seed for the random sample generator when none is configured."""

    # Application settings
    ENVIRONMENT: str = os.getenv("ENVIRONMENT", "development")
    """Deployment environment: development or production."""

    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "")
    """Logging level. Empty string means auto-detect based on ENVIRONMENT."""

    @property
    def threads(self) -> int:
        """Effective worker count (at least 1)."""
        return max(1, int(self.LOOPFORGE_THREADS))

    @property
    def is_production(self) -> bool:
        """Check if running in production environment.

        Returns:
            True if ENVIRONMENT is 'production' (case-insensitive)
        """
        return self.ENVIRONMENT.lower() == "production"

    @property
    def is_development(self) -> bool:
        """Check if running in development environment.

        Returns:
            True if ENVIRONMENT is 'development' (case-insensitive)
        """
        return self.ENVIRONMENT.lower() == "development"


settings = Settings()
"""Global settings instance. Import and use throughout the package."""
