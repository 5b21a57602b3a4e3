"""
Application configuration management using Pydantic's BaseSettings.

This module centralizes engine and simulator settings, allowing them to be
loaded from environment variables (or a .env file) so sweeps and CI runs can
be tuned without touching scenario files.
"""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Defines application settings.
    `model_config` is used to specify that settings should be loaded from a .env file.
    """

    # Project identity
    PROJECT_NAME: str = "s-mate"

    # Application environment: "dev" (console logs) or anything else (JSON logs)
    APP_ENV: str = "dev"

    # Log level for the application
    LOG_LEVEL: str = "INFO"

    # Seed sources, in order of precedence: --seed, scenario file, SMATE_SEED
    SMATE_SEED: int | None = None
    DEFAULT_SEED: int = 0

    # Default extension field GF(2^8): x^8 + x^4 + x^3 + x + 1, generator 0x03
    # (0x02 has order 51 under this polynomial)
    GF_REDUCTION_POLY: int = 0x11B
    GF_GENERATOR: int = 0x03

    # Round closes this many base delays after the round's last send
    ROUND_DEADLINE_FACTOR: float = 3.0

    # Verification sweeps fan out over worker threads
    VERIFY_MAX_CONCURRENCY: int = 8

    # Scenario defaults
    DEFAULT_SENDER_ID: int = 1
    DEFAULT_PAYLOAD_SIZE: int = 16

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", extra="ignore"
    )

    def resolve_seed(self, *candidates: int | None) -> int:
        """Return the first explicit seed, falling back to SMATE_SEED then default."""
        for candidate in candidates:
            if candidate is not None:
                return candidate
        if self.SMATE_SEED is not None:
            return self.SMATE_SEED
        return self.DEFAULT_SEED

    def reload(self) -> None:
        """
        Reload settings from .env file in place.

        Updates all field values from a fresh Settings instance,
        allowing configuration changes to take effect without restart.
        """
        new_settings = Settings()

        for field_name in type(self).model_fields:
            setattr(self, field_name, getattr(new_settings, field_name))


settings = Settings()


def reload_settings() -> None:
    """
    Reload the global settings instance from .env file.

    Call this after modifying the .env file (or the environment in tests)
    to pick up changes without restarting the process.
    """
    settings.reload()
