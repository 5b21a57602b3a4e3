"""
Core functionality tests.

These basic tests ensure settings and logging behave as the commands expect.
"""

from collections.abc import Generator
import logging

import pytest

from app.core import log
from app.core.config import Settings, reload_settings, settings
from app.core.log import setup_logging, suppress_logs


@pytest.fixture
def restore_settings() -> Generator[None]:
    """Reload the global settings after a test changes the environment."""
    yield
    reload_settings()


class TestSettings:
    """Test configuration defaults and seed precedence."""

    def test_defaults(self) -> None:
        """Test the default field and scenario settings."""
        fresh = Settings(_env_file=None)
        assert fresh.GF_REDUCTION_POLY == 0x11B
        assert fresh.GF_GENERATOR == 0x03
        assert fresh.DEFAULT_PAYLOAD_SIZE == 16
        assert fresh.SMATE_SEED is None

    def test_first_explicit_seed_wins(self) -> None:
        """Test --seed beats the scenario seed."""
        fresh = Settings(_env_file=None, SMATE_SEED=5)
        assert fresh.resolve_seed(1, 2) == 1
        assert fresh.resolve_seed(None, 2) == 2

    def test_environment_seed(self) -> None:
        """Test SMATE_SEED applies when no explicit seed is given."""
        assert Settings(_env_file=None, SMATE_SEED=5).resolve_seed(None, None) == 5

    def test_default_seed(self) -> None:
        """Test the fallback seed is zero."""
        assert Settings(_env_file=None).resolve_seed() == 0

    def test_reload_reads_environment(
        self, monkeypatch: pytest.MonkeyPatch, restore_settings: None
    ) -> None:
        """Test reloading picks up a changed environment in place."""
        monkeypatch.setenv("SMATE_SEED", "77")
        reload_settings()
        assert settings.SMATE_SEED == 77
        assert settings.resolve_seed(None) == 77


class TestLogging:
    """Test logging setup."""

    def test_setup_is_idempotent(self) -> None:
        """Test repeated setup keeps a single handler."""
        setup_logging()
        handlers = list(logging.getLogger().handlers)
        setup_logging()
        assert logging.getLogger().handlers == handlers
        assert log._logging_configured

    def test_suppress_logs_restores_level(self) -> None:
        """Test the root level is raised inside the block and restored after."""
        root = logging.getLogger()
        original = root.level
        with suppress_logs(logging.CRITICAL):
            assert root.level == logging.CRITICAL
        assert root.level == original

    def test_suppress_logs_restores_on_error(self) -> None:
        """Test the level is restored when the block raises."""
        root = logging.getLogger()
        original = root.level
        with pytest.raises(RuntimeError), suppress_logs():
            raise RuntimeError("boom")
        assert root.level == original
