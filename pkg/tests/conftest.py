"""
Pytest configuration and fixtures for test suite.

Provides common fixtures and configuration for all tests.
"""

from collections.abc import Callable
from pathlib import Path
import sys
from textwrap import dedent

import pytest

# Add project root to Python path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from app.services.coding.gf import BINARY_FIELD, FieldSpec, default_field
from app.services.scenario.loader import parse_scenario
from app.services.scenario.models import Scenario

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    """Directory holding golden outputs and sample scenario files."""
    return FIXTURES


@pytest.fixture
def ext_field() -> FieldSpec:
    """The default GF(2^8) field (0x11B, generator 0x03)."""
    return default_field()


@pytest.fixture
def binary_field() -> FieldSpec:
    return BINARY_FIELD


@pytest.fixture
def write_scenario(tmp_path: Path) -> Callable[..., Path]:
    """Write scenario text to a file under tmp_path and return its path."""

    def _write(text: str, name: str = "scenario.scn") -> Path:
        path = tmp_path / name
        path.write_text(dedent(text).lstrip(), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def make_scenario() -> Callable[[str], Scenario]:
    """Parse inline scenario text."""

    def _make(text: str, name: str = "scenario") -> Scenario:
        return parse_scenario(dedent(text), name=name)

    return _make
