"""
Scenario domain - scenario files, metrics reports and self-checks.

This domain provides:
- The line-oriented scenario file format with line-numbered errors
- Scenario and MetricsReport models
- Report building with table and JSON rendering
- Exhaustive failure-pattern verification per scheme
"""

from .errors import ScenarioError
from .loader import load_scenario, parse_scenario
from .metrics import build_report, report_json, report_tables
from .models import BalancerConfig, MetricsReport, Scenario, unwrap_validation_error
from .verification import (
    CheckResult,
    VerificationReport,
    sweep_case,
    verify_scenario,
)

__all__ = [
    "ScenarioError",
    # Models
    "BalancerConfig",
    "MetricsReport",
    "Scenario",
    "unwrap_validation_error",
    # Loading
    "load_scenario",
    "parse_scenario",
    # Reports
    "build_report",
    "report_json",
    "report_tables",
    # Verification
    "CheckResult",
    "VerificationReport",
    "sweep_case",
    "verify_scenario",
]
