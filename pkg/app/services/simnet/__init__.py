"""
Simulation domain - discrete-event runs over k edge-disjoint paths.

This domain provides:
- Path delay models (linear and M/M/1) with jitter and overload drop
- Adversaries: link drop on one or two paths, tampering, eavesdropping
- A deterministic event loop driving ingress coding and egress recovery
- Parallel fan-out of independent scenarios
"""

from .errors import ScenarioValidationError, SimulationError, SimulationUsageError
from .models import (
    Adversary,
    AdversaryMode,
    BalancerSample,
    DelayKind,
    EventKind,
    PathCounters,
    PathModel,
    SimEvent,
    TraceSummary,
)
from .simulator import Simulator, eavesdrop_check, round_deadline, run, run_many

__all__ = [
    # Errors
    "ScenarioValidationError",
    "SimulationError",
    "SimulationUsageError",
    # Models
    "Adversary",
    "AdversaryMode",
    "BalancerSample",
    "DelayKind",
    "EventKind",
    "PathCounters",
    "PathModel",
    "SimEvent",
    "TraceSummary",
    # Runs
    "Simulator",
    "eavesdrop_check",
    "round_deadline",
    "run",
    "run_many",
]
