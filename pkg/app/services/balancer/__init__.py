"""
Balancer domain - flow assignment and marginal-delay load balancing.

This domain provides:
- FNV-1a flow hashing and a flow table that pins flows to paths
- Finite-difference congestion monitoring from delay probes
- Gradient-projection rebalancing on the rate simplex
"""

from .errors import BalancerUsageError
from .flows import FlowKey, FlowTable, assign_flow, assign_weighted
from .load import (
    DelaySample,
    PathLoad,
    balance_step,
    convergence_gap,
    monitor,
    project_simplex,
)

__all__ = [
    "BalancerUsageError",
    # Flows
    "FlowKey",
    "FlowTable",
    "assign_flow",
    "assign_weighted",
    # Load
    "DelaySample",
    "PathLoad",
    "balance_step",
    "convergence_gap",
    "monitor",
    "project_simplex",
]
