"""
Flow-level path assignment.

Traffic is split at flow granularity: every packet of a 5-tuple follows one
path, so the egress never re-sequences. Flows are hashed with 64-bit
FNV-1a over the 13 key bytes in field order.
"""

import struct

from pydantic import BaseModel, ConfigDict, Field

from app.services.coding.framing import fnv1a64

from .errors import BalancerUsageError

_FLOW_KEY_FORMAT = "!IIHHB"
_HASH_SPACE = float(1 << 64)


class FlowKey(BaseModel):
    """IP 5-tuple."""

    model_config = ConfigDict(frozen=True)

    src_addr: int = Field(ge=0, le=0xFFFFFFFF)
    dst_addr: int = Field(ge=0, le=0xFFFFFFFF)
    src_port: int = Field(ge=0, le=0xFFFF)
    dst_port: int = Field(ge=0, le=0xFFFF)
    protocol: int = Field(ge=0, le=0xFF)

    def to_bytes(self) -> bytes:
        return struct.pack(
            _FLOW_KEY_FORMAT,
            self.src_addr,
            self.dst_addr,
            self.src_port,
            self.dst_port,
            self.protocol,
        )

    def digest(self) -> int:
        return fnv1a64(self.to_bytes())


def assign_flow(key: FlowKey, working_paths: int) -> int:
    """Path index for a flow: FNV-1a of the key modulo the path count."""
    if working_paths < 1:
        raise BalancerUsageError(f"working_paths={working_paths} must be >= 1")
    return key.digest() % working_paths


def assign_weighted(key: FlowKey, rates: list[float]) -> int:
    """
    Path index drawn from the traffic split by the flow's hash.

    The hash is mapped to [0, 1) and located in the cumulative rates, so a
    path receives new flows in proportion to its rate.
    """
    if not rates:
        raise BalancerUsageError("rates must not be empty")
    point = key.digest() / _HASH_SPACE
    cumulative = 0.0
    for index, rate in enumerate(rates):
        cumulative += rate
        if point < cumulative:
            return index
    # rounding left the point past the last boundary
    return max(i for i, rate in enumerate(rates) if rate > 0) if any(rates) else 0


class FlowTable:
    """
    Pins every flow to the path it was first assigned.

    Rebalancing changes the split seen by new flows only; a flow already in
    the table keeps its path for the rest of the session.
    """

    def __init__(self, paths: int) -> None:
        if paths < 1:
            raise BalancerUsageError(f"paths={paths} must be >= 1")
        self.paths = paths
        self._assignments: dict[FlowKey, int] = {}

    def path_for(self, key: FlowKey, rates: list[float] | None = None) -> int:
        if key not in self._assignments:
            if rates is None:
                self._assignments[key] = assign_flow(key, self.paths)
            else:
                if len(rates) != self.paths:
                    raise BalancerUsageError(
                        f"expected {self.paths} rates, got {len(rates)}"
                    )
                self._assignments[key] = assign_weighted(key, rates)
        return self._assignments[key]

    def flows_on(self, path: int) -> list[FlowKey]:
        return [key for key, assigned in self._assignments.items() if assigned == path]

    def __len__(self) -> int:
        return len(self._assignments)

    def __contains__(self, key: object) -> bool:
        return key in self._assignments
