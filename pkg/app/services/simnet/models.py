"""
Simulation models.

Path delay models, adversary descriptions, discrete events and the trace a
run produces.
"""

from enum import Enum, IntEnum
import math

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.services.coding.codec import RecoveryReport, RecoveryScenario
from app.services.coding.framing import Packet

from .errors import ScenarioValidationError


class DelayKind(str, Enum):
    """How offered rate turns into queueing delay."""

    LINEAR = "linear"
    MM1 = "mm1"


class PathModel(BaseModel):
    """
    One edge-disjoint path between ingress and egress.

    Rates are in packets per second. A path whose offered rate reaches its
    capacity (or the M/M/1 service rate) has infinite delay and drops.
    """

    model_config = ConfigDict(frozen=True)

    base_delay: float = Field(default=0.01, ge=0, description="Propagation delay, s")
    rate_capacity: float = Field(default=1000.0, gt=0, description="packets/s")
    delay_fn: DelayKind = DelayKind.LINEAR
    slope: float = Field(default=0.0, ge=0, description="Linear s per packet/s")
    service_rate: float | None = Field(default=None, gt=0, description="M/M/1 μ")
    jitter: float = Field(default=0.0, ge=0, description="Uniform jitter bound, s")

    @model_validator(mode="after")
    def _check_delay_fn(self) -> "PathModel":
        if self.delay_fn is DelayKind.MM1 and self.service_rate is None:
            raise ScenarioValidationError(
                "mm1 delay model needs service_rate", parameter="paths.delay_fn"
            )
        return self

    def overloaded(self, rate: float) -> bool:
        if rate >= self.rate_capacity:
            return True
        return self.delay_fn is DelayKind.MM1 and rate >= (self.service_rate or 0.0)

    def queueing_delay(self, rate: float) -> float:
        if self.overloaded(rate):
            return math.inf
        if self.delay_fn is DelayKind.MM1:
            return 1.0 / (self.service_rate - rate)
        return self.slope * rate

    def delay(self, rate: float) -> float:
        """Mean one-way delay at an offered rate, without jitter."""
        return self.base_delay + self.queueing_delay(rate)


class AdversaryMode(str, Enum):
    NONE = "none"
    SINGLE_LINK = "single_link"
    TWO_LINK = "two_link"
    TAMPER = "tamper"
    EAVESDROP = "eavesdrop"


_PATHS_PER_MODE = {
    AdversaryMode.NONE: 0,
    AdversaryMode.SINGLE_LINK: 1,
    AdversaryMode.TWO_LINK: 2,
    AdversaryMode.TAMPER: 1,
    AdversaryMode.EAVESDROP: 1,
}


class Adversary(BaseModel):
    """
    Attack applied to specific paths over a window of global rounds.

    The window is start_round ≤ round < end_round, counted across cycles;
    end_round None means until the end of the run. Tamper flips
    `tamper_bit` of each frame, or a bit drawn from the adversary's stream
    when it is None.
    """

    model_config = ConfigDict(frozen=True)

    mode: AdversaryMode = AdversaryMode.NONE
    paths: tuple[int, ...] = ()
    start_round: int = Field(default=0, ge=0)
    end_round: int | None = Field(default=None, ge=0)
    tamper_bit: int | None = Field(default=None, ge=0)
    seed: int | None = Field(default=None, ge=0, lt=1 << 64)

    @model_validator(mode="after")
    def _check_paths(self) -> "Adversary":
        expected = _PATHS_PER_MODE[self.mode]
        if len(self.paths) != expected:
            raise ScenarioValidationError(
                f"{self.mode.value} adversary needs {expected} path(s), "
                f"got {len(self.paths)}",
                parameter="adversary.paths",
            )
        if len(set(self.paths)) != len(self.paths):
            raise ScenarioValidationError(
                f"adversary paths {self.paths} must be distinct",
                parameter="adversary.paths",
            )
        if any(path < 0 for path in self.paths):
            raise ScenarioValidationError(
                "adversary path indices must be non-negative",
                parameter="adversary.paths",
            )
        if self.end_round is not None and self.end_round <= self.start_round:
            raise ScenarioValidationError(
                f"end_round={self.end_round} must exceed start_round",
                parameter="adversary.end_round",
            )
        return self

    def active(self, global_round: int) -> bool:
        if self.mode is AdversaryMode.NONE:
            return False
        if global_round < self.start_round:
            return False
        return self.end_round is None or global_round < self.end_round

    def targets(self, path: int, global_round: int) -> bool:
        return path in self.paths and self.active(global_round)


class EventKind(IntEnum):
    """Event kinds; the value is the tie-break order at equal times."""

    DELIVER = 0
    DROP = 1
    ROUND_CLOSE = 2
    SEND = 3


class SimEvent(BaseModel):
    """One processed event. `path` is None for round closes."""

    model_config = ConfigDict(frozen=True)

    time: float
    kind: EventKind
    round: int = Field(ge=0, description="Global round index")
    path: int | None = None
    packet: Packet | None = None


class PathCounters(BaseModel):
    """Per-path frame accounting. sent = delivered + dropped + in_flight."""

    path: int
    sent: int = 0
    delivered: int = 0
    late: int = 0
    dropped: int = 0
    in_flight: int = 0


class BalancerSample(BaseModel):
    """Balancer state after the step taken in one round."""

    model_config = ConfigDict(frozen=True)

    round: int
    rates: list[float]
    congestion: list[float]
    gap: float


class FlowPacket(BaseModel):
    """One packet of a pinned flow and when the egress saw it."""

    model_config = ConfigDict(frozen=True)

    flow: int = Field(ge=0, description="Admission order of the flow")
    sequence: int = Field(ge=0, description="Packet number within the flow")
    round: int = Field(ge=0)
    path: int = Field(ge=0)
    sent: float
    arrived: float | None = Field(default=None, description="None when dropped")


class TraceSummary(BaseModel):
    """
    Everything a run produced.

    Frame captures, the payload streams and the event log are kept for
    checks and trace files but excluded from serialization.
    """

    seed: int
    k: int
    m: int
    t: int
    cycles: int
    adversary_mode: AdversaryMode
    reports: list[RecoveryReport] = Field(exclude=True)
    goodput: list[int]
    counters: list[PathCounters]
    trajectory: list[BalancerSample] = Field(default_factory=list)
    transmitted: list[bytes] = Field(default_factory=list, exclude=True)
    delivered: list[bytes | None] = Field(default_factory=list, exclude=True)
    observer_frames: list[bytes] = Field(default_factory=list, exclude=True)
    frames: list[bytes] = Field(default_factory=list, exclude=True)
    events: list[SimEvent] = Field(default_factory=list, exclude=True)
    flow_packets: list[FlowPacket] = Field(default_factory=list, exclude=True)

    @property
    def rounds(self) -> int:
        return self.cycles * self.m

    @property
    def lost_payloads(self) -> int:
        return sum(1 for payload in self.delivered if payload is None)

    @property
    def recovered_payloads(self) -> int:
        return sum(len(report.recovered) for report in self.reports)

    @property
    def flows(self) -> int:
        return len({packet.flow for packet in self.flow_packets})

    def flow_paths(self) -> dict[int, set[int]]:
        """Paths each flow was seen on."""
        paths: dict[int, set[int]] = {}
        for packet in self.flow_packets:
            paths.setdefault(packet.flow, set()).add(packet.path)
        return paths

    def split_flows(self) -> int:
        """Flows whose packets used more than one path."""
        return sum(1 for used in self.flow_paths().values() if len(used) > 1)

    def reordered_flows(self) -> int:
        """Flows whose delivered packets reached the egress out of sequence."""
        last_arrival: dict[int, float] = {}
        reordered: set[int] = set()
        for packet in sorted(self.flow_packets, key=lambda p: (p.flow, p.sequence)):
            if packet.arrived is None:
                continue
            previous = last_arrival.get(packet.flow)
            if previous is not None and packet.arrived < previous:
                reordered.add(packet.flow)
            last_arrival[packet.flow] = packet.arrived
        return len(reordered)

    def scenario_counts(self) -> dict[RecoveryScenario, int]:
        counts = dict.fromkeys(RecoveryScenario, 0)
        for report in self.reports:
            counts[report.scenario] += 1
        return counts
