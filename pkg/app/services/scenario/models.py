"""
Scenario and report models.

A Scenario bundles everything one simulation or verification needs: the
scheme and its parameters, path models, adversary, balancer settings and
the seed. MetricsReport is what `simulate` emits.
"""

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from app.core.config import settings
from app.core.constants import Wire
from app.services.coding.gf import FieldKind, field_for
from app.services.coding.schedule import (
    PriorityPlan,
    Schedule,
    SchemeKind,
    dual_protection,
    priority_schedule,
    rotating_protection_pair,
    single_protection,
)
from app.services.simnet.errors import ScenarioValidationError
from app.services.simnet.models import Adversary, PathCounters, PathModel


def unwrap_validation_error(error: ValidationError) -> ValueError:
    """The domain error a pydantic validator raised, or the error itself."""
    for detail in error.errors():
        cause = detail.get("ctx", {}).get("error")
        if isinstance(cause, ValidationError):
            return unwrap_validation_error(cause)
        if isinstance(cause, ValueError):
            return cause
    return error


class BalancerConfig(BaseModel):
    """Load balancing inside a simulation run."""

    model_config = ConfigDict(frozen=True)

    enabled: bool = False
    step_size: float = Field(default=0.05, gt=0, description="Gradient step γ")
    offered_load: float = Field(
        default=0.0, ge=0, description="Flow traffic, packets/s, split by rates"
    )
    probe_step: float = Field(
        default=0.01, gt=0, description="Rate offset of the second probe"
    )
    new_flows: int = Field(
        default=0, ge=0, description="Flows admitted per round, pinned at admission"
    )
    flow_rounds: int = Field(
        default=4, ge=1, description="Rounds each admitted flow keeps sending"
    )


class Scenario(BaseModel):
    """One validated scenario."""

    model_config = ConfigDict(frozen=True)

    name: str = "scenario"
    scheme: SchemeKind
    k: int = Field(description="Path count (n for the dual scheme)")
    m: int = Field(description="Rounds per cycle")
    cycles: int = Field(default=1, ge=1)
    payload_size: int = Field(
        default_factory=lambda: settings.DEFAULT_PAYLOAD_SIZE,
        ge=1,
        le=Wire.MAX_PAYLOAD,
    )
    field: FieldKind | None = Field(
        default=None, description="Defaults to binary for single, ext256 otherwise"
    )
    protection_paths: tuple[int, int] | None = None
    rotate_protection: bool = False
    t: int | None = None
    d: tuple[int, ...] | None = None
    p: tuple[int, ...] | None = None
    round_interval: float = Field(default=1.0, gt=0)
    round_deadline: float | None = Field(default=None, gt=0)
    sender_id: int = Field(
        default_factory=lambda: settings.DEFAULT_SENDER_ID,
        ge=0,
        le=Wire.MAX_SENDER_ID,
    )
    path_models: tuple[PathModel, ...] = ()
    adversary: Adversary = Field(default_factory=Adversary)
    balancer: BalancerConfig = Field(default_factory=BalancerConfig)
    seed: int | None = Field(default=None, ge=0, lt=1 << 64)

    @model_validator(mode="after")
    def _check_consistency(self) -> "Scenario":
        self.validate_runnable()
        return self

    def validate_runnable(self) -> None:
        """
        Cross-field checks.

        Raises:
            ScheduleError: the scheme cannot be built with these parameters
            ScenarioValidationError: paths, adversary or options disagree
        """
        if self.k > Wire.MAX_PATH_INDEX + 1:
            raise ScenarioValidationError(
                f"k={self.k} exceeds the {Wire.MAX_PATH_INDEX + 1} paths an 8-bit "
                "path index can address",
                parameter="k",
            )
        if self.m > Wire.MAX_ROUND + 1:
            raise ScenarioValidationError(
                f"m={self.m} exceeds the {Wire.MAX_ROUND + 1} rounds a 16-bit "
                "round field can carry",
                parameter="m",
            )
        if self.scheme is not SchemeKind.DUAL:
            if self.protection_paths is not None:
                raise ScenarioValidationError(
                    "protection_paths only applies to the dual scheme",
                    parameter="protection_paths",
                )
            if self.rotate_protection:
                raise ScenarioValidationError(
                    "rotate_protection only applies to the dual scheme",
                    parameter="rotate_protection",
                )
        elif self.rotate_protection and self.protection_paths is not None:
            raise ScenarioValidationError(
                "rotate_protection replaces explicit protection_paths",
                parameter="rotate_protection",
            )
        if self.scheme is not SchemeKind.PRIORITY and (
            self.t is not None or self.p is not None or self.d is not None
        ):
            raise ScenarioValidationError(
                "t, d and p only apply to the priority scheme", parameter="t"
            )

        self.build_schedule(0)

        if self.path_models and len(self.path_models) != self.k:
            raise ScenarioValidationError(
                f"{len(self.path_models)} path models for k={self.k} paths",
                parameter="paths",
            )
        out_of_range = [path for path in self.adversary.paths if path >= self.k]
        if out_of_range:
            raise ScenarioValidationError(
                f"adversary path(s) {out_of_range} outside 0..{self.k - 1}",
                parameter="adversary.paths",
            )

    @property
    def field_kind(self) -> FieldKind:
        if self.field is not None:
            return self.field
        if self.scheme is SchemeKind.SINGLE:
            return FieldKind.BINARY
        return FieldKind.EXT256

    def plan(self) -> PriorityPlan:
        if self.t is None:
            raise ScenarioValidationError("priority scheme needs t", parameter="t")
        if self.p is None:
            raise ScenarioValidationError("priority scheme needs p", parameter="p")
        if len(self.p) != self.k:
            raise ScenarioValidationError(
                f"p has {len(self.p)} entries for k={self.k} paths", parameter="p"
            )
        d = self.d if self.d is not None else tuple(self.m - p for p in self.p)
        try:
            return PriorityPlan(d=d, p=self.p, m=self.m)
        except ValidationError as e:
            raise unwrap_validation_error(e) from None

    def build_schedule(self, cycle: int = 0) -> Schedule:
        """Schedule used for one cycle; the session number is the cycle index."""
        field = field_for(self.field_kind)
        match self.scheme:
            case SchemeKind.SINGLE:
                schedule = single_protection(self.k, self.m, field)
            case SchemeKind.DUAL:
                pair = self.protection_paths
                if self.rotate_protection and self.k >= 3:
                    pair = rotating_protection_pair(self.k, cycle)
                schedule = dual_protection(self.k, self.m, pair, field)
            case SchemeKind.PRIORITY:
                schedule = priority_schedule(self.plan(), self.t or 0, field)
        return schedule.model_copy(update={"session": cycle % (Wire.MAX_SESSION + 1)})

    def resolved_paths(self) -> tuple[PathModel, ...]:
        """Explicit path models, or k default paths."""
        return self.path_models or tuple(PathModel() for _ in range(self.k))

    def capacity_bound(self) -> int:
        return self.build_schedule(0).capacity


class MetricsReport(BaseModel):
    """
    Result of one simulation.

    Field order is the JSON key order. `runtime_seconds` is shown in the
    table only so that reports of identical runs are byte-identical.
    """

    scenario: str
    scheme: SchemeKind
    k: int
    m: int
    t: int
    cycles: int
    seed: int
    rounds: int
    goodput: list[int] = Field(description="Plain payloads delivered per round")
    recovery_counts: dict[str, int] = Field(
        description="Rounds per failure pattern class"
    )
    unrecoverable_rounds: int
    recovered_payloads: int
    lost_payloads: int
    capacity_bound: int = Field(description="k - t")
    effective_capacity: float = Field(description="Mean goodput per round")
    convergence_gap: float | None = None
    final_rates: list[float] | None = None
    flows: int | None = Field(default=None, description="Flows admitted, if any")
    split_flows: int | None = Field(
        default=None, description="Flows seen on more than one path"
    )
    reordered_flows: int | None = Field(
        default=None, description="Flows the egress saw out of sequence"
    )
    path_counters: list[PathCounters]
    eavesdrop_secure: bool | None = None
    runtime_seconds: float = Field(default=0.0, exclude=True)

    @model_validator(mode="after")
    def _check_capacity(self) -> "MetricsReport":
        if self.effective_capacity > self.capacity_bound:
            raise ScenarioValidationError(
                f"effective capacity {self.effective_capacity} exceeds "
                f"k - t = {self.capacity_bound}"
            )
        return self

