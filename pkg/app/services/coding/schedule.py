"""
Coding schedules: which path carries plain or encoded data in each round.

Three generators build explicit k×m slot matrices:

- single_protection: one encoded slot per round on a rotating diagonal,
  XOR of the round's plain payloads.
- dual_protection: two fixed protection paths per session carrying an
  all-ones row and an α-power row.
- priority_schedule: t encoded slots per round placed from a per-path
  budget p_i, graded rows when t ≥ 2.

Plain slots carry data ordinals assigned column by column, so the ordinal
order is the round order and every cycle uses ordinals 0 .. (k-t)·m - 1.
"""

from enum import Enum
from functools import cached_property

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.constants import CLI

from .errors import (
    FieldTooSmallError,
    InvalidPlanError,
    SchemeInfeasibleError,
)
from .gf import BINARY_FIELD, FieldSpec, default_field


class SchemeKind(str, Enum):
    """Protection scheme families."""

    SINGLE = "single"
    DUAL = "dual"
    PRIORITY = "priority"


class SlotType(str, Enum):
    PLAIN = "plain"
    ENCODED = "encoded"


class EncodingScheme(str, Enum):
    """How an encoded slot combines the round's plain payloads."""

    XOR_ALL = "xor_all"
    VANDERMONDE_ROW = "vandermonde_row"
    PRIORITY_XOR = "priority_xor"


class Slot(BaseModel):
    """One cell of the schedule matrix."""

    model_config = ConfigDict(frozen=True)

    type: SlotType
    data_ordinal: int | None = Field(default=None, ge=0)
    scheme: EncodingScheme | None = None
    row: int = Field(default=0, ge=0)

    @classmethod
    def plain(cls, ordinal: int) -> "Slot":
        return cls(type=SlotType.PLAIN, data_ordinal=ordinal)

    @classmethod
    def encoded(cls, scheme: EncodingScheme, row: int = 0) -> "Slot":
        return cls(type=SlotType.ENCODED, scheme=scheme, row=row)

    @property
    def is_encoded(self) -> bool:
        return self.type is SlotType.ENCODED


class Schedule(BaseModel):
    """
    A k×m slot matrix plus the coefficients of every encoded slot.

    `coefficients[(path, round)]` maps each plain path of that round to the
    field coefficient its payload is multiplied by.
    """

    model_config = ConfigDict(frozen=True)

    scheme: SchemeKind
    k: int = Field(ge=2)
    m: int = Field(ge=1)
    t: int = Field(ge=1)
    field: FieldSpec
    matrix: tuple[tuple[Slot, ...], ...]
    coefficients: dict[tuple[int, int], dict[int, int]]
    protection_paths: tuple[int, ...] = ()
    session: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_columns(self) -> "Schedule":
        if len(self.matrix) != self.k or any(len(r) != self.m for r in self.matrix):
            raise SchemeInfeasibleError("matrix shape does not match k×m")
        for round_ in range(self.m):
            encoded = sum(self.matrix[p][round_].is_encoded for p in range(self.k))
            if encoded != self.t:
                raise SchemeInfeasibleError(
                    f"round {round_} has {encoded} encoded slots, expected {self.t}",
                    parameter="t",
                )
        return self

    def slot(self, path: int, round_: int) -> Slot:
        return self.matrix[path][round_]

    def encoded_paths(self, round_: int) -> list[int]:
        return [p for p in range(self.k) if self.matrix[p][round_].is_encoded]

    def plain_paths(self, round_: int) -> list[int]:
        return [p for p in range(self.k) if not self.matrix[p][round_].is_encoded]

    def ordinals(self, round_: int) -> list[int]:
        """Data ordinals carried in a round, in path order."""
        return [self.matrix[p][round_].data_ordinal for p in self.plain_paths(round_)]

    @cached_property
    def ordinal_index(self) -> dict[int, tuple[int, int]]:
        """data ordinal → (path, round)."""
        index: dict[int, tuple[int, int]] = {}
        for path, row in enumerate(self.matrix):
            for round_, slot in enumerate(row):
                if slot.data_ordinal is not None:
                    index[slot.data_ordinal] = (path, round_)
        return index

    @property
    def payloads_per_cycle(self) -> int:
        return (self.k - self.t) * self.m

    @property
    def capacity(self) -> int:
        return self.k - self.t


class PriorityPlan(BaseModel):
    """Per-path data and protection slot counts for one cycle."""

    model_config = ConfigDict(frozen=True)

    d: tuple[int, ...]
    p: tuple[int, ...]
    m: int = Field(ge=1)

    @model_validator(mode="after")
    def _check_plan(self) -> "PriorityPlan":
        if len(self.d) != len(self.p):
            raise InvalidPlanError(
                f"d has {len(self.d)} entries but p has {len(self.p)}", parameter="p"
            )
        for index, (data, protection) in enumerate(zip(self.d, self.p, strict=True)):
            if protection < 0 or data < 0:
                raise InvalidPlanError(
                    f"path {index}: slot counts must be non-negative", parameter="p"
                )
            if protection > self.m:
                raise InvalidPlanError(
                    f"path {index}: p={protection} exceeds m={self.m}", parameter="p"
                )
            if data + protection != self.m:
                raise InvalidPlanError(
                    f"path {index}: d+p={data + protection} but m={self.m}",
                    parameter="d",
                )
        return self

    @property
    def k(self) -> int:
        return len(self.p)


def _assemble(
    scheme: SchemeKind,
    k: int,
    m: int,
    t: int,
    field: FieldSpec,
    encoded_by_round: list[list[int]],
    encoding: EncodingScheme,
    protection_paths: tuple[int, ...] = (),
    session: int = 0,
) -> Schedule:
    """
    Fill plain ordinals column by column and derive coefficients.

    `encoded_by_round[r]` lists the encoded paths of round r in row order;
    row r of a round multiplies its j-th plain payload by α^{r·j}.
    """
    grid: list[list[Slot | None]] = [[None] * m for _ in range(k)]
    coefficients: dict[tuple[int, int], dict[int, int]] = {}
    ordinal = 0
    for round_ in range(m):
        encoded = encoded_by_round[round_]
        plain = [p for p in range(k) if p not in encoded]
        for path in plain:
            grid[path][round_] = Slot.plain(ordinal)
            ordinal += 1
        for row, path in enumerate(encoded):
            grid[path][round_] = Slot.encoded(encoding, row)
            weights = field.vandermonde_row(row, len(plain))
            coefficients[(path, round_)] = dict(zip(plain, weights, strict=True))

    return Schedule(
        scheme=scheme,
        k=k,
        m=m,
        t=t,
        field=field,
        matrix=tuple(tuple(row) for row in grid),
        coefficients=coefficients,
        protection_paths=protection_paths,
        session=session,
    )


def single_protection(k: int, m: int, field: FieldSpec | None = None) -> Schedule:
    """
    Rotating single protection: round r is encoded on path r mod k.

    For m = k this is the diagonal; for m > k the diagonal wraps so every
    path hosts floor(m/k) or ceil(m/k) encoded slots per cycle.
    """
    if k < 2:
        raise SchemeInfeasibleError(
            f"scheme infeasible: k={k} leaves no working path", parameter="k"
        )
    if m < 1:
        raise SchemeInfeasibleError(f"m={m} must be at least 1", parameter="m")
    encoded_by_round = [[round_ % k] for round_ in range(m)]
    return _assemble(
        SchemeKind.SINGLE,
        k,
        m,
        1,
        field or BINARY_FIELD,
        encoded_by_round,
        EncodingScheme.XOR_ALL,
    )


def rotating_protection_pair(n: int, session: int) -> tuple[int, int]:
    """Protection pair for a session when pairs rotate between sessions."""
    return ((n - 2 + 2 * session) % n, (n - 1 + 2 * session) % n)


def dual_protection(
    n: int,
    m: int,
    protection_paths: tuple[int, int] | None = None,
    field: FieldSpec | None = None,
    session: int = 0,
) -> Schedule:
    """
    Two dedicated protection paths for every round of the session.

    The first protection path carries the all-ones row, the second the row
    (1, α, α², ..., α^{n-3}) over the working paths in index order.
    """
    field = field or default_field()
    if n < 3:
        raise SchemeInfeasibleError(
            f"scheme infeasible: n={n} leaves capacity n-2 < 1", parameter="k"
        )
    if field.order <= n - 2:
        raise FieldTooSmallError(
            f"field too small: q={field.order} must exceed n-2={n - 2}",
            parameter="k",
        )
    if m < 1:
        raise SchemeInfeasibleError(f"m={m} must be at least 1", parameter="m")
    pair = protection_paths if protection_paths is not None else (n - 2, n - 1)
    if len(pair) != 2 or pair[0] == pair[1] or not all(0 <= p < n for p in pair):
        raise SchemeInfeasibleError(
            f"protection paths {pair} must be two distinct indices below {n}",
            parameter="protection_paths",
        )
    encoded_by_round = [list(pair) for _ in range(m)]
    return _assemble(
        SchemeKind.DUAL,
        n,
        m,
        2,
        field,
        encoded_by_round,
        EncodingScheme.VANDERMONDE_ROW,
        protection_paths=tuple(pair),
        session=session,
    )


def priority_schedule(
    plan: PriorityPlan, t: int, field: FieldSpec | None = None
) -> Schedule:
    """
    Place t encoded slots per round from the per-path budgets p_i.

    Rounds are filled in order; each round the t paths with the largest
    remaining budget (lowest index on ties) take the encoded slots.
    """
    field = field or default_field()
    k, m = plan.k, plan.m
    if t < 1 or t >= k:
        raise SchemeInfeasibleError(
            f"scheme infeasible: t={t} must satisfy 1 <= t < k={k}", parameter="t"
        )
    if sum(plan.p) != t * m:
        raise InvalidPlanError(
            f"infeasible plan: sum(p)={sum(plan.p)} but t*m={t * m}", parameter="p"
        )
    if t >= 2 and field.order <= k - t:
        raise FieldTooSmallError(
            f"field too small: q={field.order} must exceed k-t={k - t}",
            parameter="t",
        )

    remaining = list(plan.p)
    encoded_by_round: list[list[int]] = []
    for round_ in range(m):
        ranked = sorted(range(k), key=lambda i: (-remaining[i], i))
        chosen = [i for i in ranked[:t] if remaining[i] > 0]
        if len(chosen) != t:
            raise InvalidPlanError(
                f"infeasible plan: round {round_} cannot host {t} encoded slots",
                parameter="p",
            )
        for path in chosen:
            remaining[path] -= 1
        encoded_by_round.append(sorted(chosen))

    if any(remaining):
        raise InvalidPlanError("infeasible plan: budget left after last round")

    return _assemble(
        SchemeKind.PRIORITY,
        k,
        m,
        t,
        field,
        encoded_by_round,
        EncodingScheme.PRIORITY_XOR,
    )


def capacity(schedule: Schedule) -> int:
    """Plain payloads per round, k - t."""
    return schedule.capacity


def render_grid(schedule: Schedule) -> str:
    """One line per path: `P<ordinal>` for plain cells, `E` for encoded."""
    headers = [f"r{round_}" for round_ in range(schedule.m)]
    rows = [
        [
            CLI.ENCODED_CELL
            if slot.is_encoded
            else f"{CLI.PLAIN_CELL_PREFIX}{slot.data_ordinal}"
            for slot in row
        ]
        for row in schedule.matrix
    ]
    labels = [f"L{path}" for path in range(schedule.k)]
    label_width = max(len("path"), *(len(label) for label in labels))
    cell_width = max(len(cell) for cell in headers + [c for r in rows for c in r])

    def line(label: str, cells: list[str]) -> str:
        parts = [label.ljust(label_width), *(c.ljust(cell_width) for c in cells)]
        return " ".join(parts).rstrip()

    lines = [line("path", headers)]
    lines += [line(label, row) for label, row in zip(labels, rows, strict=True)]
    return "\n".join(lines) + "\n"
