"""
Ingress encoding and egress detection/recovery for all protection schemes.

Every encoded slot is a linear combination of the plain payloads of its own
round, so recovery is a small linear system per round: one equation per
surviving encoded slot, one unknown per missing plain payload.
"""

from collections.abc import Mapping, Sequence
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.core.config import settings
from app.core.log import logger

from .errors import CodecUsageError
from .framing import Packet, PayloadKind
from .schedule import Schedule


class RecoveryScenario(str, Enum):
    """
    Failure pattern of one round.

    WORKING_AND_PROTECTION covers one working plus one protection failure
    (and larger mixes under t ≥ 3); MULTIPLE_WORKING covers two or more
    working failures with every protection slot alive.
    """

    NO_FAILURE = "no_failure"
    PROTECTION_ONLY = "protection_only"
    SINGLE_WORKING = "single_working"
    WORKING_AND_PROTECTION = "working_and_protection"
    MULTIPLE_WORKING = "multiple_working"
    EXCEEDS_BUDGET = "exceeds_budget"


class RoundBuffer(BaseModel):
    """Egress-side collection of one round. Single owner, mutated in place."""

    session: int = Field(ge=0)
    round: int = Field(ge=0)
    k: int = Field(ge=1)
    received: dict[int, Packet] = Field(default_factory=dict)
    failed: set[int] = Field(default_factory=set)
    deadline_reached: bool = False


class RecoveryReport(BaseModel):
    """Outcome of one round at the egress."""

    model_config = ConfigDict(frozen=True)

    session: int
    round: int
    failed_paths: list[int]
    recovered: dict[int, bytes]
    lost_ordinals: list[int]
    unrecoverable: bool
    scenario: RecoveryScenario


class SessionOutput(BaseModel):
    """Reassembled stream of one cycle."""

    payloads: list[bytes | None]
    lost_ordinals: list[int]
    recovered_count: int

    @property
    def loss_count(self) -> int:
        return len(self.lost_ordinals)


def _as_symbols(payload: bytes) -> np.ndarray:
    return np.frombuffer(payload, dtype=np.uint8).copy()


def encode_round(
    schedule: Schedule,
    round_: int,
    plain_payloads: Mapping[int, bytes],
    *,
    session: int | None = None,
    sender_id: int | None = None,
) -> list[Packet]:
    """
    Build the k packets of a round, in path order.

    Plain slots carry their payload verbatim; encoded slots carry
    Σ coefficient · payload over the round's plain slots.
    """
    if not 0 <= round_ < schedule.m:
        raise CodecUsageError(f"round {round_} outside 0..{schedule.m - 1}")
    expected = set(schedule.ordinals(round_))
    supplied = set(plain_payloads)
    if supplied != expected:
        raise CodecUsageError(
            f"round {round_} needs ordinals {sorted(expected)}, "
            f"got {sorted(supplied)}"
        )
    lengths = {len(payload) for payload in plain_payloads.values()}
    if len(lengths) > 1:
        raise CodecUsageError(f"payload lengths differ in round {round_}: {lengths}")

    session = schedule.session if session is None else session
    sender_id = settings.DEFAULT_SENDER_ID if sender_id is None else sender_id
    field = schedule.field
    plain_paths = schedule.plain_paths(round_)
    symbols = {
        path: _as_symbols(plain_payloads[schedule.slot(path, round_).data_ordinal])
        for path in plain_paths
    }

    packets: list[Packet] = []
    for path in range(schedule.k):
        slot = schedule.slot(path, round_)
        if slot.is_encoded:
            weights = schedule.coefficients[(path, round_)]
            combined = field.combine(
                [weights[p] for p in plain_paths], [symbols[p] for p in plain_paths]
            )
            kind, payload = PayloadKind.ENCODED, combined.tobytes()
        else:
            kind, payload = PayloadKind.PLAIN, plain_payloads[slot.data_ordinal]
        packets.append(
            Packet(
                sender_id=sender_id,
                path_index=path,
                session=session,
                round=round_,
                kind=kind,
                payload=payload,
            )
        )
    return packets


def new_round_buffer(schedule: Schedule, round_: int, session: int = 0) -> RoundBuffer:
    return RoundBuffer(session=session, round=round_, k=schedule.k)


def ingest(buffer: RoundBuffer, path_index: int, packet: Packet | None) -> RoundBuffer:
    """
    Record what arrived on a path.

    `None` stands for a frame that failed decoding. Integrity failures,
    duplicates and packets claiming another path mark the path failed.
    """
    if buffer.deadline_reached:
        raise CodecUsageError(f"round {buffer.round} is already closed")
    if not 0 <= path_index < buffer.k:
        raise CodecUsageError(f"path {path_index} outside 0..{buffer.k - 1}")

    if packet is None:
        _mark_failed(buffer, path_index, "integrity")
        return buffer
    if packet.round != buffer.round or packet.session != buffer.session:
        raise CodecUsageError(
            f"packet for session {packet.session} round {packet.round} "
            f"delivered to buffer {buffer.session}/{buffer.round}"
        )
    if path_index in buffer.failed:
        return buffer
    if packet.path_index != path_index:
        _mark_failed(buffer, path_index, "misrouted")
    elif path_index in buffer.received:
        _mark_failed(buffer, path_index, "duplicate")
    else:
        buffer.received[path_index] = packet
    return buffer


def _mark_failed(buffer: RoundBuffer, path_index: int, reason: str) -> None:
    buffer.received.pop(path_index, None)
    buffer.failed.add(path_index)
    logger.debug(
        "Path marked failed",
        session=buffer.session,
        round=buffer.round,
        path=path_index,
        reason=reason,
    )


def close_round(buffer: RoundBuffer) -> RoundBuffer:
    """Deadline reached: every path that delivered nothing is failed."""
    for path in range(buffer.k):
        if path not in buffer.received:
            buffer.failed.add(path)
    buffer.deadline_reached = True
    return buffer


def _classify(
    failed: set[int], failed_plain: list[int], surviving_encoded: list[int]
) -> RecoveryScenario:
    if not failed:
        return RecoveryScenario.NO_FAILURE
    if len(failed_plain) > len(surviving_encoded):
        return RecoveryScenario.EXCEEDS_BUDGET
    if not failed_plain:
        return RecoveryScenario.PROTECTION_ONLY
    if len(failed) > len(failed_plain):
        return RecoveryScenario.WORKING_AND_PROTECTION
    if len(failed_plain) == 1:
        return RecoveryScenario.SINGLE_WORKING
    return RecoveryScenario.MULTIPLE_WORKING


def recover_round(schedule: Schedule, buffer: RoundBuffer) -> RecoveryReport:
    """
    Classify the round's failure pattern and rebuild missing plain payloads.

    One missing payload is the encoded payload minus the survivors, divided
    by its coefficient (plain XOR for all-ones rows). Two or more are solved
    jointly by elimination over the field. Outcomes are reported, never
    raised.
    """
    if not buffer.deadline_reached:
        raise CodecUsageError(f"round {buffer.round} has not been closed")

    round_ = buffer.round
    failed = set(buffer.failed)
    # a packet whose kind contradicts the schedule is as good as missing
    for path, packet in buffer.received.items():
        expected = (
            PayloadKind.ENCODED
            if schedule.slot(path, round_).is_encoded
            else PayloadKind.PLAIN
        )
        if packet.kind is not expected:
            failed.add(path)

    plain_paths = schedule.plain_paths(round_)
    failed_plain = [p for p in plain_paths if p in failed]
    surviving_plain = [p for p in plain_paths if p not in failed]
    surviving_encoded = [p for p in schedule.encoded_paths(round_) if p not in failed]
    scenario = _classify(failed, failed_plain, surviving_encoded)

    def ordinal_of(path: int) -> int:
        return schedule.slot(path, round_).data_ordinal

    recovered: dict[int, bytes] = {}
    unrecoverable = scenario is RecoveryScenario.EXCEEDS_BUDGET
    if failed_plain and not unrecoverable:
        solution = _solve(
            schedule, buffer, failed_plain, surviving_plain, surviving_encoded
        )
        if solution is None:
            unrecoverable = True
        else:
            for path, symbols in zip(failed_plain, solution, strict=True):
                recovered[ordinal_of(path)] = symbols.tobytes()

    lost = sorted(ordinal_of(p) for p in failed_plain) if unrecoverable else []
    if unrecoverable:
        logger.debug(
            "Round unrecoverable",
            session=buffer.session,
            round=round_,
            failed=sorted(failed),
        )
    return RecoveryReport(
        session=buffer.session,
        round=round_,
        failed_paths=sorted(failed),
        recovered=recovered,
        lost_ordinals=lost,
        unrecoverable=unrecoverable,
        scenario=scenario,
    )


def _solve(
    schedule: Schedule,
    buffer: RoundBuffer,
    unknown: list[int],
    surviving_plain: list[int],
    surviving_encoded: list[int],
) -> list[np.ndarray] | None:
    field = schedule.field
    round_ = buffer.round
    known = {p: _as_symbols(buffer.received[p].payload) for p in surviving_plain}

    matrix: list[list[int]] = []
    rhs: list[np.ndarray] = []
    for path in surviving_encoded:
        weights = schedule.coefficients[(path, round_)]
        residual = _as_symbols(buffer.received[path].payload)
        if any(len(symbols) != len(residual) for symbols in known.values()):
            return None
        for plain_path, symbols in known.items():
            residual ^= field.scale(weights[plain_path], symbols)
        matrix.append([weights[p] for p in unknown])
        rhs.append(residual)

    if len(unknown) == 1:
        # single erasure: divide by the first usable coefficient
        for row, residual in zip(matrix, rhs, strict=True):
            if row[0]:
                return [field.scale(field.inv(row[0]), residual)]
        return None
    return field.solve(matrix, rhs)


def received_plain(schedule: Schedule, buffer: RoundBuffer) -> dict[int, bytes]:
    """Plain payloads that arrived intact, keyed by data ordinal."""
    stream: dict[int, bytes] = {}
    for path, packet in buffer.received.items():
        slot = schedule.slot(path, buffer.round)
        if path in buffer.failed or slot.is_encoded:
            continue
        if packet.kind is PayloadKind.PLAIN:
            stream[slot.data_ordinal] = packet.payload
    return stream


def decode_session(
    schedule: Schedule,
    reports: Sequence[RecoveryReport],
    plain_stream: Mapping[int, bytes],
) -> SessionOutput:
    """Emit payloads in data-ordinal order, substituting recovered ones."""
    rounds = sorted(report.round for report in reports)
    if rounds != list(range(schedule.m)):
        raise CodecUsageError(
            f"expected one report per round 0..{schedule.m - 1}, got rounds {rounds}"
        )

    recovered: dict[int, bytes] = {}
    for report in reports:
        recovered.update(report.recovered)

    payloads: list[bytes | None] = []
    lost: list[int] = []
    recovered_count = 0
    for ordinal in range(schedule.payloads_per_cycle):
        if ordinal in plain_stream:
            payloads.append(plain_stream[ordinal])
        elif ordinal in recovered:
            payloads.append(recovered[ordinal])
            recovered_count += 1
        else:
            payloads.append(None)
            lost.append(ordinal)
    return SessionOutput(
        payloads=payloads, lost_ordinals=lost, recovered_count=recovered_count
    )
