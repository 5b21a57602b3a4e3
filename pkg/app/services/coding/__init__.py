"""
Coding domain - field arithmetic, wire format, schedules and recovery.

This domain provides:
- GF(2) / GF(2^8) arithmetic and small-system erasure solving
- Packet framing with CRC-32 integrity and trace files
- Single, dual and priority protection schedules
- Round encoding at the ingress and detection/recovery at the egress
"""

from .codec import (
    RecoveryReport,
    RecoveryScenario,
    RoundBuffer,
    SessionOutput,
    close_round,
    decode_session,
    encode_round,
    ingest,
    new_round_buffer,
    received_plain,
    recover_round,
)
from .framing import (
    Chunker,
    KeyRing,
    Packet,
    PayloadKind,
    chunk,
    decode_wire,
    decrypt,
    encode_wire,
    encrypt,
    read_trace,
    unchunk,
    write_trace,
)
from .gf import BINARY_FIELD, FieldElement, FieldKind, FieldSpec, default_field
from .schedule import (
    PriorityPlan,
    Schedule,
    SchemeKind,
    capacity,
    dual_protection,
    priority_schedule,
    render_grid,
    rotating_protection_pair,
    single_protection,
)

__all__ = [
    # Field
    "BINARY_FIELD",
    "FieldElement",
    "FieldKind",
    "FieldSpec",
    "default_field",
    # Framing
    "Chunker",
    "KeyRing",
    "Packet",
    "PayloadKind",
    "chunk",
    "decode_wire",
    "decrypt",
    "encode_wire",
    "encrypt",
    "read_trace",
    "unchunk",
    "write_trace",
    # Schedules
    "PriorityPlan",
    "Schedule",
    "SchemeKind",
    "capacity",
    "dual_protection",
    "priority_schedule",
    "render_grid",
    "rotating_protection_pair",
    "single_protection",
    # Codec
    "RecoveryReport",
    "RecoveryScenario",
    "RoundBuffer",
    "SessionOutput",
    "close_round",
    "decode_session",
    "encode_round",
    "ingest",
    "new_round_buffer",
    "received_plain",
    "recover_round",
]
