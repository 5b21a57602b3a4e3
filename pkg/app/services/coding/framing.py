"""
Packet model, bit-exact wire format and trace files.

Frame layout (big-endian): magic "SM", version, sender_id(2), path_index(1),
session(2), round(2), kind(1), payload_len(2), payload, CRC-32(4) over all
preceding bytes. Also hosts the keystream encryption stub and the chunker
that splits messages into equal-size payloads.
"""

from collections.abc import Iterable, Sequence
from enum import IntEnum
from pathlib import Path
import random
import struct
import zlib

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.core.constants import Hashing, Wire

from .errors import (
    FrameEncodingError,
    FrameFormatError,
    IntegrityError,
    KeyUsageError,
)


class PayloadKind(IntEnum):
    """Wire values of the kind byte."""

    PLAIN = 0
    ENCODED = 1


class Packet(BaseModel):
    """One transmission unit on one path in one round."""

    model_config = ConfigDict(frozen=True)

    sender_id: int = Field(ge=0, le=Wire.MAX_SENDER_ID)
    path_index: int = Field(ge=0, le=Wire.MAX_PATH_INDEX)
    session: int = Field(ge=0, le=Wire.MAX_SESSION)
    round: int = Field(ge=0, le=Wire.MAX_ROUND)
    kind: PayloadKind
    payload: bytes = b""


class KeyRing(BaseModel):
    """k symmetric keys shared by ingress and egress, one per path."""

    model_config = ConfigDict(frozen=True)

    keys: tuple[bytes, ...] = Field(min_length=1)

    @field_validator("keys")
    @classmethod
    def _non_empty_keys(cls, keys: tuple[bytes, ...]) -> tuple[bytes, ...]:
        for index, key in enumerate(keys):
            if not key:
                raise KeyUsageError(f"key for path {index} is empty")
        return keys

    @classmethod
    def derive(cls, k: int, seed: int, key_size: int = 16) -> "KeyRing":
        """Deterministic keys for simulation runs."""
        rng = random.Random(seed)
        return cls(keys=tuple(rng.randbytes(key_size) for _ in range(k)))

    def __len__(self) -> int:
        return len(self.keys)

    def for_path(self, path_index: int) -> bytes:
        return self.keys[path_index]


class Chunker(BaseModel):
    """Equal-size chunking of incoming messages."""

    model_config = ConfigDict(frozen=True)

    chunk_size: int = Field(gt=0)
    pad_byte: int = Field(default=0x00, ge=0, le=0xFF)


def encode_wire(packet: Packet) -> bytes:
    """Serialize a packet into a checksummed frame."""
    if len(packet.payload) > Wire.MAX_PAYLOAD:
        raise FrameEncodingError(
            f"payload of {len(packet.payload)} bytes exceeds {Wire.MAX_PAYLOAD}"
        )
    body = (
        struct.pack(
            Wire.HEADER_FORMAT,
            Wire.MAGIC,
            Wire.VERSION,
            packet.sender_id,
            packet.path_index,
            packet.session,
            packet.round,
            int(packet.kind),
            len(packet.payload),
        )
        + packet.payload
    )
    return body + struct.pack(Wire.CHECKSUM_FORMAT, zlib.crc32(body) & 0xFFFFFFFF)


def decode_wire(frame: bytes) -> Packet:
    """
    Parse a frame.

    The checksum is verified before any header field is trusted, so a
    flipped bit anywhere in the frame surfaces as IntegrityError.

    Raises:
        FrameFormatError: too short to hold a frame, bad magic/version,
            or a length field that disagrees with the buffer
        IntegrityError: checksum mismatch
    """
    if len(frame) < Wire.HEADER_SIZE + Wire.CHECKSUM_SIZE:
        raise FrameFormatError(f"frame of {len(frame)} bytes is truncated")

    body, trailer = frame[: -Wire.CHECKSUM_SIZE], frame[-Wire.CHECKSUM_SIZE :]
    (expected,) = struct.unpack(Wire.CHECKSUM_FORMAT, trailer)
    actual = zlib.crc32(body) & 0xFFFFFFFF
    if actual != expected:
        raise IntegrityError(
            f"checksum mismatch: {actual:#010x} != {expected:#010x}"
        )

    magic, version, sender_id, path_index, session, round_, kind, length = (
        struct.unpack(Wire.HEADER_FORMAT, body[: Wire.HEADER_SIZE])
    )
    if magic != Wire.MAGIC:
        raise FrameFormatError(f"bad magic {magic!r}")
    if version != Wire.VERSION:
        raise FrameFormatError(f"unsupported version {version}")
    payload = body[Wire.HEADER_SIZE :]
    if len(payload) != length:
        raise FrameFormatError(
            f"payload length field {length} disagrees with {len(payload)} bytes"
        )
    try:
        payload_kind = PayloadKind(kind)
    except ValueError:
        raise FrameFormatError(f"unknown payload kind {kind}") from None

    return Packet(
        sender_id=sender_id,
        path_index=path_index,
        session=session,
        round=round_,
        kind=payload_kind,
        payload=payload,
    )


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    value = Hashing.FNV_OFFSET
    for byte in data:
        value ^= byte
        value = (value * Hashing.FNV_PRIME) & Hashing.MASK64
    return value


def encrypt(key: bytes, message: bytes, nonce: int) -> bytes:
    """
    Keystream stub: XOR with FNV-1a(key ‖ nonce ‖ counter), 8 bytes per counter.

    Not a cipher. It makes ciphertext differ from plaintext reproducibly;
    decryption is the same call.
    """
    if not key:
        raise KeyUsageError("encryption key must be non-empty")
    nonce_bytes = (nonce & Hashing.MASK64).to_bytes(8, "big")
    stream = bytearray()
    counter = 0
    while len(stream) < len(message):
        block = key + nonce_bytes + counter.to_bytes(8, "big")
        stream += fnv1a64(block).to_bytes(8, "big")
        counter += 1
    return bytes(m ^ s for m, s in zip(message, stream, strict=False))


decrypt = encrypt


def chunk(message: bytes, chunker: Chunker) -> list[bytes]:
    """Split into ceil(len/chunk_size) pieces, zero-padding the last one."""
    size = chunker.chunk_size
    pieces = [message[i : i + size] for i in range(0, len(message), size)]
    if pieces and len(pieces[-1]) < size:
        padding = bytes([chunker.pad_byte]) * (size - len(pieces[-1]))
        pieces[-1] = pieces[-1] + padding
    return pieces


def unchunk(pieces: Iterable[bytes], length: int) -> bytes:
    """Inverse of chunk given the original message length."""
    return b"".join(pieces)[:length]


def write_trace(frames: Sequence[bytes], path: Path) -> int:
    """Write frames as a length-prefixed concatenation; returns bytes written."""
    data = b"".join(
        struct.pack(Wire.TRACE_LENGTH_FORMAT, len(frame)) + frame for frame in frames
    )
    path.write_bytes(data)
    return len(data)


def read_trace(path: Path) -> list[bytes]:
    """Read frames back from a trace file."""
    data = path.read_bytes()
    frames: list[bytes] = []
    offset = 0
    while offset < len(data):
        if offset + Wire.TRACE_LENGTH_SIZE > len(data):
            raise FrameFormatError(f"trace truncated at offset {offset}")
        (length,) = struct.unpack_from(Wire.TRACE_LENGTH_FORMAT, data, offset)
        offset += Wire.TRACE_LENGTH_SIZE
        if offset + length > len(data):
            raise FrameFormatError(f"trace frame at offset {offset} is truncated")
        frames.append(data[offset : offset + length])
        offset += length
    return frames
