"""Tests for the wire format, keystream stub, chunking and trace files."""

from pathlib import Path
import struct

import numpy as np
from pydantic import ValidationError
import pytest

from app.core.constants import Wire
from app.services.coding.errors import (
    FrameEncodingError,
    FrameFormatError,
    IntegrityError,
    KeyUsageError,
)
from app.services.coding.framing import (
    Chunker,
    KeyRing,
    Packet,
    PayloadKind,
    chunk,
    decode_wire,
    decrypt,
    encode_wire,
    encrypt,
    fnv1a64,
    read_trace,
    unchunk,
    write_trace,
)


def _crc_table() -> list[int]:
    table = []
    for byte in range(256):
        value = byte
        for _ in range(8):
            value = (value >> 1) ^ 0xEDB88320 if value & 1 else value >> 1
        table.append(value)
    return table


CRC_TABLE = _crc_table()


def oracle_crc32(data: bytes) -> int:
    """Reflected table-driven CRC-32 (polynomial 0x04C11DB7)."""
    crc = 0xFFFFFFFF
    for byte in data:
        crc = (crc >> 8) ^ CRC_TABLE[(crc ^ byte) & 0xFF]
    return crc ^ 0xFFFFFFFF


def _reseal(body: bytes) -> bytes:
    return body + struct.pack("!I", oracle_crc32(body))


@pytest.fixture
def packet() -> Packet:
    return Packet(
        sender_id=0x0102,
        path_index=3,
        session=7,
        round=4,
        kind=PayloadKind.ENCODED,
        payload=b"protected payload",
    )


class TestWireFormat:
    """Test frame encoding and decoding."""

    def test_reference_frame(self) -> None:
        """Test the one-byte plain frame layout byte for byte."""
        frame = encode_wire(
            Packet(
                sender_id=1,
                path_index=0,
                session=0,
                round=0,
                kind=PayloadKind.PLAIN,
                payload=b"\x00",
            )
        )
        # magic, version, sender, path, session, round, kind, payload_len
        header = bytes.fromhex("534d 01 0001 00 0000 0000 00 0001")
        assert frame[:13] == header
        assert frame[13:14] == b"\x00"
        assert len(frame) == 18
        assert frame[14:] == struct.pack("!I", oracle_crc32(frame[:14]))

    def test_round_trip(self, packet: Packet) -> None:
        """Test decode inverts encode."""
        assert decode_wire(encode_wire(packet)) == packet

    @pytest.mark.parametrize("length", [0, 1, 0xFFFE, Wire.MAX_PAYLOAD])
    def test_round_trip_random_headers(self, length: int) -> None:
        """Test decode inverts encode over seeded random headers and payloads."""
        rng = np.random.default_rng(length)
        for _ in range(20):
            packet = Packet(
                sender_id=int(rng.integers(0, Wire.MAX_SENDER_ID + 1)),
                path_index=int(rng.integers(0, Wire.MAX_PATH_INDEX + 1)),
                session=int(rng.integers(0, Wire.MAX_SESSION + 1)),
                round=int(rng.integers(0, Wire.MAX_ROUND + 1)),
                kind=PayloadKind.ENCODED if rng.integers(2) else PayloadKind.PLAIN,
                payload=rng.bytes(length),
            )
            frame = encode_wire(packet)
            assert len(frame) == 17 + length
            assert decode_wire(frame) == packet

    def test_round_trip_random_lengths(self) -> None:
        """Test decode inverts encode for a seeded batch of payload lengths."""
        rng = np.random.default_rng(17)
        for length in rng.integers(0, Wire.MAX_PAYLOAD + 1, size=50):
            packet = Packet(
                sender_id=1,
                path_index=2,
                session=3,
                round=4,
                kind=PayloadKind.PLAIN,
                payload=rng.bytes(int(length)),
            )
            assert decode_wire(encode_wire(packet)) == packet

    def test_empty_payload(self) -> None:
        """Test a frame with no payload is the 17-byte minimum."""
        empty = Packet(
            sender_id=0, path_index=0, session=0, round=0, kind=PayloadKind.PLAIN
        )
        frame = encode_wire(empty)
        assert len(frame) == 17
        assert decode_wire(frame) == empty

    def test_checksum_matches_table_crc(self, packet: Packet) -> None:
        """Test the trailer equals an independent table-driven CRC-32."""
        frame = encode_wire(packet)
        (trailer,) = struct.unpack("!I", frame[-4:])
        assert trailer == oracle_crc32(frame[:-4])

    def test_every_bit_flip_detected(self, packet: Packet) -> None:
        """Test flipping any single bit raises IntegrityError."""
        frame = encode_wire(packet)
        for bit in range(len(frame) * 8):
            corrupted = bytearray(frame)
            corrupted[bit // 8] ^= 1 << (bit % 8)
            with pytest.raises(IntegrityError):
                decode_wire(bytes(corrupted))

    def test_truncated_frame(self, packet: Packet) -> None:
        """Test frames shorter than header plus checksum are rejected."""
        with pytest.raises(FrameFormatError, match="truncated"):
            decode_wire(encode_wire(packet)[:16])

    def test_bad_magic(self, packet: Packet) -> None:
        """Test a checksum-valid frame with the wrong magic is rejected."""
        body = b"XX" + encode_wire(packet)[2:-4]
        with pytest.raises(FrameFormatError, match="magic"):
            decode_wire(_reseal(body))

    def test_bad_version(self, packet: Packet) -> None:
        """Test unsupported versions are rejected."""
        body = bytearray(encode_wire(packet)[:-4])
        body[2] = 0x02
        with pytest.raises(FrameFormatError, match="version"):
            decode_wire(_reseal(bytes(body)))

    def test_length_mismatch(self, packet: Packet) -> None:
        """Test a payload_len field that disagrees with the buffer."""
        body = bytearray(encode_wire(packet)[:-4])
        body[11:13] = struct.pack("!H", len(packet.payload) + 1)
        with pytest.raises(FrameFormatError, match="length"):
            decode_wire(_reseal(bytes(body)))

    def test_unknown_kind(self, packet: Packet) -> None:
        """Test kind bytes other than plain and encoded."""
        body = bytearray(encode_wire(packet)[:-4])
        body[10] = 0x07
        with pytest.raises(FrameFormatError, match="kind"):
            decode_wire(_reseal(bytes(body)))

    def test_oversized_payload(self) -> None:
        """Test payloads beyond 65535 bytes cannot be framed."""
        big = Packet(
            sender_id=0,
            path_index=0,
            session=0,
            round=0,
            kind=PayloadKind.PLAIN,
            payload=bytes(0x10000),
        )
        with pytest.raises(FrameEncodingError):
            encode_wire(big)

    def test_header_field_ranges(self) -> None:
        """Test header fields are range-checked on the model."""
        with pytest.raises(ValidationError):
            Packet(
                sender_id=0, path_index=256, session=0, round=0, kind=PayloadKind.PLAIN
            )
        with pytest.raises(ValidationError):
            Packet(
                sender_id=0,
                path_index=0,
                session=0,
                round=70000,
                kind=PayloadKind.PLAIN,
            )


class TestKeystream:
    """Test the encryption stub and key ring."""

    def test_fnv1a64_vectors(self) -> None:
        """Test the published FNV-1a 64-bit vectors."""
        assert fnv1a64(b"") == 0xCBF29CE484222325
        assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C

    def test_encrypt_round_trip(self) -> None:
        """Test decrypt inverts encrypt and ciphertext differs."""
        message = b"attack at dawn, attack at dusk"
        ciphertext = encrypt(b"key", message, nonce=9)
        assert ciphertext != message
        assert decrypt(b"key", ciphertext, nonce=9) == message

    def test_nonce_changes_ciphertext(self) -> None:
        """Test distinct nonces give distinct keystreams."""
        message = bytes(16)
        assert encrypt(b"key", message, 1) != encrypt(b"key", message, 2)

    def test_empty_key_rejected(self) -> None:
        """Test encryption with an empty key raises KeyUsageError."""
        with pytest.raises(KeyUsageError):
            encrypt(b"", b"data", 0)

    def test_key_ring_derive(self) -> None:
        """Test derived rings are deterministic per seed."""
        ring = KeyRing.derive(4, seed=5)
        assert len(ring) == 4
        assert ring == KeyRing.derive(4, seed=5)
        assert ring != KeyRing.derive(4, seed=6)
        assert len(ring.for_path(2)) == 16

    def test_key_ring_rejects_empty_key(self) -> None:
        """Test a ring with an empty key is invalid."""
        with pytest.raises(ValidationError):
            KeyRing(keys=(b"ok", b""))


class TestChunking:
    """Test message chunking."""

    def test_pads_last_chunk(self) -> None:
        """Test the last piece is padded to the chunk size."""
        pieces = chunk(b"abcdefg", Chunker(chunk_size=3))
        assert pieces == [b"abc", b"def", b"g\x00\x00"]
        assert unchunk(pieces, 7) == b"abcdefg"

    def test_exact_multiple(self) -> None:
        """Test no padding piece is added for exact multiples."""
        assert chunk(b"abcdef", Chunker(chunk_size=3, pad_byte=0xFF)) == [
            b"abc",
            b"def",
        ]

    def test_empty_message(self) -> None:
        """Test an empty message yields no pieces."""
        assert chunk(b"", Chunker(chunk_size=4)) == []


class TestTraceFiles:
    """Test trace file capture."""

    def test_write_and_read(self, tmp_path: Path, packet: Packet) -> None:
        """Test frames survive a trace file unchanged."""
        later = packet.model_copy(update={"round": 5})
        frames = [encode_wire(packet), encode_wire(later)]
        path = tmp_path / "run.trace"
        written = write_trace(frames, path)
        assert written == sum(4 + len(frame) for frame in frames)
        assert read_trace(path) == frames

    def test_truncated_trace(self, tmp_path: Path, packet: Packet) -> None:
        """Test a cut-off trace raises FrameFormatError."""
        path = tmp_path / "cut.trace"
        write_trace([encode_wire(packet)], path)
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(FrameFormatError):
            read_trace(path)
