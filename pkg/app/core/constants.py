"""
Application constants.

This module contains truly immutable values that never change across runs.
For environment-dependent configuration, see app.core.config.

Wire layout values are part of the frame contract: changing any of them
breaks every captured trace file.
"""


class Wire:
    """Frame layout - big-endian, fixed header followed by payload and CRC-32."""

    MAGIC = b"SM"
    VERSION = 0x01

    # magic(2) version(1) sender(2) path(1) session(2) round(2) kind(1) len(2)
    HEADER_FORMAT = "!2sBHBHHBH"
    HEADER_SIZE = 13
    CHECKSUM_FORMAT = "!I"
    CHECKSUM_SIZE = 4

    MAX_PAYLOAD = 0xFFFF
    MAX_SENDER_ID = 0xFFFF
    MAX_PATH_INDEX = 0xFF
    MAX_SESSION = 0xFFFF
    MAX_ROUND = 0xFFFF

    # Trace files: 4-byte big-endian frame length, then frame bytes
    TRACE_LENGTH_FORMAT = "!I"
    TRACE_LENGTH_SIZE = 4


class Field:
    """Finite field parameters."""

    EXT256_ORDER = 256
    BINARY_ORDER = 2
    EXT256_DEGREE = 8
    MULTIPLICATIVE_ORDER = 255


class Hashing:
    """64-bit FNV-1a parameters shared by the keystream stub and flow hashing."""

    FNV_OFFSET = 0xCBF29CE484222325
    FNV_PRIME = 0x100000001B3
    MASK64 = 0xFFFFFFFFFFFFFFFF


class ExitCode:
    """Process exit codes for the CLI."""

    SUCCESS = 0
    VERIFICATION_FAILED = 1
    USAGE_ERROR = 2


class CLI:
    """CLI-specific constants."""

    FORMAT_TABLE = "table"
    FORMAT_JSON = "json"

    # Schedule grid cells
    ENCODED_CELL = "E"
    PLAIN_CELL_PREFIX = "P"

    RATE_DECIMALS = 4
