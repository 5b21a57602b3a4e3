"""
Coding domain exceptions.

Everything derives from ValueError so pydantic validators surface these
errors unchanged inside a ValidationError.
"""


class CodingError(ValueError):
    """Base class for protection-coding errors."""


class FieldMismatchError(CodingError):
    """Operands belong to different fields."""


class FieldDomainError(CodingError):
    """Operation undefined for the operand (e.g. inverse of zero)."""


class FieldSpecError(CodingError):
    """Field parameters do not define a field with a primitive generator."""


class FramingError(CodingError):
    """Base class for wire format errors."""


class FrameFormatError(FramingError):
    """Bytes are not a frame: too short, bad magic/version, bad length."""


class IntegrityError(FramingError):
    """Frame checksum mismatch; the path is treated as attacked."""


class FrameEncodingError(FramingError):
    """Packet cannot be represented on the wire."""


class KeyUsageError(CodingError):
    """Invalid key material for the keystream stub."""


class ScheduleError(CodingError):
    """
    Base class for schedule construction errors.

    `parameter` names the scheme parameter at fault (k, m, t, p,
    protection_paths) so callers can point at the offending input.
    """

    def __init__(self, message: str, parameter: str | None = None) -> None:
        super().__init__(message)
        self.parameter = parameter


class SchemeInfeasibleError(ScheduleError):
    """No working path would remain, or the layout cannot be built."""


class FieldTooSmallError(ScheduleError):
    """The field has too few elements for distinct coefficients."""


class InvalidPlanError(ScheduleError):
    """Priority plan violates d_i + p_i = m or the per-round budget."""


class CodecUsageError(CodingError):
    """Caller supplied payloads or packets that do not match the schedule."""
