"""
Finite-field arithmetic over F_2 and F_{2^8}.

Fields are galois `FieldArray` classes. Scalar operations on plain ints go
through log/antilog tables read off the galois field; bulk payload coding
and elimination run on galois arrays. Every field is validated once at
construction: the reduction polynomial must be irreducible and the generator
must have multiplicative order 255.

F_2 payload bytes are bit vectors, so they are unpacked to GF(2) bits for
bulk work and packed again afterwards.
"""

from collections.abc import Sequence
from enum import Enum
from functools import lru_cache

import galois
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.config import settings
from app.core.constants import Field as FieldConstants

from .errors import FieldDomainError, FieldMismatchError, FieldSpecError


class FieldKind(str, Enum):
    """Supported fields."""

    BINARY = "binary"
    EXT256 = "ext256"


@lru_cache(maxsize=8)
def galois_field(poly: int, generator: int) -> type[galois.FieldArray]:
    """GF(2^8) modulo `poly` with `generator` as its primitive element."""
    return galois.GF(
        FieldConstants.EXT256_ORDER,
        irreducible_poly=poly,
        primitive_element=generator,
        verify=False,
    )


@lru_cache(maxsize=8)
def is_irreducible(poly: int) -> bool:
    return galois.Poly.Int(poly).is_irreducible()


@lru_cache(maxsize=8)
def generator_order(poly: int, generator: int) -> int | None:
    """Multiplicative order of `generator` modulo an irreducible `poly`."""
    if generator == 0:
        return None
    field = galois.GF(FieldConstants.EXT256_ORDER, irreducible_poly=poly, verify=False)
    return int(field(generator).multiplicative_order())


@lru_cache(maxsize=8)
def _tables(poly: int, generator: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """exp table (doubled to avoid a modulo) and log table for a validated field."""
    period = FieldConstants.MULTIPLICATIVE_ORDER
    field = galois_field(poly, generator)
    nonzero = np.arange(1, FieldConstants.EXT256_ORDER)
    logs = np.asarray(field(nonzero).log(), dtype=np.int64)
    exp = np.zeros(period, dtype=np.int64)
    exp[logs] = nonzero
    log = np.zeros(FieldConstants.EXT256_ORDER, dtype=np.int64)
    log[nonzero] = logs
    return tuple(int(v) for v in np.tile(exp, 2)), tuple(int(v) for v in log)


class FieldSpec(BaseModel):
    """
    A finite field of characteristic 2.

    Ext256 fields carry a degree-8 reduction polynomial and a primitive
    generator α; the binary field has neither (α is 1).
    """

    model_config = ConfigDict(frozen=True)

    kind: FieldKind = FieldKind.EXT256
    reduction_poly: int = Field(default=0x11B, ge=0, le=0x1FF)
    generator: int = Field(default=0x03, ge=0, le=0xFF)

    @model_validator(mode="after")
    def _check_field(self) -> "FieldSpec":
        if self.kind is FieldKind.BINARY:
            return self
        if self.reduction_poly.bit_length() - 1 != FieldConstants.EXT256_DEGREE:
            raise FieldSpecError(
                f"reduction polynomial {self.reduction_poly:#x} is not of degree 8"
            )
        if not is_irreducible(self.reduction_poly):
            raise FieldSpecError(
                f"reduction polynomial {self.reduction_poly:#x} is reducible"
            )
        order = generator_order(self.reduction_poly, self.generator)
        if order != FieldConstants.MULTIPLICATIVE_ORDER:
            raise FieldSpecError(
                f"generator {self.generator:#x} has order {order}, expected 255"
            )
        return self

    @property
    def order(self) -> int:
        """Number of field elements q."""
        if self.kind is FieldKind.BINARY:
            return FieldConstants.BINARY_ORDER
        return FieldConstants.EXT256_ORDER

    @property
    def alpha(self) -> int:
        """Primitive element used for graded coefficient rows."""
        return 1 if self.kind is FieldKind.BINARY else self.generator

    @property
    def gf(self) -> type[galois.FieldArray]:
        """The galois array class for this field."""
        if self.kind is FieldKind.BINARY:
            return galois.GF2
        return galois_field(self.reduction_poly, self.generator)

    def element(self, value: int) -> "FieldElement":
        return FieldElement(value=value, field=self)

    # Scalar arithmetic on raw ints

    def add(self, a: int, b: int) -> int:
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        if self.kind is FieldKind.BINARY:
            return a & b
        if a == 0 or b == 0:
            return 0
        exp, log = _tables(self.reduction_poly, self.generator)
        return exp[log[a] + log[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise FieldDomainError("zero has no multiplicative inverse")
        if self.kind is FieldKind.BINARY:
            return 1
        exp, log = _tables(self.reduction_poly, self.generator)
        return exp[FieldConstants.MULTIPLICATIVE_ORDER - log[a]]

    def power(self, a: int, exponent: int) -> int:
        if exponent < 0:
            raise FieldDomainError("negative exponents are not supported")
        if exponent == 0:
            return 1
        if a == 0:
            return 0
        if self.kind is FieldKind.BINARY:
            return 1
        exp, log = _tables(self.reduction_poly, self.generator)
        return exp[(log[a] * exponent) % FieldConstants.MULTIPLICATIVE_ORDER]

    def vandermonde_row(self, row: int, count: int) -> list[int]:
        """Coefficients α^{row·j} for j = 0 .. count-1; row 0 is all ones."""
        return [self.power(self.alpha, row * j) for j in range(count)]

    # Bulk payload arithmetic

    def _check_coefficients(self, coefficients: Sequence[int]) -> None:
        for coefficient in coefficients:
            if not 0 <= coefficient < self.order:
                raise FieldDomainError(
                    f"{coefficient} is not an element of a field of order {self.order}"
                )

    def to_array(self, symbols: np.ndarray) -> galois.FieldArray:
        """uint8 payload symbols (last axis) as a field array."""
        if self.kind is FieldKind.BINARY:
            return self.gf(np.unpackbits(symbols, axis=-1))
        return self.gf(symbols)

    def from_array(self, array: galois.FieldArray) -> np.ndarray:
        """Inverse of `to_array`."""
        values = array.view(np.ndarray).astype(np.uint8)
        if self.kind is FieldKind.BINARY:
            return np.packbits(values, axis=-1)
        return values

    def scale(self, coefficient: int, data: np.ndarray) -> np.ndarray:
        """Multiply every symbol of `data` by `coefficient`."""
        self._check_coefficients([coefficient])
        return self.from_array(self.gf(coefficient) * self.to_array(data))

    def combine(
        self, coefficients: Sequence[int], payloads: Sequence[np.ndarray]
    ) -> np.ndarray:
        """Linear combination Σ c_i · x_i, symbol-wise."""
        if not payloads:
            raise FieldDomainError("cannot combine an empty set of payloads")
        if len(coefficients) != len(payloads):
            raise FieldDomainError(
                f"{len(coefficients)} coefficients for {len(payloads)} payloads"
            )
        self._check_coefficients(coefficients)
        weights = self.gf([list(coefficients)])
        return self.from_array(weights @ self.to_array(np.stack(payloads)))[0]

    def solve(
        self, matrix: Sequence[Sequence[int]], rhs: Sequence[np.ndarray]
    ) -> list[np.ndarray] | None:
        """
        Solve A·x = b for payload vectors x.

        `matrix` has one row per equation and one column per unknown. Rows
        are taken in order while they raise the rank; extra equations beyond
        the rank are ignored. Returns None when the system does not determine
        every unknown.
        """
        if not matrix:
            return None
        for row in matrix:
            self._check_coefficients(row)
        a = self.gf(np.array(matrix, dtype=np.int64))
        b = self.to_array(np.stack(rhs))
        unknowns = a.shape[1]
        chosen: list[int] = []
        for index in range(a.shape[0]):
            candidate = [*chosen, index]
            if np.linalg.matrix_rank(a[candidate]) == len(candidate):
                chosen = candidate
                if len(chosen) == unknowns:
                    break
        if len(chosen) < unknowns:
            return None
        solution = np.linalg.inv(a[chosen]) @ b[chosen]
        return [self.from_array(row) for row in solution]


class FieldElement(BaseModel):
    """A value tagged with the field it belongs to."""

    model_config = ConfigDict(frozen=True)

    value: int = Field(ge=0)
    field: FieldSpec

    @model_validator(mode="after")
    def _check_width(self) -> "FieldElement":
        if self.value >= self.field.order:
            raise FieldDomainError(
                f"{self.value:#x} does not fit a field of order {self.field.order}"
            )
        return self

    def _same_field(self, other: "FieldElement") -> FieldSpec:
        if other.field != self.field:
            raise FieldMismatchError("operands belong to different fields")
        return self.field

    def __add__(self, other: "FieldElement") -> "FieldElement":
        field = self._same_field(other)
        return field.element(field.add(self.value, other.value))

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        field = self._same_field(other)
        return field.element(field.mul(self.value, other.value))

    def __pow__(self, exponent: int) -> "FieldElement":
        return self.field.element(self.field.power(self.value, exponent))

    def __int__(self) -> int:
        return self.value

    def inverse(self) -> "FieldElement":
        return self.field.element(self.field.inv(self.value))


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    """Characteristic-2 addition (XOR)."""
    return a + b


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def power(a: FieldElement, exponent: int) -> FieldElement:
    return a**exponent


BINARY_FIELD = FieldSpec(kind=FieldKind.BINARY, reduction_poly=0, generator=1)


def default_field() -> FieldSpec:
    """The configured extension field (0x11B / 0x03 unless overridden)."""
    return FieldSpec(
        kind=FieldKind.EXT256,
        reduction_poly=settings.GF_REDUCTION_POLY,
        generator=settings.GF_GENERATOR,
    )


def field_for(kind: FieldKind) -> FieldSpec:
    return BINARY_FIELD if kind is FieldKind.BINARY else default_field()
