"""Fixed-point matrix container and operation counters.

All arithmetic in this package is carried in int64, which comfortably holds
every intermediate for the supported bitwidths (w <= 16, K < 2**20).  Declared
widths are enforced with explicit range checks, never by wraparound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, WidthFitError


def int_range(width_bits: int, signed: bool) -> tuple[int, int]:
    """Inclusive (lo, hi) range of a fixed-point integer."""
    if signed:
        return -(1 << (width_bits - 1)), (1 << (width_bits - 1)) - 1
    return 0, (1 << width_bits) - 1


def check_fits(values, width_bits: int, signed: bool, what: str = "value") -> None:
    """Raise WidthFitError if any element falls outside the declared range."""
    lo, hi = int_range(width_bits, signed)
    arr = np.asarray(values)
    if arr.size == 0:
        return
    mn, mx = int(arr.min()), int(arr.max())
    if mn < lo or mx > hi:
        raise WidthFitError(
            f"{what} out of {'signed' if signed else 'unsigned'} "
            f"{width_bits}-bit range [{lo}, {hi}]: observed [{mn}, {mx}]"
        )


def ceil_log2(n: int) -> int:
    if n <= 1:
        return 0
    return (n - 1).bit_length()


@dataclass(frozen=True)
class QMatrix:
    """2-D fixed-point integer matrix with declared width and signedness."""

    rows: int
    cols: int
    width_bits: int
    signed: bool
    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.data, dtype=np.int64))
        if arr.ndim != 2 or arr.shape != (self.rows, self.cols):
            raise ShapeError(
                f"data shape {arr.shape} != declared ({self.rows}, {self.cols})"
            )
        check_fits(arr, self.width_bits, self.signed, "QMatrix element")
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_array(cls, arr, width_bits: int, signed: bool) -> "QMatrix":
        arr = np.atleast_2d(np.asarray(arr, dtype=np.int64))
        return cls(arr.shape[0], arr.shape[1], width_bits, signed, arr)

    @classmethod
    def random(cls, rng: np.random.Generator, rows: int, cols: int,
               width_bits: int, signed: bool) -> "QMatrix":
        lo, hi = int_range(width_bits, signed)
        data = rng.integers(lo, hi + 1, size=(rows, cols), dtype=np.int64)
        return cls(rows, cols, width_bits, signed, data)

    @classmethod
    def zeros(cls, rows: int, cols: int, width_bits: int = 8,
              signed: bool = True) -> "QMatrix":
        return cls(rows, cols, width_bits, signed,
                   np.zeros((rows, cols), dtype=np.int64))

    @classmethod
    def identity(cls, n: int, width_bits: int = 8, signed: bool = True) -> "QMatrix":
        return cls(n, n, width_bits, signed, np.eye(n, dtype=np.int64))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def transpose(self) -> "QMatrix":
        return QMatrix(self.cols, self.rows, self.width_bits, self.signed,
                       self.data.T.copy())


def product_qmatrix(data: np.ndarray, a: QMatrix, b: QMatrix) -> QMatrix:
    """Wrap an exact integer product with a width wide enough to hold it."""
    k = max(a.cols, 1)
    width = a.width_bits + b.width_bits + ceil_log2(k) + 1
    return QMatrix(data.shape[0], data.shape[1], width, True, data)


@dataclass
class OpCounter:
    """Instrumented multiplication/addition tallies.

    The final per-element subtractions of the alpha/beta correction terms are
    tracked separately in ``output_adjusts`` so that ``additions`` reconciles
    exactly with the closed-form count for the fast algorithms.
    """

    multiplications: int = 0
    additions: int = 0
    output_adjusts: int = 0

    def add(self, mults: int = 0, adds: int = 0, adjusts: int = 0) -> None:
        if mults < 0 or adds < 0 or adjusts < 0:
            raise ValueError("op counts are monotonically nondecreasing")
        self.multiplications += mults
        self.additions += adds
        self.output_adjusts += adjusts

    def as_tuple(self) -> tuple[int, int]:
        return (self.multiplications, self.additions)


def require_matmul_shapes(a: QMatrix, b: QMatrix) -> None:
    if a.cols != b.rows:
        raise ShapeError(f"inner dims differ: A is {a.shape}, B is {b.shape}")
