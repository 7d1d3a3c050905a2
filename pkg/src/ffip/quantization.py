"""Fixed-point representation policy.

Covers the signedness pairing rule (the pre-adder growth count d), folding
the beta correction into layer biases, layer-wise weight zero-point removal,
and inter-layer requantization.  Activation zero points are fixed at zero;
only a scalar (layer-wise) weight zero point is supported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import core
from .errors import ConfigError, ShapeError
from .qmatrix import QMatrix, int_range


def derive_d(a_signed: bool, b_signed: bool) -> int:
    """Pre-adder growth: 1 bit for matched signedness, 2 for mixed."""
    return 1 if bool(a_signed) == bool(b_signed) else 2


@dataclass(frozen=True)
class QuantSpec:
    """Operand bitwidth, signedness pair, zero points, and rescale factor."""

    w: int = 8
    a_signed: bool = True
    b_signed: bool = True
    d: int | None = None
    a_zero_point: int = 0
    b_zero_point: int = 0
    scale: Fraction = Fraction(1)

    def __post_init__(self):
        if self.d is None:
            object.__setattr__(self, "d", derive_d(self.a_signed, self.b_signed))
        if self.d not in (1, 2):
            raise ConfigError(f"d must be 1 or 2, got {self.d}")
        if self.a_zero_point != 0:
            raise ConfigError("activation zero points are restricted to zero")
        lo, hi = int_range(self.w, self.b_signed)
        if not lo <= self.b_zero_point <= hi:
            raise ConfigError(
                f"weight zero point {self.b_zero_point} not representable "
                f"in {self.w} bits")
        if self.scale <= 0:
            raise ConfigError("scale must be positive")
        object.__setattr__(self, "scale", Fraction(self.scale))


@dataclass
class PreparedWeights:
    """Weight-side precompute bundle for running a full GEMM.

    ``y_tiles[(kt, nt)]`` holds the per-tile column-difference transform of
    the (zero-padded) weights; ``beta`` is the correction vector over the
    whole padded inner dimension; ``folded_bias`` is bias - beta; the scalar
    ``zero_point`` is the layer-wise weight zero point removed via the
    alpha-generator row.
    """

    y_tiles: dict
    b_tiles: dict
    beta: np.ndarray
    folded_bias: np.ndarray
    zero_point: int = 0
    k_tiles: int = 0
    n_tiles: int = 0
    padded_k: int = 0
    padded_n: int = 0


def fold_beta(bias, beta) -> np.ndarray:
    """Fold the beta correction into the biases (elementwise bias - beta)."""
    bias = np.asarray(bias, dtype=np.int64)
    beta = np.asarray(beta, dtype=np.int64)
    if bias.shape != beta.shape:
        raise ShapeError(f"bias shape {bias.shape} != beta shape {beta.shape}")
    return bias - beta


def zero_point_adjust(a: QMatrix, r_value: int) -> np.ndarray:
    """Per-row contribution of a constant weight zero-point matrix.

    Row sums are formed first so a single multiplication per row suffices,
    mirroring the single-multiplier zero-point adjuster.
    """
    row_sums = a.data.sum(axis=1, dtype=np.int64)
    return int(r_value) * row_sums


def requantize(value: int, spec: QuantSpec) -> int:
    """Rescale a wide accumulator value back to w bits.

    Round-to-nearest-even on value*scale, then saturate to the declared
    activation range.
    """
    scaled = Fraction(int(value)) * spec.scale
    num, den = scaled.numerator, scaled.denominator
    q, rem = divmod(num, den)
    # round half to even on the exact rational remainder
    twice = 2 * rem
    if twice > den or (twice == den and q % 2 != 0):
        q += 1
    lo, hi = int_range(spec.w, spec.a_signed)
    return min(max(q, lo), hi)


def prepare_weights(b: QMatrix, x: int, y: int, variant: str = "ffip",
                    bias=None, zero_point: int = 0) -> PreparedWeights:
    """Tile, transform, and fold the weight side of a GEMM offline.

    The inner dimension is zero-padded to a multiple of ``x`` and the output
    dimension to a multiple of ``y``.  Stored tiles are the quantized
    weights; ``zero_point`` is removed from the product at run time.
    """
    k, n = b.shape
    padded_k = -(-k // x) * x
    padded_n = -(-n // y) * y
    bp = np.zeros((padded_k, padded_n), dtype=np.int64)
    bp[:k, :n] = b.data
    k_tiles = padded_k // x
    n_tiles = padded_n // y
    b_tiles = {}
    y_tiles = {}
    for kt in range(k_tiles):
        for nt in range(n_tiles):
            tile = QMatrix.from_array(bp[kt * x:(kt + 1) * x,
                                         nt * y:(nt + 1) * y],
                                      b.width_bits, b.signed)
            b_tiles[(kt, nt)] = tile
            y_tiles[(kt, nt)] = core.y_transform(tile)
    beta = (bp[0::2, :] * bp[1::2, :]).sum(axis=0)
    if bias is None:
        bias = np.zeros(padded_n, dtype=np.int64)
    else:
        bias = np.asarray(bias, dtype=np.int64)
        bias = np.pad(bias, (0, padded_n - bias.shape[0]))
    return PreparedWeights(
        y_tiles=y_tiles, b_tiles=b_tiles, beta=beta,
        folded_bias=fold_beta(bias, beta), zero_point=int(zero_point),
        k_tiles=k_tiles, n_tiles=n_tiles,
        padded_k=padded_k, padded_n=padded_n)
