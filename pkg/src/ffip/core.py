"""Bit-exact baseline, fast, and free-pipeline fast inner-product GEMM.

The fast inner product trades roughly half of the multiplications in a
matrix product for cheap additions by pairing operands, at the cost of
per-row (alpha) and per-column (beta) self-product corrections.  The
free-pipeline variant computes the same pair products through a row-to-row
recurrence over column-difference-transformed weights, which is what lets
the hardware pipeline the pre-adders for free.

All three variants are exact over integers; the equivalence property is
exercised heavily by the test suite.  Operation counters are instrumented,
with the two final per-element correction subtractions tracked separately
(``OpCounter.output_adjusts``) so the addition tally matches the closed
form in ``predicted_op_counts`` exactly.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import EvenKError, WidthFitError
from .qmatrix import (OpCounter, QMatrix, ceil_log2, check_fits, int_range,
                      product_qmatrix, require_matmul_shapes)

VARIANTS = ("baseline", "fip", "ffip")


def _require_even_k(k: int) -> None:
    if k % 2 != 0:
        raise EvenKError(f"inner dimension must be even, got K={k}")


def gemm_baseline(a: QMatrix, b: QMatrix, counter: OpCounter | None = None) -> QMatrix:
    """Exact integer product via the traditional inner product."""
    require_matmul_shapes(a, b)
    c, mults, adds = kernels.gemm_baseline(a.data, b.data)
    if counter is not None:
        counter.add(mults=mults, adds=adds)
    return product_qmatrix(c, a, b)


def compute_alpha(a: QMatrix, counter: OpCounter | None = None) -> np.ndarray:
    """Per-row sums of adjacent-pair self products."""
    _require_even_k(a.cols)
    al, mults, adds = kernels.alpha(a.data)
    if counter is not None:
        counter.add(mults=mults, adds=adds)
    return al


def compute_beta(b: QMatrix, counter: OpCounter | None = None) -> np.ndarray:
    """Per-column sums of adjacent-pair self products."""
    _require_even_k(b.rows)
    be, mults, adds = kernels.beta(b.data)
    if counter is not None:
        counter.add(mults=mults, adds=adds)
    return be


def _check_fast_intermediates(w: int, a_signed: bool, b_signed: bool,
                              pre_mn: int, pre_mx: int,
                              p_mn: int, p_mx: int) -> None:
    # pre-adder sums fit w+1 bits for matched signedness, w+2 otherwise
    d = 1 if a_signed == b_signed else 2
    signed = a_signed or b_signed
    check_fits([pre_mn, pre_mx], w + d, signed, "pre-adder sum")
    check_fits([p_mn, p_mx], 2 * (w + d), signed, "pair product")


def gemm_fip(a: QMatrix, b: QMatrix, counter: OpCounter | None = None) -> QMatrix:
    """Fast inner-product GEMM; bit-identical to gemm_baseline."""
    require_matmul_shapes(a, b)
    _require_even_k(a.cols)
    s, mults, adds, pre_mn, pre_mx, p_mn, p_mx = kernels.fip_terms(a.data, b.data)
    _check_fast_intermediates(max(a.width_bits, b.width_bits), a.signed,
                              b.signed, pre_mn, pre_mx, p_mn, p_mx)
    al, amul, aadd = kernels.alpha(a.data)
    be, bmul, badd = kernels.beta(b.data)
    c = s - al[:, None] - be[None, :]
    if counter is not None:
        counter.add(mults=mults + amul + bmul, adds=adds + aadd + badd,
                    adjusts=2 * a.rows * b.cols)
    return product_qmatrix(c, a, b)


def y_transform(b: QMatrix) -> QMatrix:
    """Column-difference transform of the weights (first column kept)."""
    y = b.data.copy()
    y[:, 1:] = b.data[:, 1:] - b.data[:, :-1]
    return QMatrix(b.rows, b.cols, b.width_bits + 1, True, y)


def inverse_y(y: QMatrix, width_bits: int | None = None,
              signed: bool = True) -> QMatrix:
    """Column-wise prefix sum; exact inverse of y_transform."""
    b = np.cumsum(y.data, axis=1, dtype=np.int64)
    if width_bits is None:
        width_bits = y.width_bits - 1
    lo, hi = int_range(width_bits, signed)
    if b.size and (b.min() < lo or b.max() > hi):
        # reconstructed weights wider than the pre-transform width
        raise WidthFitError("inverse transform exceeds original weight width")
    return QMatrix(y.rows, y.cols, width_bits, signed, b)


def ffip_pre_beta(a: QMatrix, y: QMatrix, counter: OpCounter | None = None,
                  b_signed: bool | None = None) -> np.ndarray:
    """Free-pipeline paired-product sums minus alpha (beta not yet removed).

    This is the quantity an accelerator produces when beta has been folded
    into the biases.  ``y`` must be the column-difference transform of the
    intended weights; ``b_signed`` is the pre-transform weight signedness
    (defaults to the activation signedness).
    """
    require_matmul_shapes(a, y)
    _require_even_k(a.cols)
    if b_signed is None:
        b_signed = a.signed
    s, mults, adds, g_mn, g_mx, p_mn, p_mx = kernels.ffip_terms(a.data, y.data)
    # g values telescope back to a + b, so they obey the pre-adder width
    _check_fast_intermediates(max(a.width_bits, y.width_bits - 1), a.signed,
                              b_signed, g_mn, g_mx, p_mn, p_mx)
    al, amul, aadd = kernels.alpha(a.data)
    if counter is not None:
        counter.add(mults=mults + amul, adds=adds + aadd,
                    adjusts=a.rows * y.cols)
    return s - al[:, None]


def gemm_ffip(a: QMatrix, y: QMatrix, counter: OpCounter | None = None,
              b_signed: bool | None = None) -> QMatrix:
    """Free-pipeline fast GEMM over y-transformed weights.

    Bit-identical to ``gemm_baseline(a, inverse_y(y))``.
    """
    if b_signed is None:
        b_signed = a.signed
    pre = ffip_pre_beta(a, y, counter, b_signed=b_signed)
    b = inverse_y(y, signed=b_signed, width_bits=y.width_bits - 1)
    be, bmul, badd = kernels.beta(b.data)
    if counter is not None:
        counter.add(mults=bmul, adds=badd, adjusts=a.rows * y.cols)
    c = pre - be[None, :]
    return product_qmatrix(c, a, b)


def predicted_op_counts(variant: str, m: int, n: int, k: int) -> OpCounter:
    """Closed-form operation counts for an M*K by K*N product."""
    if variant == "baseline":
        return OpCounter(multiplications=m * n * k, additions=m * n * (k - 1))
    if variant in ("fip", "ffip"):
        _require_even_k(k)
        mults = (m * n * k + m * k + n * k) // 2
        adds = (3 * m * n * k + m * k + n * k) // 2 - m * n - m - n
        return OpCounter(multiplications=mults, additions=adds,
                         output_adjusts=2 * m * n)
    raise ValueError(f"unknown variant {variant!r}")


def pad_even_k(a: QMatrix, b: QMatrix) -> tuple[QMatrix, QMatrix]:
    """Zero-pad A with a column and B with a row when K is odd."""
    require_matmul_shapes(a, b)
    if a.cols % 2 == 0:
        return a, b
    a_pad = np.pad(a.data, ((0, 0), (0, 1)))
    b_pad = np.pad(b.data, ((0, 1), (0, 0)))
    return (QMatrix(a.rows, a.cols + 1, a.width_bits, a.signed, a_pad),
            QMatrix(b.rows + 1, b.cols, b.width_bits, b.signed, b_pad))
