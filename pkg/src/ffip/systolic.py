"""Clocked functional simulator of the weight-stationary arrays.

Geometry: array rows correspond to output columns j and hold one stationary
weight column each; the inner (K) dimension maps across the array width with
partial sums accumulating horizontally, one column per cycle.  Inputs enter
through a triangular skew buffer (lane k delayed k cycles for the baseline,
ceil(k/2) for the paired fast variants) and descend one array row per cycle.
The fast variants instantiate X/2 multiplier columns plus one extra
alpha-generator row that the inputs cross in parallel with the first array
row; its output (merged with the zero-point row products) is subtracted from
the array output vector together with the per-column beta terms.

One synchronous register update per cycle; adders and multipliers complete
within the cycle.  Every register is range-checked against its declared
width each cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (InsufficientRunError, ShapeError, WidthFitError)
from .qmatrix import QMatrix, ceil_log2, check_fits, int_range
from .quantization import PreparedWeights, QuantSpec, prepare_weights

VARIANT_CODES = {"baseline": 0, "fip": 1, "ffip": 2}

# registered stages on the longest combinational path of one PE
CRITICAL_PATH = {
    "baseline": {"adders": 1, "multipliers": 1},
    "fip": {"adders": 2, "multipliers": 1},
    "ffip": {"adders": 1, "multipliers": 1},
}


@dataclass(frozen=True)
class MxuConfig:
    """Array geometry in effective MAC units, variant, and quantization."""

    x: int
    y: int
    variant: str = "ffip"
    quant: QuantSpec = field(default_factory=QuantSpec)

    def __post_init__(self):
        if self.variant not in VARIANT_CODES:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.x <= 0 or self.x % 4 or self.y <= 0 or self.y % 4:
            raise ValueError("x and y must be positive multiples of 4")

    @property
    def mac_columns(self) -> int:
        return self.x if self.variant == "baseline" else self.x // 2

    @property
    def mac_rows(self) -> int:
        return self.y if self.variant == "baseline" else self.y + 1

    @property
    def multipliers(self) -> int:
        return self.mac_columns * self.mac_rows


@dataclass
class SimResult:
    """Output tile plus cycle-level measurements."""

    c_tile: QMatrix
    first_output_latency: int
    total_cycles: int
    mac_busy_histogram: np.ndarray
    rows_processed: int


def skew_depths(x: int, variant: str) -> np.ndarray:
    """Shift-register depth per input lane (1-indexed lane k)."""
    k = np.arange(1, x + 1, dtype=np.int64)
    if variant == "baseline":
        return k
    return (k + 1) // 2


def register_bounds(config: MxuConfig) -> np.ndarray:
    """Inclusive [lo, hi] ranges for the four checked register classes.

    Rows: vertical input/g registers, pre-adder sums, products, accumulators.
    The fast-variant accumulator is d bits wider than the nominal
    2w + clog2(X) + 1 so the raw pair-product partial sums (before the
    alpha/beta correction) fit for unsigned and mixed-signedness operands.
    """
    q = config.quant
    w, d = q.w, q.d
    either_signed = q.a_signed or q.b_signed
    if config.variant == "ffip":
        v_rng = int_range(w + d, either_signed)
    else:
        v_rng = int_range(w, q.a_signed)
    s_rng = int_range(w + d, either_signed)
    if config.variant == "baseline":
        p_rng = int_range(2 * w + d - 1, either_signed)
        acc_bits = 2 * w + ceil_log2(config.x) + 1
    else:
        p_rng = int_range(2 * (w + d), either_signed)
        acc_bits = 2 * w + ceil_log2(config.x) + 1 + d
    c_rng = int_range(acc_bits, True)
    return np.array([v_rng, s_rng, p_rng, c_rng], dtype=np.int64)


_STATUS_NAMES = {1: "vertical register", 2: "pre-adder sum",
                 3: "product register", 4: "accumulator register"}


def simulate_tile(config: MxuConfig, a_tile: QMatrix, weight_tile: QMatrix,
                  zero_point: int = 0, skew: bool = True) -> SimResult:
    """Run one stationary weight tile against a stream of input rows.

    ``weight_tile`` holds b values for baseline/fip, or the column-difference
    transform y for ffip.  ``skew=False`` disables the input skew buffers
    (test hook: the result is then deliberately wrong).
    """
    q = config.quant
    if a_tile.cols != config.x:
        raise ShapeError(f"a tile has {a_tile.cols} lanes, array width is {config.x}")
    if weight_tile.shape != (config.x, config.y):
        raise ShapeError(
            f"weight tile {weight_tile.shape} != ({config.x}, {config.y})")
    check_fits(a_tile.data, q.w, q.a_signed, "input value")
    if config.variant == "ffip":
        # stationary y registers carry one extra bit
        check_fits(weight_tile.data, q.w + 1, True, "y weight register")
        b_data = np.cumsum(weight_tile.data, axis=1, dtype=np.int64)
        check_fits(b_data, q.w, q.b_signed, "reconstructed weight")
    else:
        check_fits(weight_tile.data, q.w, q.b_signed, "weight register")
        b_data = weight_tile.data

    dep = skew_depths(config.x, config.variant)
    if not skew:
        dep = np.ones_like(dep)
    r = a_tile.rows
    max_cycles = r + int(dep.max()) + config.y + config.mac_columns + 8
    (raw, alpha_raw, out_count, alpha_count, busy, first_lat, total,
     status, err_cycle) = kernels.simulate_tile(
        VARIANT_CODES[config.variant], a_tile.data, weight_tile.data,
        dep, register_bounds(config), max_cycles)
    if status != 0:
        raise WidthFitError(
            f"{_STATUS_NAMES[int(status)]} overflow at cycle {int(err_cycle)} "
            f"(variant={config.variant}, w={q.w}, d={q.d})")

    ar = int(zero_point) * a_tile.data.sum(axis=1, dtype=np.int64)
    if config.variant == "baseline":
        c = raw - ar[:, None]
    else:
        beta = (b_data[0::2, :] * b_data[1::2, :]).sum(axis=0)
        # the alpha row output already absorbed the A*R row products
        c = raw - (alpha_raw + ar)[:, None] - beta[None, :]
    c_tile = QMatrix(r, config.y, 2 * q.w + ceil_log2(config.x) + 4, True, c)
    return SimResult(c_tile=c_tile, first_output_latency=int(first_lat),
                     total_cycles=int(total),
                     mac_busy_histogram=np.asarray(busy, dtype=np.int64),
                     rows_processed=r)


def measure_latency(config: MxuConfig) -> int:
    """Cycles from the first input row entering to the first output."""
    a = QMatrix.zeros(1, config.x, config.quant.w, config.quant.a_signed)
    wt = QMatrix.zeros(config.x, config.y,
                       config.quant.w + (1 if config.variant == "ffip" else 0),
                       True if config.variant == "ffip" else config.quant.b_signed)
    return simulate_tile(config, a, wt).first_output_latency


def critical_path_stages(variant: str) -> dict:
    """Adder/multiplier stages on the longest register-to-register path."""
    return dict(CRITICAL_PATH[variant])


def run_gemm(config: MxuConfig, a: QMatrix, b: QMatrix,
             prepared: PreparedWeights | None = None,
             trace: list | None = None) -> tuple[QMatrix, SimResult]:
    """Full GEMM through the array, one stationary weight tile at a time.

    Partial tile products accumulate outside the array.  Weight loading is
    modeled at one column vector per cycle and overlaps compute through the
    double buffer, so only the first tile load adds to the aggregate cycle
    count.  With a nonzero prepared zero point r the result is
    A @ B - r * rowsum(A), i.e. the product over zero-point-free weights.
    """
    if a.cols != b.rows:
        raise ShapeError(f"inner dims differ: A is {a.shape}, B is {b.shape}")
    if prepared is None:
        prepared = prepare_weights(b, config.x, config.y, config.variant)
    m = a.rows
    ap = np.zeros((m, prepared.padded_k), dtype=np.int64)
    ap[:, :a.cols] = a.data
    c = np.zeros((m, prepared.padded_n), dtype=np.int64)
    total_cycles = config.y  # first weight tile load, not overlapped
    histogram = []
    first_lat = -1
    rows_processed = 0
    load_cycles = config.y
    for kt in range(prepared.k_tiles):
        a_slice = QMatrix.from_array(ap[:, kt * config.x:(kt + 1) * config.x],
                                     a.width_bits, a.signed)
        for nt in range(prepared.n_tiles):
            tiles = prepared.y_tiles if config.variant == "ffip" else prepared.b_tiles
            res = simulate_tile(config, a_slice, tiles[(kt, nt)],
                                zero_point=prepared.zero_point)
            c[:, nt * config.y:(nt + 1) * config.y] += res.c_tile.data
            total_cycles += res.total_cycles
            total_cycles += max(0, load_cycles - res.total_cycles)
            histogram.append(res.mac_busy_histogram)
            rows_processed += res.rows_processed
            if first_lat < 0:
                first_lat = res.first_output_latency
            if trace is not None:
                trace.append((kt, nt, res))
    out = c[:, :b.cols]
    width = a.width_bits + b.width_bits + ceil_log2(max(b.rows, 1)) + 2
    result = QMatrix(m, b.cols, width, True, out)
    agg = SimResult(c_tile=result, first_output_latency=first_lat,
                    total_cycles=total_cycles,
                    mac_busy_histogram=np.concatenate(histogram),
                    rows_processed=rows_processed)
    return result, agg


def steady_state_ops_per_mult_cycle(result: SimResult, config: MxuConfig) -> float:
    """Effective baseline ops per instantiated multiplier per cycle.

    Each processed input row yields one output row worth 2*X*Y baseline
    operations.  Requires the run to be steady-state dominated: fill/drain
    under 10% of the cycles.
    """
    overhead = result.total_cycles - result.rows_processed
    if overhead < 0 or overhead >= 0.1 * result.total_cycles:
        raise InsufficientRunError(
            f"fill/drain is {overhead}/{result.total_cycles} cycles; "
            "run longer for a steady-state measurement")
    ops = 2 * config.x * config.y * result.rows_processed
    return ops / (config.multipliers * result.total_cycles)
