"""Closed-form hardware cost and performance arithmetic.

Per-PE register-bit formulas for the fast-variant processing elements,
throughput roofs over the instantiated multiplier count, and the three
frequency-normalized reporting metrics (GOPS, GOPS per multiplier, and
operations per multiplier per clock cycle).  Frequencies are always inputs
taken from recorded hardware results, never predicted.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError, ShapeError
from .qmatrix import ceil_log2
from .tiler import LayerShape

#: register-bit variants accepted by :func:`pe_register_bits`
REGISTER_VARIANTS = ("fip", "fip_extra_regs", "ffip")


@dataclass(frozen=True)
class DeviceProfile:
    """Multiplier budget and clock of one target device."""

    dsp_count: int
    multipliers_per_dsp: int
    frequency_hz: float

    def __post_init__(self):
        if self.dsp_count < 0 or self.multipliers_per_dsp <= 0:
            raise ConfigError("DSP counts must be nonnegative/positive")
        if self.frequency_hz <= 0:
            raise ConfigError("frequency must be positive")


@dataclass(frozen=True)
class CostReport:
    """The three reporting metrics plus the inputs they derive from."""

    gops: float
    multipliers: int
    frequency_hz: float
    gops_per_multiplier: float
    ops_per_multiplier_per_cycle: float


def pe_register_bits(variant: str, w: int, d: int, x: int) -> int:
    """Register bits per processing element.

    ``fip`` is the minimal fast PE; ``fip_extra_regs`` is the fast PE with
    the extra pipeline balancing registers needed to match the short
    critical path; ``ffip`` achieves that path without them.
    """
    if w < 1 or x < 2:
        raise ConfigError("w must be >= 1 and x >= 2")
    if d not in (1, 2):
        raise ConfigError(f"d must be 1 or 2, got {d}")
    lg = ceil_log2(x)
    if variant == "fip":
        return 6 * w + lg + 1
    if variant == "fip_extra_regs":
        return 8 * w + 2 * d + lg + 1
    if variant == "ffip":
        return 6 * w + 2 * d + lg + 3
    raise ConfigError(f"unknown register variant {variant!r}; "
                      f"expected one of {REGISTER_VARIANTS}")


def throughput_roof(variant: str, multipliers: int, frequency_hz: float) -> float:
    """Peak op/s with every instantiated multiplier busy every cycle.

    Baseline MACs contribute one multiply plus one add per cycle; the fast
    variants recover two multiply-equivalents plus two adds per multiplier.
    """
    if multipliers < 0 or frequency_hz <= 0:
        raise ConfigError("multipliers must be >= 0 and frequency positive")
    if variant == "baseline":
        return 2.0 * multipliers * frequency_hz
    if variant in ("fip", "ffip"):
        return 4.0 * multipliers * frequency_hz
    raise ConfigError(f"unknown variant {variant!r}")


def multipliers_of(profile: DeviceProfile) -> int:
    """Instantiated hard multipliers of a device."""
    return profile.dsp_count * profile.multipliers_per_dsp


def metrics(ops_per_inference: float, inferences_per_s: float,
            multipliers: int, frequency_hz: float) -> CostReport:
    """The three mutually consistent reporting metrics.

    GOPS = inferences/s * ops/inference / 1e9; per-multiplier and
    per-multiplier-per-cycle follow by exact division.
    """
    if ops_per_inference < 0 or inferences_per_s < 0:
        raise ConfigError("ops and rates must be nonnegative")
    if multipliers <= 0 or frequency_hz <= 0:
        raise ConfigError("multipliers and frequency must be positive")
    ops_per_s = ops_per_inference * inferences_per_s
    gops = ops_per_s / 1e9
    return CostReport(
        gops=gops,
        multipliers=multipliers,
        frequency_hz=frequency_hz,
        gops_per_multiplier=gops / multipliers,
        ops_per_multiplier_per_cycle=ops_per_s / (multipliers * frequency_hz),
    )


def metrics_from_gops(gops: float, multipliers: int,
                      frequency_hz: float) -> CostReport:
    """Metrics when the recorded headline number is already op/s."""
    return metrics(gops * 1e9, 1.0, multipliers, frequency_hz)


def model_ops(layers, exact: bool = False) -> int:
    """Total GEMM-decomposable operations of one inference.

    Each layer counts 2*M*N*K under the convention that additions equal
    multiplications; with ``exact=True`` the addition term is M*N*(K-1).
    Convolutions use their GEMM-equivalent M = OH*OW, N = Cout,
    K = KH*KW*Cin; fully connected layers may be given as (m, n, k) tuples.
    """
    total = 0
    for layer in layers:
        if isinstance(layer, LayerShape):
            m, n, k = layer.gemm_mnk()
        else:
            m, n, k = (int(v) for v in layer)
            if m <= 0 or n <= 0 or k <= 0:
                raise ShapeError(f"GEMM dims must be positive, got {(m, n, k)}")
        total += m * n * k + m * n * (k - 1 if exact else k)
    return total
