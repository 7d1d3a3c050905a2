"""Fast inner-product GEMM kernels, a clocked systolic-array simulator,
an in-place convolution-to-GEMM tiler, and hardware cost arithmetic."""

from .core import (VARIANTS, compute_alpha, compute_beta, gemm_baseline,
                   gemm_ffip, gemm_fip, inverse_y, pad_even_k,
                   predicted_op_counts, y_transform)
from .cost import (CostReport, DeviceProfile, metrics, metrics_from_gops,
                   model_ops, multipliers_of, pe_register_bits,
                   throughput_roof)
from .errors import (ConfigError, EvenKError, FfipError, InsufficientRunError,
                     PlanError, ShapeError, WidthFitError)
from .qmatrix import OpCounter, QMatrix
from .quantization import (PreparedWeights, QuantSpec, derive_d, fold_beta,
                           prepare_weights, requantize, zero_point_adjust)
from .systolic import (MxuConfig, SimResult, critical_path_stages,
                       measure_latency, register_bounds, run_gemm,
                       simulate_tile, skew_depths,
                       steady_state_ops_per_mult_cycle)
from .tiler import (FeatureStore, LayerShape, TilerPlan, address_stream,
                    conv2d_via_gemm, direct_conv2d, plan_tiler)

__version__ = "0.1.0"

__all__ = [
    "VARIANTS", "QMatrix", "OpCounter", "QuantSpec", "PreparedWeights",
    "MxuConfig", "SimResult", "LayerShape", "TilerPlan", "FeatureStore",
    "CostReport", "DeviceProfile",
    "gemm_baseline", "gemm_fip", "gemm_ffip", "compute_alpha", "compute_beta",
    "y_transform", "inverse_y", "pad_even_k", "predicted_op_counts",
    "derive_d", "fold_beta", "prepare_weights", "requantize",
    "zero_point_adjust",
    "simulate_tile", "run_gemm", "measure_latency", "register_bounds",
    "skew_depths", "critical_path_stages", "steady_state_ops_per_mult_cycle",
    "plan_tiler", "address_stream", "conv2d_via_gemm", "direct_conv2d",
    "pe_register_bits", "throughput_roof", "multipliers_of", "metrics",
    "metrics_from_gops", "model_ops",
    "FfipError", "ShapeError", "EvenKError", "WidthFitError", "PlanError",
    "InsufficientRunError", "ConfigError",
]
