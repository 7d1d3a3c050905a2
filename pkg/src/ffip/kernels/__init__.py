"""Kernel backend selection.

The hot numeric loops (GEMM variants, direct convolution, and the clocked
array simulation) have two interchangeable implementations: a numba-jitted
one and a pure-numpy fallback.  Set ``FFIP_PURE_NUMPY=1`` to force the
fallback; otherwise numba is used when importable.  Both backends are
bit-identical and the test suite checks their parity.
"""

import os

from . import _numpy_impl

_FORCE_NUMPY = os.environ.get("FFIP_PURE_NUMPY", "").strip() in {"1", "true", "yes"}

numba_impl = None
if not _FORCE_NUMPY:
    try:
        from . import _numba_impl as numba_impl  # noqa: F401
    except ImportError:  # pragma: no cover - numba is a declared dependency
        numba_impl = None

numpy_impl = _numpy_impl
impl = numba_impl if numba_impl is not None else numpy_impl

BACKEND = "numba" if impl is numba_impl and numba_impl is not None else "numpy"


def backend_name() -> str:
    return BACKEND


gemm_baseline = impl.gemm_baseline
alpha = impl.alpha
beta = impl.beta
fip_terms = impl.fip_terms
ffip_terms = impl.ffip_terms
conv2d_direct = impl.conv2d_direct
simulate_tile = impl.simulate_tile
