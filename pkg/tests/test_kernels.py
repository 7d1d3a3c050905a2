"""Backend parity: the jitted and pure-numpy kernels are bit-identical."""

import numpy as np
import pytest

from ffip import kernels
from ffip.quantization import QuantSpec
from ffip.systolic import MxuConfig, register_bounds, skew_depths

needs_numba = pytest.mark.skipif(kernels.numba_impl is None,
                                 reason="numba backend unavailable")

BACKENDS = [kernels.numpy_impl] + (
    [kernels.numba_impl] if kernels.numba_impl is not None else [])


def rand_pair(rng, m, k, n, w=8):
    lo, hi = -(1 << (w - 1)), 1 << (w - 1)
    a = rng.integers(lo, hi, (m, k)).astype(np.int64)
    b = rng.integers(lo, hi, (k, n)).astype(np.int64)
    return a, b


def y_of(b):
    y = b.copy()
    y[:, 1:] = b[:, 1:] - b[:, :-1]
    return y


@needs_numba
class TestParity:
    def test_gemm_and_correction_terms(self):
        rng = np.random.default_rng(61)
        for _ in range(10):
            m, k, n = (int(v) for v in rng.integers(1, 12, 3))
            k = 2 * k
            a, b = rand_pair(rng, m, k, n)
            for fn, args in (("gemm_baseline", (a, b)), ("alpha", (a,)),
                             ("beta", (b,)), ("fip_terms", (a, b)),
                             ("ffip_terms", (a, y_of(b)))):
                got_np = getattr(kernels.numpy_impl, fn)(*args)
                got_nb = getattr(kernels.numba_impl, fn)(*args)
                for lhs, rhs in zip(got_np, got_nb):
                    assert np.array_equal(np.asarray(lhs), np.asarray(rhs)), fn

    def test_conv2d_direct(self):
        rng = np.random.default_rng(62)
        inp = rng.integers(-50, 50, (3, 9, 9)).astype(np.int64)
        wt = rng.integers(-50, 50, (4, 3, 3, 3)).astype(np.int64)
        for stride in (1, 2):
            assert np.array_equal(
                kernels.numpy_impl.conv2d_direct(inp, wt, stride),
                kernels.numba_impl.conv2d_direct(inp, wt, stride))

    @pytest.mark.parametrize("variant", [0, 1, 2])
    def test_simulate_tile(self, variant):
        rng = np.random.default_rng(63 + variant)
        x, y = 8, 8
        name = {0: "baseline", 1: "fip", 2: "ffip"}[variant]
        conf = MxuConfig(x, y, name, QuantSpec(w=8))
        a = rng.integers(-128, 128, (17, x)).astype(np.int64)
        b = rng.integers(-128, 128, (x, y)).astype(np.int64)
        wt = y_of(b) if variant == 2 else b
        dep = skew_depths(x, name)
        bounds = register_bounds(conf)
        args = (variant, a, wt, dep, bounds, 64)
        res_np = kernels.numpy_impl.simulate_tile(*args)
        res_nb = kernels.numba_impl.simulate_tile(*args)
        assert res_np[7] == res_nb[7] == 0  # both succeed
        for lhs, rhs in zip(res_np, res_nb):
            assert np.array_equal(np.asarray(lhs), np.asarray(rhs))

    def test_simulate_tile_overflow_agreement(self):
        # both backends must detect the violation (class may differ when
        # several registers overflow in the same cycle)
        conf = MxuConfig(4, 4, "ffip",
                         QuantSpec(w=4, a_signed=True, b_signed=False, d=1))
        a = np.full((2, 4), 7, dtype=np.int64)
        b = np.full((4, 4), 15, dtype=np.int64)
        args = (2, a, y_of(b), skew_depths(4, "ffip"),
                register_bounds(conf), 32)
        assert kernels.numpy_impl.simulate_tile(*args)[7] != 0
        assert kernels.numba_impl.simulate_tile(*args)[7] != 0


def test_backend_name_is_reported():
    assert kernels.backend_name() in ("numba", "numpy")
