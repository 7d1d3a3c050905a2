"""Quantization policy: d rule, beta folding, zero points, requantization."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ffip import core
from ffip.errors import ConfigError, ShapeError
from ffip.qmatrix import QMatrix, int_range
from ffip.quantization import (QuantSpec, derive_d, fold_beta, prepare_weights,
                               requantize, zero_point_adjust)


class TestDeriveD:
    def test_both_signed(self):
        assert derive_d(True, True) == 1

    def test_both_unsigned(self):
        assert derive_d(False, False) == 1

    def test_mixed(self):
        assert derive_d(True, False) == 2

    def test_symmetric(self):
        for a in (True, False):
            for b in (True, False):
                assert derive_d(a, b) == derive_d(b, a)


class TestQuantSpec:
    def test_d_auto_derived(self):
        assert QuantSpec(a_signed=True, b_signed=False).d == 2
        assert QuantSpec(a_signed=False, b_signed=False).d == 1

    def test_zero_point_range_checked(self):
        QuantSpec(w=8, b_signed=True, b_zero_point=-128)
        with pytest.raises(ConfigError):
            QuantSpec(w=8, b_signed=True, b_zero_point=200)

    def test_activation_zero_point_rejected(self):
        with pytest.raises(ConfigError):
            QuantSpec(a_zero_point=3)

    def test_scale_positive(self):
        with pytest.raises(ConfigError):
            QuantSpec(scale=Fraction(0))


class TestFoldBeta:
    def test_hand_example(self):
        assert fold_beta([10, 20], [12, 0]).tolist() == [-2, 20]

    def test_zero_beta_identity(self):
        assert fold_beta([1, 2, 3], [0, 0, 0]).tolist() == [1, 2, 3]

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            fold_beta([1, 2], [1])

    def test_end_to_end_folding(self):
        rng = np.random.default_rng(21)
        a = QMatrix.random(rng, 4, 6, 8, True)
        b = QMatrix.random(rng, 6, 5, 8, True)
        bias = rng.integers(-100, 100, 5)
        beta = core.compute_beta(b)
        folded = fold_beta(bias, beta)
        # accelerator path: paired products minus alpha, plus folded bias
        pre = core.ffip_pre_beta(a, core.y_transform(b))
        want = core.gemm_baseline(a, b).data + bias[None, :]
        assert np.array_equal(pre + folded[None, :], want)

    def test_fold_order_irrelevant(self):
        bias = np.array([5, -3])
        beta = np.array([2, 9])
        assert np.array_equal(fold_beta(bias, beta), (bias - beta))
        assert np.array_equal(fold_beta(bias, beta) + beta, bias)


class TestZeroPoint:
    def test_zero_r(self):
        a = QMatrix.from_array([[1, 2], [3, 4]], 8, True)
        assert zero_point_adjust(a, 0).tolist() == [0, 0]

    def test_hand_example(self):
        a = QMatrix.from_array([[1, 2, 3]], 8, True)
        assert zero_point_adjust(a, 2).tolist() == [12]

    def test_completeness(self):
        rng = np.random.default_rng(22)
        a = QMatrix.random(rng, 5, 6, 8, True)
        b = QMatrix.random(rng, 6, 4, 6, True)
        r = 7
        b_plus_r = QMatrix.from_array(b.data + r, 8, True)
        adjusted = (core.gemm_baseline(a, b_plus_r).data
                    - zero_point_adjust(a, r)[:, None])
        assert np.array_equal(adjusted, core.gemm_baseline(a, b).data)


class TestRequantize:
    def test_zero(self):
        assert requantize(0, QuantSpec()) == 0

    def test_ties_to_even(self):
        spec = QuantSpec(w=8, scale=Fraction(1, 2))
        assert requantize(3, spec) == 2   # 1.5 -> 2
        assert requantize(5, spec) == 2   # 2.5 -> 2
        assert requantize(7, spec) == 4   # 3.5 -> 4
        assert requantize(-3, spec) == -2
        assert requantize(-5, spec) == -2

    def test_saturation(self):
        spec = QuantSpec(w=8, scale=Fraction(1))
        assert requantize(10**6, spec) == 127
        assert requantize(-(10**6), spec) == -128
        uspec = QuantSpec(w=8, a_signed=False, b_signed=False)
        assert requantize(-5, uspec) == 0

    def test_against_rational_oracle(self):
        rng = np.random.default_rng(23)
        spec = QuantSpec(w=8, scale=Fraction(3, 700))
        lo, hi = int_range(8, True)
        for value in rng.integers(-(1 << 20), 1 << 20, 10_000):
            got = requantize(int(value), spec)
            exact = Fraction(int(value)) * spec.scale
            floor = exact.numerator // exact.denominator
            frac = exact - floor
            if frac > Fraction(1, 2) or (frac == Fraction(1, 2) and floor % 2):
                floor += 1
            assert got == min(max(floor, lo), hi)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(1, 20), st.integers(0, 2**31 - 1))
def test_prepare_weights_reconstructs(k, n, seed):
    rng = np.random.default_rng(seed)
    b = QMatrix.random(rng, k, n, 8, True)
    prep = prepare_weights(b, x=4, y=4)
    assert prep.padded_k % 4 == 0 and prep.padded_n % 4 == 0
    full = np.zeros((prep.padded_k, prep.padded_n), dtype=np.int64)
    for (kt, nt), tile in prep.b_tiles.items():
        full[kt * 4:(kt + 1) * 4, nt * 4:(nt + 1) * 4] = tile.data
        y_tile = prep.y_tiles[(kt, nt)]
        assert np.array_equal(core.inverse_y(y_tile).data, tile.data)
    assert np.array_equal(full[:k, :n], b.data)
    assert np.array_equal(full[k:, :], 0 * full[k:, :])
    beta_oracle = (full[0::2] * full[1::2]).sum(axis=0)
    assert np.array_equal(prep.beta, beta_oracle)
    assert np.array_equal(prep.folded_bias, -prep.beta)
