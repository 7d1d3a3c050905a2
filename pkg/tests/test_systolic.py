"""Clocked array simulator: equivalence, latency, skew, width safety."""

import numpy as np
import pytest

from ffip import core
from ffip.errors import InsufficientRunError, ShapeError, WidthFitError
from ffip.qmatrix import QMatrix
from ffip.quantization import QuantSpec, prepare_weights
from ffip.systolic import (MxuConfig, critical_path_stages, measure_latency,
                           register_bounds, run_gemm, simulate_tile,
                           skew_depths, steady_state_ops_per_mult_cycle)


def cfg(x=8, y=8, variant="ffip", **quant):
    return MxuConfig(x, y, variant, QuantSpec(**quant))


def weight_for(variant, b):
    return core.y_transform(b) if variant == "ffip" else b


class TestGeometry:
    def test_mac_counts(self):
        assert cfg(8, 8, "baseline").multipliers == 64
        assert cfg(8, 8, "fip").multipliers == 4 * 9
        assert cfg(8, 8, "ffip").multipliers == 4 * 9

    def test_multiple_of_four_required(self):
        with pytest.raises(ValueError):
            MxuConfig(6, 8)
        with pytest.raises(ValueError):
            MxuConfig(8, 0)

    def test_skew_depths(self):
        assert skew_depths(8, "baseline").tolist() == [1, 2, 3, 4, 5, 6, 7, 8]
        assert skew_depths(8, "ffip").tolist() == [1, 1, 2, 2, 3, 3, 4, 4]
        assert skew_depths(8, "fip").tolist() == [1, 1, 2, 2, 3, 3, 4, 4]


class TestSimulateTile:
    def test_baseline_identity(self):
        rng = np.random.default_rng(31)
        b = QMatrix.random(rng, 8, 8, 8, True)
        res = simulate_tile(cfg(variant="baseline"), QMatrix.identity(8), b)
        assert np.array_equal(res.c_tile.data, b.data)

    @pytest.mark.parametrize("variant", ["baseline", "fip", "ffip"])
    def test_matches_core(self, variant):
        rng = np.random.default_rng(32)
        for _ in range(5):
            a = QMatrix.random(rng, 7, 8, 8, True)
            b = QMatrix.random(rng, 8, 8, 8, True)
            res = simulate_tile(cfg(variant=variant), a, weight_for(variant, b))
            assert np.array_equal(res.c_tile.data,
                                  core.gemm_baseline(a, b).data)

    def test_fip_ffip_identical(self):
        rng = np.random.default_rng(33)
        a = QMatrix.random(rng, 6, 8, 8, True)
        b = QMatrix.random(rng, 8, 8, 8, True)
        r1 = simulate_tile(cfg(variant="fip"), a, b)
        r2 = simulate_tile(cfg(variant="ffip"), a, core.y_transform(b))
        assert np.array_equal(r1.c_tile.data, r2.c_tile.data)
        assert r1.first_output_latency == r2.first_output_latency

    def test_skew_removal_breaks_equivalence(self):
        rng = np.random.default_rng(34)
        a = QMatrix.random(rng, 6, 8, 8, True)
        b = QMatrix.random(rng, 8, 8, 8, True)
        res = simulate_tile(cfg(variant="baseline"), a, b, skew=False)
        assert not np.array_equal(res.c_tile.data,
                                  core.gemm_baseline(a, b).data)

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            simulate_tile(cfg(), QMatrix.zeros(2, 4), QMatrix.zeros(8, 8, 9))
        with pytest.raises(ShapeError):
            simulate_tile(cfg(), QMatrix.zeros(2, 8), QMatrix.zeros(4, 8, 9))

    def test_busy_bounded_by_multiplier_economy(self):
        rng = np.random.default_rng(35)
        a = QMatrix.random(rng, 32, 8, 8, True)
        b = QMatrix.random(rng, 8, 8, 8, True)
        for variant in ("baseline", "fip", "ffip"):
            res = simulate_tile(cfg(variant=variant), a,
                                weight_for(variant, b))
            bound = 64 if variant == "baseline" else 8 * 8 // 2 + 8 // 2
            assert res.mac_busy_histogram.max() <= bound


class TestLatency:
    @pytest.mark.parametrize("x", [8, 16, 32, 64])
    def test_delta_is_half_x(self, x):
        base = measure_latency(cfg(x, 8, "baseline"))
        fast = measure_latency(cfg(x, 8, "ffip"))
        assert base - fast == x // 2

    def test_fip_equals_ffip(self):
        for x in (8, 16):
            assert measure_latency(cfg(x, 8, "fip")) == \
                measure_latency(cfg(x, 8, "ffip"))


class TestCriticalPath:
    def test_stage_counts(self):
        assert critical_path_stages("baseline") == {"adders": 1, "multipliers": 1}
        assert critical_path_stages("fip") == {"adders": 2, "multipliers": 1}
        assert critical_path_stages("ffip") == {"adders": 1, "multipliers": 1}


class TestWidthSafety:
    def test_exhaustive_value_pairs_w4(self):
        # every (input value, weight value) combination at w=4 on a 4x4 array
        conf = cfg(4, 4, "ffip", w=4)
        for av in range(-8, 8):
            for bv in range(-8, 8):
                a = QMatrix.from_array(np.full((2, 4), av), 4, True)
                b = QMatrix.from_array(np.full((4, 4), bv), 4, True)
                res = simulate_tile(conf, a, core.y_transform(b))
                assert np.array_equal(res.c_tile.data,
                                      core.gemm_baseline(a, b).data)

    def test_randomized_w4(self):
        rng = np.random.default_rng(36)
        conf = cfg(4, 4, "ffip", w=4)
        for _ in range(100):
            a = QMatrix.random(rng, 4, 4, 4, True)
            b = QMatrix.random(rng, 4, 4, 4, True)
            res = simulate_tile(conf, a, core.y_transform(b))
            assert np.array_equal(res.c_tile.data,
                                  core.gemm_baseline(a, b).data)

    def test_mixed_signedness_needs_d2(self):
        # unsigned weights against signed inputs overflow if d is forced to 1
        a = QMatrix.from_array(np.full((2, 4), 7), 4, True)
        b = QMatrix.from_array(np.full((4, 4), 15), 4, False)
        ok_conf = MxuConfig(4, 4, "ffip",
                            QuantSpec(w=4, a_signed=True, b_signed=False))
        assert ok_conf.quant.d == 2
        res = simulate_tile(ok_conf, a, core.y_transform(b))
        assert np.array_equal(res.c_tile.data, core.gemm_baseline(a, b).data)
        forced = MxuConfig(4, 4, "ffip",
                           QuantSpec(w=4, a_signed=True, b_signed=False, d=1))
        with pytest.raises(WidthFitError):
            simulate_tile(forced, a, core.y_transform(b))

    def test_register_bounds_shape(self):
        bounds = register_bounds(cfg())
        assert bounds.shape == (4, 2)
        assert (bounds[:, 0] < bounds[:, 1]).all()


class TestRunGemm:
    def test_single_tile_degenerate(self):
        rng = np.random.default_rng(37)
        a = QMatrix.random(rng, 5, 8, 8, True)
        b = QMatrix.random(rng, 8, 8, 8, True)
        conf = cfg()
        full, _ = run_gemm(conf, a, b)
        tile = simulate_tile(conf, a, core.y_transform(b))
        assert np.array_equal(full.data, tile.c_tile.data)

    def test_large_multi_tile(self):
        rng = np.random.default_rng(38)
        a = QMatrix.random(rng, 96, 128, 8, True)
        b = QMatrix.random(rng, 128, 96, 8, True)
        conf = cfg(32, 32, "ffip")
        got, agg = run_gemm(conf, a, b)
        assert np.array_equal(got.data, core.gemm_baseline(a, b).data)
        assert agg.rows_processed == 96 * (128 // 32) * (96 // 32)

    def test_partial_tiles_zero_padded(self):
        rng = np.random.default_rng(39)
        a = QMatrix.random(rng, 10, 13, 8, True)
        b = QMatrix.random(rng, 13, 11, 8, True)
        got, _ = run_gemm(cfg(8, 8, "ffip"), a, b)
        assert np.array_equal(got.data, core.gemm_baseline(a, b).data)

    def test_prepared_zero_point(self):
        rng = np.random.default_rng(40)
        a = QMatrix.random(rng, 6, 8, 8, True)
        b = QMatrix.random(rng, 8, 8, 6, True)
        r = 5
        prep = prepare_weights(QMatrix.from_array(b.data + r, 8, True),
                               8, 8, "ffip", zero_point=r)
        got, _ = run_gemm(cfg(8, 8, "ffip"), a,
                          QMatrix.from_array(b.data + r, 8, True),
                          prepared=prep)
        assert np.array_equal(got.data, core.gemm_baseline(a, b).data)


class TestSteadyState:
    def test_roofs(self):
        rng = np.random.default_rng(41)
        for variant, roof in (("baseline", 2.0), ("ffip", 4.0)):
            conf = cfg(64, 64, variant)
            a = QMatrix.random(rng, 4096, 64, 8, True)
            b = QMatrix.random(rng, 64, 64, 8, True)
            res = simulate_tile(conf, a, weight_for(variant, b))
            got = steady_state_ops_per_mult_cycle(res, conf)
            assert abs(got - roof) / roof < 0.05

    def test_short_run_rejected(self):
        rng = np.random.default_rng(42)
        conf = cfg(8, 8, "ffip")
        a = QMatrix.random(rng, 4, 8, 8, True)
        b = QMatrix.random(rng, 8, 8, 8, True)
        res = simulate_tile(conf, a, core.y_transform(b))
        with pytest.raises(InsufficientRunError):
            steady_state_ops_per_mult_cycle(res, conf)

    def test_fill_dominated_below_roof(self):
        rng = np.random.default_rng(43)
        conf = cfg(8, 8, "ffip")
        a = QMatrix.random(rng, 200, 8, 8, True)
        b = QMatrix.random(rng, 8, 8, 8, True)
        res = simulate_tile(conf, a, core.y_transform(b))
        assert steady_state_ops_per_mult_cycle(res, conf) < 4.0
