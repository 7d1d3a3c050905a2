"""Command-line harness for reproducible experiments.

Subcommands
-----------
verify       equivalence / op-count / latency / width-safety suites
simulate     run the clocked array on generated matrices, dump a trace
tile-check   convolution lowering vs. the direct oracle, address CSV export
cost-report  metric and register tables from recorded device results
bench        jitted backend vs. pure-numpy fallback timing comparison

All subcommands accept ``--config PATH`` (JSON, hierarchical; unknown keys
rejected per section), ``--seed N``, ``--trials N``, ``--out DIR``, and
``--variant {baseline,fip,ffip}``.  Flags override config values.  For a
fixed seed every report and CSV except the bench timings is byte-identical
across runs.  The exit code is 0 iff every executed suite passed.

CSV columns (stable):
  trace.csv           k_tile, n_tile, cycle, busy_multipliers
  addresses.csv       index, address
  cost_report.csv     model, variant, gops, multipliers, frequency_mhz,
                      gops_per_multiplier, ops_per_multiplier_per_cycle,
                      pe_register_bits, roof_gops, roof_attainment
  register_sweep.csv  w, d, fip_bits, fip_extra_regs_bits, ffip_bits
  bench.csv           task, backend, seconds
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import core, cost, kernels, systolic, tiler
from .errors import EvenKError, FfipError, WidthFitError
from .qmatrix import OpCounter, QMatrix
from .quantization import QuantSpec

DEFAULT_CONFIG = {
    "mxu": {"x": 8, "y": 8, "variant": "ffip"},
    "quant": {"w": 8, "a_signed": True, "b_signed": True,
              "b_zero_point": 0, "scale": "1"},
    "verify": {"trials": 200, "m_max": 16, "n_max": 16, "k_max": 32,
               "widths": [8, 16], "pad_odd_k": True},
    "simulate": {"rows": 256, "k": 64, "n": 64},
    "tile_check": {"trials": 20, "dim_max": 16, "kernel_max": 5,
                   "stride_max": 2, "simulator_trials": 3,
                   "golden_layer": {"cin": 8, "h": 8, "w_dim": 8, "cout": 4,
                                    "kh": 3, "kw": 3, "stride": 1,
                                    "padding": 1}},
    "device": {"dsp_count": 1072, "multipliers_per_dsp": 2,
               "frequency_mhz": 388.0},
    "models": [],
    "bench": {"m": 512, "k": 256, "n": 256, "sim_rows": 1024,
              "sim_x": 32, "sim_y": 32, "repeats": 3},
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, val in override.items():
        if key not in base and path in ("mxu", "quant", "verify", "simulate",
                                        "tile_check", "device", "bench"):
            raise SystemExit(f"config error: unknown key {path}.{key}")
        if isinstance(val, dict) and isinstance(base.get(key), dict):
            out[key] = _merge(base[key], val, key)
        else:
            out[key] = val
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        return json.loads(json.dumps(DEFAULT_CONFIG))
    try:
        with open(path) as fh:
            user = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(f"config error: {exc}")
    return _merge(DEFAULT_CONFIG, user)


def build_quant(cfg: dict) -> QuantSpec:
    q = cfg["quant"]
    return QuantSpec(w=int(q["w"]), a_signed=bool(q["a_signed"]),
                     b_signed=bool(q["b_signed"]),
                     b_zero_point=int(q.get("b_zero_point", 0)),
                     scale=Fraction(str(q.get("scale", "1"))))


def build_mxu(cfg: dict, variant: str | None = None) -> systolic.MxuConfig:
    m = cfg["mxu"]
    return systolic.MxuConfig(int(m["x"]), int(m["y"]),
                              variant or m["variant"], build_quant(cfg))


def _rand_q(rng, rows, cols, w, signed) -> QMatrix:
    return QMatrix.random(rng, rows, cols, w, signed)


class SuiteReport:
    """Collects named pass/fail lines and renders a fixed-format table."""

    def __init__(self):
        self.rows = []

    def record(self, name: str, ok: bool, detail: str = ""):
        self.rows.append((name, ok, detail))

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.rows)

    def render(self) -> str:
        width = max((len(n) for n, _, _ in self.rows), default=4)
        lines = [f"{name:<{width}}  {'PASS' if ok else 'FAIL'}"
                 f"{('  ' + detail) if detail else ''}"
                 for name, ok, detail in self.rows]
        lines.append(f"{self.passed and 'ALL SUITES PASSED' or 'FAILURES PRESENT'}")
        return "\n".join(lines) + "\n"


def cmd_verify(cfg: dict, args) -> int:
    rng = np.random.default_rng(args.seed)
    v = cfg["verify"]
    trials = args.trials or int(v["trials"])
    report = SuiteReport()

    ok, checked = True, 0
    for _ in range(trials):
        w = int(rng.choice(v["widths"]))
        m = int(rng.integers(1, v["m_max"] + 1))
        n = int(rng.integers(1, v["n_max"] + 1))
        k = int(rng.integers(1, v["k_max"] + 1))
        a = _rand_q(rng, m, k, w, True)
        b = _rand_q(rng, k, n, w, True)
        if k % 2:
            if not v["pad_odd_k"]:
                ok = False
                report.record("equivalence", False,
                              f"odd K={k} with padding disabled")
                break
            a, b = core.pad_even_k(a, b)
        base = core.gemm_baseline(a, b)
        fip = core.gemm_fip(a, b)
        ffip = core.gemm_ffip(a, core.y_transform(b), b_signed=b.signed)
        if not (np.array_equal(base.data, fip.data)
                and np.array_equal(base.data, ffip.data)):
            ok = False
            report.record("equivalence", False, f"mismatch at trial {checked}")
            break
        checked += 1
    else:
        report.record("equivalence", ok, f"{checked} random pairs exact")

    ok = True
    for m in range(1, 5):
        for n in range(1, 5):
            for k in range(2, 9, 2):
                a = _rand_q(rng, m, k, 8, True)
                b = _rand_q(rng, k, n, 8, True)
                for variant, fn in (("fip", lambda: core.gemm_fip(a, b, c)),
                                    ("ffip", lambda: core.gemm_ffip(
                                        a, core.y_transform(b), c))):
                    c = OpCounter()
                    fn()
                    want = core.predicted_op_counts(variant, m, n, k)
                    ok = ok and c == want
    report.record("op-counts", ok, "instrumented == closed form")

    mxu = build_mxu(cfg, args.variant)
    base_lat = systolic.measure_latency(build_mxu(cfg, "baseline"))
    fast_lat = systolic.measure_latency(build_mxu(cfg, "ffip"))
    delta_ok = base_lat - fast_lat == mxu.x // 2
    report.record("latency", delta_ok,
                  f"baseline {base_lat} - ffip {fast_lat} == X/2")

    ok = True
    q4 = QuantSpec(w=4, a_signed=True, b_signed=True)
    cfg4 = systolic.MxuConfig(4, 4, "ffip", q4)
    for _ in range(50):
        a = _rand_q(rng, 4, 4, 4, True)
        b = _rand_q(rng, 4, 4, 4, True)
        try:
            res = systolic.simulate_tile(cfg4, a, core.y_transform(b))
            ok = ok and np.array_equal(res.c_tile.data,
                                       core.gemm_baseline(a, b).data)
        except WidthFitError as exc:
            ok = False
            report.record("width-safety", False, str(exc))
            break
    else:
        report.record("width-safety", ok, "w=4 randomized, d per signedness rule")

    text = report.render()
    sys.stdout.write(text)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verify_report.txt").write_text(text)
    return 0 if report.passed else 1


def cmd_simulate(cfg: dict, args) -> int:
    rng = np.random.default_rng(args.seed)
    s = cfg["simulate"]
    mxu = build_mxu(cfg, args.variant)
    q = mxu.quant
    rows = int(s["rows"])
    a = _rand_q(rng, rows, int(s["k"]), q.w, q.a_signed)
    b = _rand_q(rng, int(s["k"]), int(s["n"]), q.w, q.b_signed)
    trace: list = []
    result, agg = systolic.run_gemm(mxu, a, b, trace=trace)

    oracle = core.gemm_baseline(a, b)
    exact = np.array_equal(result.data, oracle.data)
    busy = agg.mac_busy_histogram
    util = busy.sum() / (mxu.multipliers * agg.total_cycles)
    try:
        attained = systolic.steady_state_ops_per_mult_cycle(agg, mxu)
        roof = 2.0 if mxu.variant == "baseline" else 4.0
        roof_line = (f"ops/multiplier/cycle {attained:.4f} "
                     f"({100 * attained / roof:.1f}% of roof {roof:.0f})")
    except FfipError as exc:
        roof_line = f"steady-state metric unavailable: {exc}"

    base_lat = systolic.measure_latency(build_mxu(cfg, "baseline"))
    this_lat = systolic.measure_latency(mxu)
    print(f"variant={mxu.variant} x={mxu.x} y={mxu.y} rows={rows}")
    print(f"exact vs baseline GEMM: {exact}")
    print(f"first-output latency {this_lat} cycles "
          f"(baseline {base_lat}, delta {base_lat - this_lat})")
    print(f"total cycles {agg.total_cycles}, multiplier utilization {util:.3f}")
    print(roof_line)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trace.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["k_tile", "n_tile", "cycle", "busy_multipliers"])
        for kt, nt, res in trace:
            for cyc, n_busy in enumerate(res.mac_busy_histogram):
                wr.writerow([kt, nt, cyc, int(n_busy)])
    return 0 if exact else 1


def cmd_tile_check(cfg: dict, args) -> int:
    rng = np.random.default_rng(args.seed)
    t = cfg["tile_check"]
    trials = args.trials or int(t["trials"])
    mxu = build_mxu(cfg, args.variant)
    q = mxu.quant
    lo, hi = -(1 << (q.w - 1)), (1 << (q.w - 1))
    report = SuiteReport()

    def random_layer():
        kh = int(rng.integers(1, t["kernel_max"] + 1))
        kw = int(rng.integers(1, t["kernel_max"] + 1))
        h = int(rng.integers(kh, t["dim_max"] + 1))
        w = int(rng.integers(kw, t["dim_max"] + 1))
        return tiler.LayerShape(
            cin=int(rng.integers(1, 2 * mxu.x + 1)), h=h, w_dim=w,
            cout=int(rng.integers(1, 9)), kh=kh, kw=kw,
            stride=int(rng.integers(1, t["stride_max"] + 1)),
            padding=int(rng.integers(0, min(kh, kw))))

    ok = True
    for i in range(trials):
        lay = random_layer()
        inp = rng.integers(lo, hi, (lay.cin, lay.h, lay.w_dim))
        wt = rng.integers(lo, hi, (lay.cout, lay.cin, lay.kh, lay.kw))
        engine = "systolic" if i < int(t["simulator_trials"]) else "core"
        got = tiler.conv2d_via_gemm(lay, inp, wt, mxu, engine=engine)
        want = tiler.direct_conv2d(lay, inp, wt)
        if not np.array_equal(got, want):
            ok = False
            report.record("conv-lowering", False, f"layer {lay} via {engine}")
            break
    else:
        report.record("conv-lowering", ok,
                      f"{trials} layers exact "
                      f"({t['simulator_trials']} through the simulator)")

    golden = tiler.LayerShape(**t["golden_layer"])
    plan = tiler.plan_tiler(golden, mxu)
    stream = tiler.address_stream(plan)
    report.record("stream-length", len(stream) == plan.stream_length,
                  f"{len(stream)} addresses")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "addresses.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["index", "address"])
        wr.writerows(enumerate(int(x) for x in stream))
    (out / "plan.json").write_text(json.dumps(plan.to_dict(), indent=2) + "\n")
    sys.stdout.write(report.render())
    return 0 if report.passed else 1


def cmd_cost_report(cfg: dict, args) -> int:
    dev = cfg.get("device")
    if not dev:
        print("config error: cost-report requires a device profile",
              file=sys.stderr)
        return 1
    profile = cost.DeviceProfile(int(dev["dsp_count"]),
                                 int(dev["multipliers_per_dsp"]),
                                 float(dev["frequency_mhz"]) * 1e6)
    mult = cost.multipliers_of(profile)
    q = build_quant(cfg)
    d = q.d
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    models = cfg.get("models") or [
        {"name": "synthetic", "variant": cfg["mxu"]["variant"],
         "gemm_layers": [[64, 64, 64]]}]
    for model in models:
        variant = args.variant or model.get("variant", cfg["mxu"]["variant"])
        freq = float(model.get("frequency_mhz",
                               profile.frequency_hz / 1e6)) * 1e6
        layers = [tiler.LayerShape(**layer)
                  for layer in model.get("conv_layers", [])]
        layers += [tuple(t) for t in model.get("gemm_layers", [])]
        ops = cost.model_ops(layers) if layers else float(
            model.get("ops_per_inference", 0))
        if "recorded_gops" in model:
            rep = cost.metrics_from_gops(float(model["recorded_gops"]),
                                         mult, freq)
        else:
            rep = cost.metrics(ops, float(model.get("inferences_per_s", 0.0)),
                               mult, freq)
        roof = cost.throughput_roof(variant, mult, freq)
        reg = (cost.pe_register_bits(variant, q.w, d, int(cfg["mxu"]["x"]))
               if variant in cost.REGISTER_VARIANTS else "")
        rows.append([model.get("name", "?"), variant, f"{rep.gops:.1f}",
                     mult, f"{freq / 1e6:.0f}",
                     f"{rep.gops_per_multiplier:.4f}",
                     f"{rep.ops_per_multiplier_per_cycle:.4f}", reg,
                     f"{roof / 1e9:.1f}",
                     f"{rep.gops * 1e9 / roof:.4f}" if roof else ""])

    header = ["model", "variant", "gops", "multipliers", "frequency_mhz",
              "gops_per_multiplier", "ops_per_multiplier_per_cycle",
              "pe_register_bits", "roof_gops", "roof_attainment"]
    with open(out / "cost_report.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        wr.writerows(rows)
    widths = [max(len(str(r[i])) for r in rows + [header])
              for i in range(len(header))]
    md = ["| " + " | ".join(f"{h:<{widths[i]}}" for i, h in enumerate(header))
          + " |",
          "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    md += ["| " + " | ".join(f"{str(c):<{widths[i]}}"
                             for i, c in enumerate(row)) + " |"
           for row in rows]
    (out / "cost_report.md").write_text("\n".join(md) + "\n")

    with open(out / "register_sweep.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["w", "d", "fip_bits", "fip_extra_regs_bits", "ffip_bits"])
        for w in range(1, 17):
            for dd in (1, 2):
                wr.writerow([w, dd]
                            + [cost.pe_register_bits(v, w, dd,
                                                     int(cfg["mxu"]["x"]))
                               for v in cost.REGISTER_VARIANTS])
    print("\n".join(md))
    print(f"\nwrote {out / 'cost_report.csv'}, cost_report.md, "
          "register_sweep.csv")
    return 0


def cmd_bench(cfg: dict, args) -> int:
    rng = np.random.default_rng(args.seed)
    b = cfg["bench"]
    backends = [("numpy", kernels.numpy_impl)]
    if kernels.numba_impl is not None:
        backends.insert(0, ("numba", kernels.numba_impl))
    else:
        print("numba backend unavailable (forced off or not importable); "
              "timing numpy only")

    def diff_transform(mat):
        y = mat.copy()
        y[:, 1:] = mat[:, 1:] - mat[:, :-1]
        return y

    m, k, n = int(b["m"]), int(b["k"]), int(b["n"])
    a = rng.integers(-128, 128, (m, k)).astype(np.int64)
    bm = rng.integers(-128, 128, (k, n)).astype(np.int64)
    y = diff_transform(bm)
    x, yy = int(b["sim_x"]), int(b["sim_y"])
    sim_a = rng.integers(-128, 128, (int(b["sim_rows"]), x)).astype(np.int64)
    sim_y = diff_transform(
        rng.integers(-128, 128, (x, yy)).astype(np.int64))
    dep = systolic.skew_depths(x, "ffip")
    bounds = systolic.register_bounds(
        systolic.MxuConfig(x, yy, "ffip", build_quant(cfg)))
    max_cycles = int(b["sim_rows"]) + x + yy + 16

    tasks = {
        "gemm_ffip_terms": lambda impl: impl.ffip_terms(a, y),
        "gemm_baseline": lambda impl: impl.gemm_baseline(a, bm),
        "simulate_tile": lambda impl: impl.simulate_tile(
            2, sim_a, sim_y, dep, bounds, max_cycles),
    }
    results = []
    for task, fn in tasks.items():
        for name, impl in backends:
            fn(impl)  # warm-up (includes any jit compilation)
            best = min(_timed(fn, impl) for _ in range(int(b["repeats"])))
            results.append([task, name, f"{best:.6f}"])
            print(f"{task:<18} {name:<6} {best:.6f}s")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "bench.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["task", "backend", "seconds"])
        wr.writerows(results)
    return 0


def _timed(fn, impl) -> float:
    t0 = time.perf_counter()
    fn(impl)
    return time.perf_counter() - t0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ffip",
        description="Fast inner-product GEMM, array simulator, and cost tools")
    parser.add_argument("--config", metavar="PATH",
                        help="JSON config file (merged over defaults)")
    parser.add_argument("--seed", type=int, default=0, metavar="N")
    parser.add_argument("--trials", type=int, default=0, metavar="N",
                        help="override the config trial count (0 = config)")
    parser.add_argument("--out", default="ffip-out", metavar="DIR")
    parser.add_argument("--variant", choices=core.VARIANTS, default=None)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("verify", "simulate", "tile-check", "cost-report", "bench"):
        sub.add_parser(name)
    args = parser.parse_args(argv)
    cfg = load_config(args.config)
    handler = {
        "verify": cmd_verify,
        "simulate": cmd_simulate,
        "tile-check": cmd_tile_check,
        "cost-report": cmd_cost_report,
        "bench": cmd_bench,
    }[args.command]
    try:
        return handler(cfg, args)
    except (FfipError, EvenKError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
