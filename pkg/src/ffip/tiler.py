"""In-place lowering of 2-D convolution to tiled GEMM.

Instead of materializing an im2col copy, a seven-digit programmable counter
nest emits feature-memory addresses directly: each generated address is the
sum of an output-pixel offset (m_offset) and a kernel-position offset
(k_offset) under one canonical feature layout.  Feature memory holds
x-element channel groups, so one address fetches x input channels at once.

Canonical layout (after zero-padding the spatial halo and rounding Cin up
to a multiple of x)::

    address(h, w, g) = h * (Wp * G) + w * G + g      G = Cin_padded / x

The digit extents and strides for a layer are computed offline by
``plan_tiler``; ``address_stream`` then unrolls the nest in the fixed order
n_t > h_t > kh > kw > cin_t > h > w.  ``conv2d_via_gemm`` consumes the
stream against a ``FeatureStore`` and is checked bit-exactly against the
``direct_conv2d`` nested-loop oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import core, kernels, systolic
from .errors import PlanError, ShapeError
from .qmatrix import QMatrix, check_fits

#: fixed digit order of the counter nest, outermost first
DIGITS = ("n_t", "h_t", "kh", "kw", "cin_t", "h", "w")

#: default cap on output pixels per GEMM tile (rows of the A operand)
DEFAULT_TILE_M = 64


@dataclass(frozen=True)
class LayerShape:
    """One convolution layer: channels, spatial dims, kernel, stride, padding."""

    cin: int
    h: int
    w_dim: int
    cout: int
    kh: int
    kw: int
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        for name in ("cin", "h", "w_dim", "cout", "kh", "kw", "stride"):
            if getattr(self, name) <= 0:
                raise ShapeError(f"layer field {name} must be positive")
        if self.padding < 0:
            raise ShapeError("padding must be nonnegative")
        if self.padding >= self.kh or self.padding >= self.kw:
            raise ShapeError("padding must be smaller than the kernel dims")
        if self.out_h <= 0 or self.out_w <= 0:
            raise ShapeError("kernel does not fit inside the padded input")

    @property
    def out_h(self) -> int:
        return (self.h + 2 * self.padding - self.kh) // self.stride + 1

    @property
    def out_w(self) -> int:
        return (self.w_dim + 2 * self.padding - self.kw) // self.stride + 1

    def padded_cin(self, x: int) -> int:
        return -(-self.cin // x) * x

    def gemm_mnk(self, x: int | None = None) -> tuple[int, int, int]:
        """GEMM-equivalent (M, N, K); K uses Cin padded to x when given."""
        cin = self.cin if x is None else self.padded_cin(x)
        return self.out_h * self.out_w, self.cout, self.kh * self.kw * cin


@dataclass(frozen=True)
class TilerPlan:
    """Extents and address strides for the seven counter digits."""

    extents: tuple
    strides: tuple

    def __post_init__(self):
        if len(self.extents) != 7 or len(self.strides) != 7:
            raise PlanError("a plan has exactly seven digits")
        if any(e < 1 for e in self.extents):
            raise PlanError(f"all digit extents must be >= 1, got {self.extents}")
        if any(s < 0 for s in self.strides):
            raise PlanError(f"strides must be nonnegative, got {self.strides}")

    @property
    def stream_length(self) -> int:
        return int(np.prod(self.extents, dtype=np.int64))

    def to_dict(self) -> dict:
        return {"extents": dict(zip(DIGITS, (int(e) for e in self.extents))),
                "strides": dict(zip(DIGITS, (int(s) for s in self.strides)))}

    @classmethod
    def from_dict(cls, d: dict) -> "TilerPlan":
        try:
            extents = tuple(int(d["extents"][k]) for k in DIGITS)
            strides = tuple(int(d["strides"][k]) for k in DIGITS)
        except KeyError as exc:
            raise PlanError(f"plan dict missing digit {exc}") from exc
        return cls(extents, strides)


class FeatureStore:
    """Padded input feature map as a linear array of x-wide channel groups.

    ``groups[addr]`` is the x-vector of channels at one (h, w, group)
    location; spatial zero padding is materialized as halo groups rather
    than handled by address predication.
    """

    def __init__(self, groups: np.ndarray, x: int, hp: int, wp: int):
        if groups.ndim != 2 or groups.shape[1] != x:
            raise ShapeError(f"groups must be (locations, {x})")
        self.groups = groups
        self.x = x
        self.hp = hp
        self.wp = wp
        self.g = groups.shape[0] // (hp * wp)
        if self.g * hp * wp != groups.shape[0]:
            raise ShapeError("group count is not a whole number per location")

    @property
    def capacity(self) -> int:
        return self.groups.shape[0]

    @classmethod
    def from_input(cls, inp: np.ndarray, layer: LayerShape, x: int) -> "FeatureStore":
        inp = np.asarray(inp, dtype=np.int64)
        if inp.shape != (layer.cin, layer.h, layer.w_dim):
            raise ShapeError(
                f"input shape {inp.shape} != ({layer.cin}, {layer.h}, {layer.w_dim})")
        p = layer.padding
        cin_p = layer.padded_cin(x)
        hp, wp = layer.h + 2 * p, layer.w_dim + 2 * p
        padded = np.zeros((cin_p, hp, wp), dtype=np.int64)
        padded[:layer.cin, p:p + layer.h, p:p + layer.w_dim] = inp
        # (G, x, Hp, Wp) -> (Hp, Wp, G, x) -> flat channel-major groups
        grouped = padded.reshape(cin_p // x, x, hp, wp).transpose(2, 3, 0, 1)
        return cls(grouped.reshape(-1, x).copy(), x, hp, wp)

    def read(self, addr: int) -> np.ndarray:
        return self.groups[addr]


def plan_tiler(layer: LayerShape, mxu: systolic.MxuConfig,
               tile_m_cap: int = DEFAULT_TILE_M) -> TilerPlan:
    """Derive the counter-nest digits for one layer, offline.

    The output height is split into the largest divisor whose tile covers at
    most ``tile_m_cap`` output pixels, so each GEMM tile streams a bounded
    number of A rows.  Correctness of the derived strides is anchored to the
    im2col oracle in the test suite, not assumed.
    """
    oh, ow = layer.out_h, layer.out_w
    g = layer.padded_cin(mxu.x) // mxu.x
    wp = layer.w_dim + 2 * layer.padding
    s = layer.stride
    tile_oh = 1
    for cand in range(oh, 0, -1):
        if oh % cand == 0 and cand * ow <= max(tile_m_cap, ow):
            tile_oh = cand
            break
    n_tiles = -(-layer.cout // mxu.y)
    extents = (n_tiles, oh // tile_oh, layer.kh, layer.kw, g, tile_oh, ow)
    strides = (0,                      # n_t: output-channel tiles reuse addresses
               tile_oh * s * wp * g,   # h_t: next block of output rows
               wp * g,                 # kh: next kernel row
               g,                      # kw: next kernel column
               1,                      # cin_t: next channel group
               s * wp * g,             # h: next output row inside the tile
               s * g)                  # w: next output column
    return TilerPlan(extents, strides)


def address_stream(plan: TilerPlan) -> np.ndarray:
    """Unroll the counter nest into its full address sequence.

    The result has ``plan.stream_length`` entries in nest order
    n_t > h_t > kh > kw > cin_t > h > w; each entry is m_offset + k_offset.
    """
    addrs = np.zeros((), dtype=np.int64)
    for extent, stride in zip(plan.extents, plan.strides):
        digit = np.arange(extent, dtype=np.int64) * stride
        addrs = addrs[..., None] + digit
    return addrs.reshape(-1)


def _weights_as_gemm(layer: LayerShape, wt: np.ndarray, x: int) -> np.ndarray:
    """(Cout, Cin, KH, KW) weights -> (K, Cout) with K = KH*KW*Cin_padded.

    The K ordering matches the kh > kw > cin_t digit order of the stream.
    """
    wt = np.asarray(wt, dtype=np.int64)
    if wt.shape != (layer.cout, layer.cin, layer.kh, layer.kw):
        raise ShapeError(
            f"weight shape {wt.shape} != "
            f"({layer.cout}, {layer.cin}, {layer.kh}, {layer.kw})")
    cin_p = layer.padded_cin(x)
    padded = np.zeros((layer.cout, cin_p, layer.kh, layer.kw), dtype=np.int64)
    padded[:, :layer.cin] = wt
    # (Cout, KH, KW, Cin_p) flattened along the last three gives K ordered as
    # kh-major, then kw, then channel group, then channel within the group.
    return padded.transpose(0, 2, 3, 1).reshape(layer.cout, -1).T.copy()


def conv2d_via_gemm(layer: LayerShape, inp: np.ndarray, wt: np.ndarray,
                    mxu: systolic.MxuConfig, engine: str = "core") -> np.ndarray:
    """Convolve by streaming feature addresses into tiled GEMMs.

    ``engine="core"`` multiplies each tile with the bit-exact GEMM of the
    configured variant; ``engine="systolic"`` pushes every tile through the
    clocked array simulator.  Both return the (Cout, OH, OW) map exactly
    equal to ``direct_conv2d``.
    """
    if engine not in ("core", "systolic"):
        raise ValueError(f"unknown engine {engine!r}")
    q = mxu.quant
    store = FeatureStore.from_input(inp, layer, mxu.x)
    check_fits(store.groups, q.w, q.a_signed, "input feature")
    b_mat = _weights_as_gemm(layer, wt, mxu.x)
    check_fits(b_mat, q.w, q.b_signed, "weight value")
    plan = plan_tiler(layer, mxu)
    n_t, h_t, kh, kw, g, tile_oh, ow = plan.extents
    k_dim = kh * kw * g * mxu.x
    stream = address_stream(plan).reshape(plan.extents)

    b_q = QMatrix.from_array(b_mat, q.w, q.b_signed)
    prepared = None
    if engine == "systolic":
        prepared = systolic.prepare_weights(b_q, mxu.x, mxu.y, mxu.variant)
    elif mxu.variant == "ffip":
        y_q = core.y_transform(b_q)

    out = np.zeros((layer.cout, layer.out_h, layer.out_w), dtype=np.int64)
    for ht in range(h_t):
        # (kh, kw, g) address block for this row tile; n_t digits replay it
        tile_addrs = stream[0, ht]
        a_groups = store.groups[tile_addrs]           # (kh, kw, g, tile_oh, ow, x)
        a_mat = (a_groups.transpose(3, 4, 0, 1, 2, 5)
                 .reshape(tile_oh * ow, k_dim))
        a_q = QMatrix.from_array(a_mat, q.w, q.a_signed)
        if engine == "systolic":
            c_q, _ = systolic.run_gemm(mxu, a_q, b_q, prepared=prepared)
        elif mxu.variant == "baseline":
            c_q = core.gemm_baseline(a_q, b_q)
        elif mxu.variant == "fip":
            c_q = core.gemm_fip(a_q, b_q)
        else:
            c_q = core.gemm_ffip(a_q, y_q, b_signed=q.b_signed)
        rows = slice(ht * tile_oh, (ht + 1) * tile_oh)
        out[:, rows, :] = (c_q.data.T.reshape(layer.cout, tile_oh, ow))
    return out


def direct_conv2d(layer: LayerShape, inp: np.ndarray, wt: np.ndarray) -> np.ndarray:
    """Textbook nested-loop integer convolution (the correctness oracle)."""
    inp = np.asarray(inp, dtype=np.int64)
    wt = np.asarray(wt, dtype=np.int64)
    if inp.shape != (layer.cin, layer.h, layer.w_dim):
        raise ShapeError(
            f"input shape {inp.shape} != ({layer.cin}, {layer.h}, {layer.w_dim})")
    if wt.shape != (layer.cout, layer.cin, layer.kh, layer.kw):
        raise ShapeError(
            f"weight shape {wt.shape} != "
            f"({layer.cout}, {layer.cin}, {layer.kh}, {layer.kw})")
    p = layer.padding
    padded = np.zeros((layer.cin, layer.h + 2 * p, layer.w_dim + 2 * p),
                      dtype=np.int64)
    padded[:, p:p + layer.h, p:p + layer.w_dim] = inp
    return kernels.conv2d_direct(padded, wt, layer.stride)
