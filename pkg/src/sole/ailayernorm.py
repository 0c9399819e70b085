"""Bit-exact integer model of the two-stage layernorm kernel.

Stage 1 accumulates the channel sum and the sum of squares in one streaming
pass.  Squares are never multiplied at full width: each centered sample's
magnitude is compressed to 4 bits with a range-dependent shift, squared via a
16-entry table, and decompressed with shifts.  A per-row preprocess turns the
two accumulators into the mean and inverse standard deviation (reciprocal and
inverse-square-root come from small lookup tables), and Stage 2 applies the
normalization plus the quantized affine weights.

Inputs are 8-bit codes from the power-of-two-factor quantizer: channel ``c``'s
real value is ``(xq - zp) * 2**alpha_c * s``.  The layer scale ``s`` cancels
inside the normalization, so the kernel never needs it; only ``zp`` and the
per-channel ``alpha`` exponents enter.

Like the softmax kernel, arrays may carry leading batch dimensions with the
trailing axis as the channel axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .fxp import bit_length, clip, round_shift_right

__all__ = [
    "LayerNormConfig",
    "AffineParams",
    "LNState",
    "RowStats",
    "dynamic_compress",
    "square_decompress",
    "stage1",
    "reciprocal_const",
    "inv_sqrt",
    "preprocess",
    "stage2",
    "ailayernorm",
    "ailayernorm_real",
]

# The reciprocal constant and everything derived from it (mean, variance)
# carry 16 fraction bits.
RECIP_FRAC_BITS = 16

_SQUARE_TABLE = np.arange(16, dtype=np.int64) ** 2


@dataclass(frozen=True)
class LayerNormConfig:
    """Datapath widths and table sizes for the integer layernorm.

    ``literal_ex2_shift`` reproduces a published form of the accumulator
    scaling that double-counts the decompression shift (inflating E(x^2) by
    16x); it exists for comparison runs and defaults to off.
    """

    alpha_max: int = 3
    ex_acc_bits: int = 24
    ex2_acc_bits: int = 40
    invsqrt_entries: int = 64
    invsqrt_frac_bits: int = 16
    eps_raw: int = 1
    literal_ex2_shift: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.alpha_max <= 7:
            raise ValueError(f"alpha_max must be in [0, 7], got {self.alpha_max}")
        if self.invsqrt_entries < 2 or self.invsqrt_entries & (self.invsqrt_entries - 1):
            raise ValueError(
                f"invsqrt_entries must be a power of two >= 2, got {self.invsqrt_entries}"
            )
        if not 8 <= self.invsqrt_frac_bits <= 30:
            raise ValueError(
                f"invsqrt_frac_bits must be in [8, 30], got {self.invsqrt_frac_bits}"
            )
        if self.eps_raw < 1:
            raise ValueError(f"eps_raw must be >= 1, got {self.eps_raw}")
        if self.ex_acc_bits < 12 or self.ex2_acc_bits < 16:
            raise ValueError("accumulator widths too small to hold one sample")

    @property
    def max_channels(self) -> int:
        """Largest C for which the accumulators provably cannot overflow."""
        per_ex = 255 << self.alpha_max
        per_ex2 = 225 << (8 + 2 * self.alpha_max)
        cap_ex = (1 << (self.ex_acc_bits - 1)) // per_ex
        cap_ex2 = (1 << self.ex2_acc_bits) // per_ex2
        return min(cap_ex, cap_ex2)


@dataclass(frozen=True)
class AffineParams:
    """Quantized per-channel affine weights plus the 8-bit output grid."""

    gamma_q: np.ndarray
    gamma_scale: float
    beta_q: np.ndarray
    beta_scale: float
    out_scale: float
    out_zp: int

    @classmethod
    def from_real(
        cls,
        gamma: np.ndarray,
        beta: np.ndarray,
        out_scale: float,
        out_zp: int = 128,
    ) -> "AffineParams":
        """Symmetric int8 quantization of real gamma/beta."""
        gamma = np.asarray(gamma, dtype=np.float64)
        beta = np.asarray(beta, dtype=np.float64)
        gs = float(np.max(np.abs(gamma))) / 127.0 or 1.0
        bs = float(np.max(np.abs(beta))) / 127.0 or 1.0
        gq = np.clip(np.floor(gamma / gs + 0.5), -127, 127).astype(np.int64)
        bq = np.clip(np.floor(beta / bs + 0.5), -127, 127).astype(np.int64)
        return cls(gq, gs, bq, bs, float(out_scale), int(out_zp))

    @property
    def gamma_real(self) -> np.ndarray:
        return self.gamma_q * self.gamma_scale

    @property
    def beta_real(self) -> np.ndarray:
        return self.beta_q * self.beta_scale


def dynamic_compress(x, cfg: LayerNormConfig | None = None):
    """Compress an 8-bit magnitude to a 4-bit code plus a 1-bit range select.

    Values with either of the top two bits set round off 4 bits, the rest
    round off 2; both saturate at 15.  Returns ``(code, s)``.
    """
    arr = isinstance(x, np.ndarray)
    x = np.asarray(x, dtype=np.int64) if arr else int(x)
    if arr:
        if np.any((x < 0) | (x > 255)):
            raise ValueError("dynamic_compress input must lie in [0, 255]")
        s = (x >= 64).astype(np.int64)
        y = np.where(s == 1, clip((x + 8) >> 4, 0, 15), clip((x + 2) >> 2, 0, 15))
        return y, s
    if not 0 <= x <= 255:
        raise ValueError(f"dynamic_compress input must lie in [0, 255], got {x}")
    if x >= 64:
        return clip(round_shift_right(x, 4), 0, 15), 1
    return clip(round_shift_right(x, 2), 0, 15), 0


def square_decompress(y, s, alpha, cfg: LayerNormConfig | None = None):
    """Square a compressed code and undo both shifts: ``y**2 << (4s + 4 + 2a)``.

    The square comes from a 16-entry table; the quantizer's per-channel
    ``alpha`` doubles because the value is squared.
    """
    cfg = cfg or LayerNormConfig()
    y = np.asarray(y, dtype=np.int64)
    s = np.asarray(s, dtype=np.int64)
    alpha = np.asarray(alpha, dtype=np.int64)
    if np.any((y < 0) | (y > 15)):
        raise ValueError("compressed code must lie in [0, 15]")
    if np.any((s != 0) & (s != 1)):
        raise ValueError("range-select bit must be 0 or 1")
    if np.any((alpha < 0) | (alpha > cfg.alpha_max)):
        raise ValueError(f"alpha must lie in [0, {cfg.alpha_max}]")
    out = _SQUARE_TABLE[y] << (4 * s + 4 + 2 * alpha)
    return out if out.ndim else int(out)


@dataclass
class LNState:
    """Stage-1 accumulators per row: sum and compressed sum of squares."""

    ex_raw: np.ndarray
    ex2_raw: np.ndarray
    channels: int
    config: LayerNormConfig = field(repr=False)


@dataclass(frozen=True)
class RowStats:
    """Per-row preprocess products, all in fixed point.

    ``mu_raw`` and ``var_raw`` carry 16 fraction bits; ``std_inv_raw`` carries
    ``invsqrt_frac_bits``.  Units are the quantizer's base scale (the layer
    scale s cancels later, so it never appears).
    """

    mu_raw: np.ndarray
    var_raw: np.ndarray
    std_inv_raw: np.ndarray


def _as_rows(xq: np.ndarray, alphas: np.ndarray, cfg: LayerNormConfig):
    xq = np.asarray(xq)
    if not np.issubdtype(xq.dtype, np.integer):
        raise ValueError(f"quantized input must be integer, got dtype {xq.dtype}")
    if xq.ndim == 0 or xq.shape[-1] == 0:
        raise ValueError("empty-vector: layernorm needs at least one channel")
    c = xq.shape[-1]
    alphas = np.asarray(alphas, dtype=np.int64)
    if alphas.shape != (c,):
        raise ValueError(f"shape-error: alphas {alphas.shape} vs channels {c}")
    if np.any((alphas < 0) | (alphas > cfg.alpha_max)):
        raise ValueError(f"alpha must lie in [0, {cfg.alpha_max}]")
    if c > cfg.max_channels:
        raise ValueError(
            f"{c} channels exceed accumulator capacity ({cfg.max_channels})"
        )
    return xq.reshape(-1, c).astype(np.int64), alphas, xq.shape[:-1]


def stage1(
    xq: np.ndarray,
    zp: int,
    alphas: np.ndarray,
    cfg: LayerNormConfig | None = None,
) -> LNState:
    """Accumulate the channel sum and the compressed sum of squares.

    Each channel contributes ``(xq - zp) << alpha`` to the sum; its magnitude
    (always within 8 bits) goes through compress/square/decompress into the
    squared accumulator.
    """
    cfg = cfg or LayerNormConfig()
    rows, alphas, lead = _as_rows(xq, alphas, cfg)
    d = rows - int(zp)
    ex = (d << alphas).sum(axis=1)
    mag = clip(np.abs(d), 0, 255)
    y, s = dynamic_compress(mag)
    ex2 = (_SQUARE_TABLE[y] << (4 * s + 4 + 2 * alphas)).sum(axis=1)
    assert int(np.abs(ex).max()) < 1 << (cfg.ex_acc_bits - 1)
    assert int(ex2.max()) < 1 << cfg.ex2_acc_bits
    return LNState(
        ex_raw=ex.reshape(lead),
        ex2_raw=ex2.reshape(lead),
        channels=rows.shape[1],
        config=cfg,
    )


def reciprocal_const(c: int) -> int:
    """``round(2**16 / c)``: the per-configuration 1/C constant."""
    if c < 1:
        raise ValueError(f"channel count must be >= 1, got {c}")
    return (2 * (1 << RECIP_FRAC_BITS) + c) // (2 * c)  # round half toward +inf


@lru_cache(maxsize=8)
def _invsqrt_tables(entries: int, frac_bits: int) -> np.ndarray:
    # Two banks: r=0 covers mantissa [1,2), r=1 covers [2,4).  Left-edge
    # entries so exact powers of two come out exact.
    m = 1.0 + np.arange(entries) / entries
    banks = np.stack([m, 2.0 * m]) ** -0.5
    return np.floor(banks * (1 << frac_bits) + 0.5).astype(np.int64)


def inv_sqrt(v_raw, cfg: LayerNormConfig | None = None):
    """Table-driven inverse square root of a 16-fraction-bit fixed-point value.

    Range-reduces ``v = m * 2**(2e + r)`` with mantissa ``m`` in [1, 2) and
    ``r`` in {0, 1}, looks up ``(m * 2**r) ** -0.5`` by the mantissa's top
    bits, and shifts by ``e``.  Output carries ``invsqrt_frac_bits``; relative
    error is within ``1/invsqrt_entries`` plus a table ULP.
    """
    cfg = cfg or LayerNormConfig()
    scalar = not isinstance(v_raw, np.ndarray)
    v = np.asarray(v_raw, dtype=np.int64)
    if np.any(v < cfg.eps_raw):
        raise ValueError(
            "subnormal-variance: inv_sqrt input below the eps floor "
            f"(min {cfg.eps_raw})"
        )
    idx_bits = int(cfg.invsqrt_entries).bit_length() - 1
    p = bit_length(v) - 1
    exp = p - RECIP_FRAC_BITS
    e, r = exp >> 1, exp & 1
    idx = ((v << idx_bits) >> p) & (cfg.invsqrt_entries - 1)
    entry = _invsqrt_tables(cfg.invsqrt_entries, cfg.invsqrt_frac_bits)[r, idx]
    out = np.where(e >= 0, entry >> np.maximum(e, 0), entry << np.maximum(-e, 0))
    return int(out) if scalar else out


def preprocess(state: LNState, cfg: LayerNormConfig | None = None) -> RowStats:
    """Turn the two accumulators into mean and inverse standard deviation.

    One multiply by the 1/C reciprocal constant each; the variance is
    ``E(x^2) - mu^2`` floored at ``eps_raw`` before the inverse square root.
    """
    cfg = cfg or state.config
    recip = reciprocal_const(state.channels)
    ex2 = state.ex2_raw << 4 if cfg.literal_ex2_shift else state.ex2_raw
    mu_raw = state.ex_raw * recip
    ex2_mean = ex2 * recip
    mu_sq = round_shift_right(mu_raw * mu_raw, RECIP_FRAC_BITS)
    var_raw = np.maximum(ex2_mean - mu_sq, cfg.eps_raw)
    return RowStats(mu_raw=mu_raw, var_raw=var_raw, std_inv_raw=inv_sqrt(var_raw, cfg))


def stage2(
    xq: np.ndarray,
    zp: int,
    alphas: np.ndarray,
    stats: RowStats,
    affine: AffineParams,
    cfg: LayerNormConfig | None = None,
) -> np.ndarray:
    """Normalize, apply the affine weights, and requantize to 8 bits.

    Per channel: ``A = dequant(gamma) * std_inv`` (first multiply),
    ``y = A * ((d << alpha) - mu) + dequant(beta)`` (second multiply + add),
    then saturating quantization onto the output grid.
    """
    cfg = cfg or LayerNormConfig()
    rows, alphas, lead = _as_rows(xq, alphas, cfg)
    c = rows.shape[1]
    if np.asarray(affine.gamma_q).shape != (c,) or np.asarray(affine.beta_q).shape != (c,):
        raise ValueError("shape-error: affine weights must be per-channel")
    mu = np.asarray(stats.mu_raw).reshape(-1, 1) * 2.0**-RECIP_FRAC_BITS
    std_inv = (
        np.asarray(stats.std_inv_raw).reshape(-1, 1) * 2.0**-cfg.invsqrt_frac_bits
    )
    xc = ((rows - int(zp)) << alphas) - mu
    y = (affine.gamma_real * std_inv) * xc + affine.beta_real
    q = np.floor(y / affine.out_scale + 0.5) + affine.out_zp
    return np.clip(q, 0, 255).astype(np.uint8).reshape(*lead, c)


def ailayernorm(
    xq: np.ndarray,
    zp: int,
    alphas: np.ndarray,
    affine: AffineParams,
    cfg: LayerNormConfig | None = None,
) -> np.ndarray:
    """Full pipeline: accumulate, preprocess, normalize; returns 8-bit codes."""
    cfg = cfg or LayerNormConfig()
    state = stage1(xq, zp, alphas, cfg)
    stats = preprocess(state, cfg)
    return stage2(xq, zp, alphas, stats, affine, cfg)


def ailayernorm_real(
    xq: np.ndarray,
    zp: int,
    alphas: np.ndarray,
    affine: AffineParams,
    cfg: LayerNormConfig | None = None,
) -> np.ndarray:
    """Full pipeline with the output dequantized back to float64."""
    out = ailayernorm(xq, zp, alphas, affine, cfg)
    return (out.astype(np.float64) - affine.out_zp) * affine.out_scale
