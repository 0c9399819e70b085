"""Bit-exact integer model of the two-stage log2-domain softmax kernel.

The kernel never exponentiates or divides in real arithmetic.  Stage 1 streams
the input once, keeping a running max; each element is encoded as a small
power-of-two exponent (``log2exp``) and the running sum of ``2**-code`` terms
is repaired with a right shift whenever the max moves.  Stage 2 turns each
code into an output through a shift-only approximate divider whose constants
carry a mean-error correction.

All state is integers.  Inputs are quantized values on a power-of-two grid:
an integer ``q`` stands for the real logit ``q * 2**-input_scale_exp``.  Only
differences of inputs enter the arithmetic, so any affine zero point cancels.

Arrays may carry leading batch dimensions; the trailing axis is the softmax
axis and every row is processed independently (vectorized, same bit behavior
as one row at a time).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fxp import bit_length, clip, round_shift_right

__all__ = [
    "SoftmaxConfig",
    "SoftmaxState",
    "log2exp",
    "stage1",
    "aldivision",
    "stage2",
    "e2softmax",
    "e2softmax_real",
    "two_pass",
]

# Stage-2 totals saturate at 6 bits.  Never binding at the default 4-bit code
# width (max 15 + 15), present for wider configurations.
K_TOTAL_MAX = 63

# log2(e) approximated as 1 + 1/2 - 1/16 = 23/16; the whole encoder is one
# multiply-free constant multiplication by this value.
_LOG2E_NUM = 23
_LOG2E_SHIFT = 4


@dataclass(frozen=True)
class SoftmaxConfig:
    """Knobs of the integer softmax datapath.

    Attributes:
        code_bits: width of the per-element exponent code (codes saturate at
            ``2**code_bits - 1``).
        input_scale_exp: ``f`` such that the real logit is ``q * 2**-f``.
        slice_len: elements per streaming slice; 1 reproduces the per-element
            update rule, larger values model a vectorized datapath that
            corrects the sum once per slice.
        out_frac_bits: fraction bits of the unsigned output fixed point.
        sum_int_bits / sum_frac_bits: width of the running-sum register.
    """

    code_bits: int = 4
    input_scale_exp: int = 4
    slice_len: int = 32
    out_frac_bits: int = 8
    sum_int_bits: int = 13
    sum_frac_bits: int = 15

    def __post_init__(self) -> None:
        if not 2 <= self.code_bits <= 6:
            raise ValueError(f"code_bits must be in [2, 6], got {self.code_bits}")
        if not 0 <= self.input_scale_exp <= 8:
            raise ValueError(
                f"input_scale_exp must be in [0, 8], got {self.input_scale_exp}"
            )
        if self.slice_len < 1:
            raise ValueError(f"slice_len must be >= 1, got {self.slice_len}")
        if not 1 <= self.out_frac_bits <= 16:
            raise ValueError(
                f"out_frac_bits must be in [1, 16], got {self.out_frac_bits}"
            )
        if self.sum_int_bits < 1:
            raise ValueError(f"sum_int_bits must be >= 1, got {self.sum_int_bits}")
        # Every code k must remain representable as a sum term 2**(F - k).
        if self.sum_frac_bits < 2**self.code_bits - 1:
            raise ValueError(
                "sum_frac_bits must cover the code range: need >= "
                f"{2 ** self.code_bits - 1}, got {self.sum_frac_bits}"
            )

    @property
    def code_max(self) -> int:
        return 2**self.code_bits - 1

    @property
    def max_len(self) -> int:
        """Longest vector the sum register provably cannot overflow on."""
        return 2**self.sum_int_bits

    @property
    def divider_constants(self) -> tuple[int, int]:
        """(1.636 - 0.5*q)/2 for q in {0, 1/2}, pre-rounded to out_frac_bits."""
        scale = 1 << self.out_frac_bits
        c0 = int(np.floor(0.818 * scale + 0.5))
        c1 = int(np.floor(0.568 * scale + 0.5))
        return c0, c1


def log2exp(d, f: int, b: int = 4):
    """Quantize ``exp(d * 2**-f)`` to a power of two; returns the exponent code.

    ``d`` must be <= 0 (differences against a running max).  The code is
    ``clip(round(-d * 2**-f * 1.4375), 0, 2**b - 1)`` with ties toward +inf,
    computed exactly in integers: scale by 23, round off ``f + 4`` bits.

    Accepts scalars or integer ndarrays.
    """
    if not 0 <= f <= 8:
        raise ValueError(f"input_scale_exp must be in [0, 8], got {f}")
    if not 2 <= b <= 6:
        raise ValueError(f"code_bits must be in [2, 6], got {b}")
    if isinstance(d, np.ndarray):
        if np.any(d > 0):
            raise ValueError("positive-exponent-input: log2exp requires d <= 0")
        t = _LOG2E_NUM * (-d.astype(np.int64))
    else:
        d = int(d)
        if d > 0:
            raise ValueError(f"positive-exponent-input: log2exp requires d <= 0, got {d}")
        t = _LOG2E_NUM * -d
    return clip(round_shift_right(t, f + _LOG2E_SHIFT), 0, 2**b - 1)


@dataclass
class SoftmaxState:
    """Everything Stage 1 hands to Stage 2.

    Shapes carry the input's leading batch dimensions: ``codes`` matches the
    input, ``slice_max`` has one entry per slice, ``global_max`` and
    ``sum_raw`` are per row.  ``sum_raw`` is the running sum in
    ``2**-sum_frac_bits`` units.
    """

    codes: np.ndarray
    slice_max: np.ndarray
    global_max: np.ndarray
    sum_raw: np.ndarray
    config: SoftmaxConfig = field(repr=False)


def _as_rows(x: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    x = np.asarray(x)
    if not np.issubdtype(x.dtype, np.integer):
        raise ValueError(f"quantized input must be integer, got dtype {x.dtype}")
    if x.ndim == 0 or x.shape[-1] == 0:
        raise ValueError("empty-vector: softmax needs at least one element")
    lead = x.shape[:-1]
    return x.reshape(-1, x.shape[-1]).astype(np.int64), lead


def stage1(x: np.ndarray, cfg: SoftmaxConfig | None = None) -> SoftmaxState:
    """Streaming pass: running max, per-element codes, shift-corrected sum.

    Slices of ``cfg.slice_len`` are consumed in order.  Per slice: take the
    slice max, merge it into the running max ``m``, right-shift the
    accumulated sum by ``log2exp(m_old - m_new)`` (truncating) if ``m`` grew,
    then encode the slice against the new ``m`` and add its ``2**-code``
    terms.  The running max after each slice is recorded for Stage 2.
    """
    cfg = cfg or SoftmaxConfig()
    rows, lead = _as_rows(x)
    n_rows, length = rows.shape
    if length > cfg.max_len:
        raise ValueError(
            f"vector length {length} exceeds sum register capacity 2**{cfg.sum_int_bits}"
        )

    f, b = cfg.input_scale_exp, cfg.code_bits
    n_slices = -(-length // cfg.slice_len)
    codes = np.empty((n_rows, length), dtype=np.int64)
    slice_max = np.empty((n_rows, n_slices), dtype=np.int64)
    sum_raw = np.zeros(n_rows, dtype=np.int64)
    m = np.zeros(n_rows, dtype=np.int64)

    for s in range(n_slices):
        lo = s * cfg.slice_len
        hi = min(lo + cfg.slice_len, length)
        sl = rows[:, lo:hi]
        local_max = sl.max(axis=1)
        if s == 0:
            m = local_max
        else:
            m_new = np.maximum(m, local_max)
            # Shift before adding this slice's terms; log2exp(0) = 0 makes the
            # no-growth rows a no-op.
            sum_raw >>= log2exp(m - m_new, f, b)
            m = m_new
        codes[:, lo:hi] = log2exp(sl - m[:, None], f, b)
        sum_raw += (np.int64(1) << (cfg.sum_frac_bits - codes[:, lo:hi])).sum(axis=1)
        slice_max[:, s] = m

    assert int(sum_raw.max()) < 1 << (cfg.sum_int_bits + cfg.sum_frac_bits)
    return SoftmaxState(
        codes=codes.reshape(*lead, length),
        slice_max=slice_max.reshape(*lead, n_slices),
        global_max=m.reshape(lead),
        sum_raw=sum_raw.reshape(lead),
        config=cfg,
    )


def aldivision(k_total, sum_raw, cfg: SoftmaxConfig | None = None):
    """Shift-only division ``2**-k_total / sum`` with mean-error correction.

    The sum's leading-one position gives its exponent ``k_s``; the single bit
    below it, ``q``, selects between two pre-rounded output constants
    (0.818 for q=0, 0.568 for q=1 at 8 fraction bits), which fold in both the
    halving of ``2 - q + ...`` and the +0.636 expected-error correction.  The
    constant is right-shifted by ``k_total + k_s``, truncating; deep shifts
    underflow to 0.

    ``sum_raw`` is in ``2**-sum_frac_bits`` units and must be >= 1.0.
    Returns the quotient in ``2**-out_frac_bits`` units (scalars in, scalar out).
    """
    cfg = cfg or SoftmaxConfig()
    scalar = not isinstance(k_total, np.ndarray) and not isinstance(sum_raw, np.ndarray)
    k_total = np.asarray(k_total, dtype=np.int64)
    sum_raw = np.asarray(sum_raw, dtype=np.int64)
    if np.any(sum_raw < np.int64(1) << cfg.sum_frac_bits):
        raise ValueError("sum-below-one: divider requires sum >= 1")
    if np.any(k_total < 0):
        raise ValueError("k_total must be >= 0")

    p = bit_length(sum_raw) - 1
    k_s = p - cfg.sum_frac_bits
    q = (sum_raw >> (p - 1)) & 1
    c0, c1 = cfg.divider_constants
    c = np.where(q == 1, np.int64(c1), np.int64(c0))
    shift = np.minimum(clip(k_total, 0, K_TOTAL_MAX) + k_s, 63)
    out = c >> shift
    return int(out) if scalar else out


def stage2(state: SoftmaxState, cfg: SoftmaxConfig | None = None) -> np.ndarray:
    """Correct each code against the global max and divide by the final sum.

    Every element's total exponent is its Stage-1 code plus
    ``log2exp(slice_max - global_max)`` for the slice it arrived in, saturated
    to 6 bits, then pushed through the divider.  Outputs are unsigned fixed
    point in ``2**-out_frac_bits`` units.
    """
    cfg = cfg or state.config
    codes, lead = _as_rows(state.codes)
    n_rows, length = codes.shape
    slice_max = state.slice_max.reshape(n_rows, -1)
    g = state.global_max.reshape(n_rows)
    sum_raw = state.sum_raw.reshape(n_rows)
    f, b = cfg.input_scale_exp, cfg.code_bits

    sub = log2exp(slice_max - g[:, None], f, b)
    # Expand per-slice corrections back to element positions.
    per_elem = np.repeat(sub, cfg.slice_len, axis=1)[:, :length]
    k_total = clip(codes + per_elem, 0, K_TOTAL_MAX)
    out = aldivision(k_total, sum_raw[:, None], cfg)
    return out.reshape(*lead, length)


def e2softmax(x: np.ndarray, cfg: SoftmaxConfig | None = None) -> np.ndarray:
    """Both stages; returns raw outputs in ``2**-out_frac_bits`` units."""
    cfg = cfg or SoftmaxConfig()
    return stage2(stage1(x, cfg), cfg)


def e2softmax_real(x: np.ndarray, cfg: SoftmaxConfig | None = None) -> np.ndarray:
    """Both stages, outputs dequantized to float64 in [0, 1)."""
    cfg = cfg or SoftmaxConfig()
    return e2softmax(x, cfg) * 2.0**-cfg.out_frac_bits


def two_pass(x: np.ndarray, cfg: SoftmaxConfig | None = None) -> np.ndarray:
    """Reference variant that knows the global max up front.

    Encodes every element directly against the global max and accumulates the
    sum without any shift corrections, then divides.  Unlike the online path
    its codes (hence outputs) are permutation-equivariant; it is the natural
    baseline when streaming order effects are the thing under study.
    """
    cfg = cfg or SoftmaxConfig()
    rows, lead = _as_rows(x)
    length = rows.shape[1]
    if length > cfg.max_len:
        raise ValueError(
            f"vector length {length} exceeds sum register capacity 2**{cfg.sum_int_bits}"
        )
    codes = log2exp(rows - rows.max(axis=1, keepdims=True), cfg.input_scale_exp, cfg.code_bits)
    sum_raw = (np.int64(1) << (cfg.sum_frac_bits - codes)).sum(axis=1)
    out = aldivision(codes, sum_raw[:, None], cfg)
    return out.reshape(*lead, length)
