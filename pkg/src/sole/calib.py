"""Power-of-two-factor calibration for the integer kernels.

The layernorm kernel wants every channel on the same base grid, differing only
by a per-channel power-of-two factor: channel ``c`` quantizes as
``clip(round(x / (2**alpha_c * s)) + zp, 0, 2**bits - 1)`` with one shared
layer scale ``s`` and zero point.  These calibrators pick ``s``, ``zp``, the
``alpha`` exponents (exhaustive per-channel MSE search), and the
power-of-two input scale the softmax kernel runs at.

All of this is float-side preparation; the kernels themselves only ever see
the resulting integers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PTFParams",
    "calibrate_minmax",
    "calibrate_pow2",
    "calibrate_ptf",
    "quantize",
    "dequantize",
]


def _round_half_up(x):
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def _check_samples(x, min_dims: int = 1) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty-vector: calibration needs at least one sample")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite-input: calibration samples must be finite")
    if x.ndim < min_dims:
        raise ValueError(f"shape-error: need at least {min_dims} dims, got {x.ndim}")
    return x


@dataclass(frozen=True)
class PTFParams:
    """Shared layer scale/zero-point plus per-channel power-of-two exponents."""

    alphas: np.ndarray
    scale: float
    zp: int
    bits: int = 8

    def channel_scales(self) -> np.ndarray:
        return self.scale * np.exp2(self.alphas.astype(np.float64))

    def to_json(self) -> str:
        doc = {
            "alphas": [int(a) for a in np.asarray(self.alphas)],
            "bits": int(self.bits),
            "scale": float(self.scale),
            "zp": int(self.zp),
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PTFParams":
        doc = json.loads(text)
        return cls(
            alphas=np.asarray(doc["alphas"], dtype=np.int64),
            scale=float(doc["scale"]),
            zp=int(doc["zp"]),
            bits=int(doc["bits"]),
        )


def calibrate_minmax(samples, bits: int = 8) -> tuple[float, int]:
    """Plain asymmetric min/max calibration: ``(scale, zp)``.

    Constant input degenerates to ``scale=1`` with a mid-range zero point.
    """
    x = _check_samples(samples)
    lo, hi = float(x.min()), float(x.max())
    qmax = 2**bits - 1
    if hi == lo:
        return 1.0, 2 ** (bits - 1)
    scale = (hi - lo) / qmax
    zp = int(np.clip(_round_half_up(-lo / scale), 0, qmax))
    return scale, zp


def calibrate_pow2(samples) -> int:
    """Pick the softmax input scale exponent ``f`` (real = q * 2**-f).

    Only row-relative differences reach the kernel, so the constraint is that
    the most negative difference against each row's max still quantizes to a
    magnitude <= 255.  Returns the largest ``f`` in [0, 8] that fits; rows
    with no spread give the finest scale, 8.
    """
    x = _check_samples(samples)
    rows = x.reshape(-1, x.shape[-1]) if x.ndim > 1 else x.reshape(1, -1)
    spread = float((rows.max(axis=1) - rows.min(axis=1)).max())
    for f in range(8, -1, -1):
        if _round_half_up(spread * 2.0**f) <= 255:
            return f
    return 0


def calibrate_ptf(samples, bits: int = 8, alpha_max: int = 3) -> PTFParams:
    """Fit the power-of-two-factor scheme to ``(..., C)`` channel samples.

    The channel with the smallest nonzero range anchors the layer scale (its
    best case is ``alpha = 0``); the shared zero point comes from the global
    min at the smallest ``2**alpha`` multiple of that scale that spans the
    whole tensor.  Each channel then gets the ``alpha`` minimizing its
    reconstruction MSE, exhaustively over [0, alpha_max], ties to the smaller
    exponent.
    """
    x = _check_samples(samples, min_dims=2)
    flat = x.reshape(-1, x.shape[-1])
    qmax = 2**bits - 1

    ranges = flat.max(axis=0) - flat.min(axis=0)
    live = ranges > 0
    if not live.any():
        return PTFParams(
            alphas=np.zeros(flat.shape[1], dtype=np.int64),
            scale=1.0,
            zp=2 ** (bits - 1),
            bits=bits,
        )
    scale = float(ranges[live].min()) / qmax

    lo, hi = float(flat.min()), float(flat.max())
    alpha_cover = alpha_max
    for a in range(alpha_max + 1):
        if hi - lo <= qmax * scale * 2.0**a:
            alpha_cover = a
            break
    zp = int(np.clip(_round_half_up(-lo / (scale * 2.0**alpha_cover)), 0, qmax))

    mse = np.empty((alpha_max + 1, flat.shape[1]))
    for a in range(alpha_max + 1):
        sc = scale * 2.0**a
        q = np.clip(_round_half_up(flat / sc) + zp, 0, qmax)
        mse[a] = np.mean(((q - zp) * sc - flat) ** 2, axis=0)
    alphas = np.argmin(mse, axis=0).astype(np.int64)  # first hit = smallest alpha

    return PTFParams(alphas=alphas, scale=scale, zp=zp, bits=bits)


def quantize(x, params: PTFParams) -> np.ndarray:
    """Map real ``(..., C)`` values onto the 8-bit per-channel grid."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.alphas.shape[0]:
        raise ValueError(
            f"shape-error: {x.shape[-1]} channels vs {params.alphas.shape[0]} alphas"
        )
    q = _round_half_up(x / params.channel_scales()) + params.zp
    return np.clip(q, 0, 2**params.bits - 1).astype(np.uint8)


def dequantize(q, params: PTFParams) -> np.ndarray:
    """Back to reals: ``(q - zp) * 2**alpha_c * s``."""
    q = np.asarray(q, dtype=np.float64)
    return (q - params.zp) * params.channel_scales()
