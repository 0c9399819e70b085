"""Integer layernorm end to end: calibrate, accumulate, normalize.

Builds a channel tensor whose ranges differ by up to 8x, fits the shared
scale / per-channel power-of-two exponents, and walks the quantized rows
through the integer pipeline, comparing each stage's fixed-point statistics
with their float counterparts.

Run: python3 demos/layernorm_walkthrough.py
"""

import numpy as np

from sole.ailayernorm import AffineParams, ailayernorm_real, preprocess, stage1
from sole.calib import calibrate_ptf, dequantize, quantize
from sole.oracle import compare, layernorm_ref, rng_from_seed


def main() -> None:
    rng = rng_from_seed(0)
    channels, rows = 64, 64
    spread = np.exp2(np.arange(channels) % 4).astype(np.float64)
    x = (rng.standard_normal((rows, channels)) + 0.3) * spread

    params = calibrate_ptf(x)
    counts = np.bincount(params.alphas, minlength=4)
    print(f"calibration: scale {params.scale:.5f}, zp {params.zp}")
    print(f"alpha histogram (0..3): {counts}  -- wider channels take larger exponents")

    xq = quantize(x, params)
    x_deq = dequantize(xq, params)
    print(f"quantization mean|err|: {np.abs(x_deq - x).mean():.5f}")

    state = stage1(xq, params.zp, params.alphas)
    stats = preprocess(state)
    mu_int = stats.mu_raw * 2.0**-16
    sigma_int = 1.0 / (stats.std_inv_raw * 2.0**-16)
    # The kernel works in base-scale units; fold the layer scale back in to
    # compare against float statistics of the dequantized input.
    print("\nrow statistics, integer pipeline vs float:")
    print(f"{'row':>4} {'mu (int)':>10} {'mu (float)':>11} {'sigma (int)':>12} {'sigma (float)':>14}")
    for r in range(4):
        print(
            f"{r:>4} {mu_int[r] * params.scale:>10.4f} {x_deq[r].mean():>11.4f}"
            f" {sigma_int[r] * params.scale:>12.4f} {x_deq[r].std():>14.4f}"
        )

    gamma = rng.uniform(0.5, 1.5, size=channels)
    beta = rng.normal(0.0, 0.1, size=channels)
    affine = AffineParams.from_real(gamma, beta, out_scale=1.0)
    ref = layernorm_ref(x_deq, affine.gamma_real, affine.beta_real)
    affine = AffineParams.from_real(gamma, beta, out_scale=float(np.abs(ref).max()) / 126.0)
    ref = layernorm_ref(x_deq, affine.gamma_real, affine.beta_real)

    out = ailayernorm_real(xq, params.zp, params.alphas, affine)
    rep = compare(out, ref)
    print(f"\nfull pipeline vs oracle: mean|err| {rep.mean_abs_err:.4f}, "
          f"max|err| {rep.max_abs_err:.4f} (outputs on an 8-bit grid)")


if __name__ == "__main__":
    main()
