"""Where the shift-only divider's error comes from, and what the constant fixes.

The divider approximates 1/sum by decomposing sum = 2**k * (1 + s) and keeping
only a 1-bit read of the mantissa s.  This script plots (in text) the
normalized error as a function of s, then confirms by Monte Carlo that folding
1.636 into the output constants moves the mean error from -0.64 to ~0.

Run: python3 demos/divider_bias.py
"""

import numpy as np

from sole.oracle import POST_BIAS_EXACT, PRE_BIAS_EXACT, aldivision_bias_mc


def main() -> None:
    print("normalized divider error vs mantissa fraction s")
    print(f"{'s':>6} {'pre-correction':>15} {'post-correction':>16}")
    for s in np.linspace(0.0, 0.96, 13):
        q = np.floor(2 * s) / 2  # the 1-bit mantissa read: 0 or 1/2
        pre = (s - 1 - q * (1 + s)) / (1 + s)
        post = (1.636 - q) - 2 / (1 + s)
        print(f"{s:6.2f} {pre:15.4f} {post:16.4f}")

    print("\nMonte-Carlo means over s ~ U[0,1):")
    for n in (10_000, 100_000, 1_000_000):
        est = aldivision_bias_mc(n=n, seed=0)
        print(
            f"  n={n:>9,}  pre {est.pre:+.5f} (+/-{1.96 * est.pre_stderr:.5f})"
            f"  post {est.post:+.6f} (+/-{1.96 * est.post_stderr:.6f})"
        )
    print(f"\nclosed forms:  pre {PRE_BIAS_EXACT:+.5f}   post {POST_BIAS_EXACT:+.6f}")
    print("the correction buys ~3 orders of magnitude on the mean.")


if __name__ == "__main__":
    main()
