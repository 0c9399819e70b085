"""Fixed-point primitives shared by the integer kernels.

Conventions used throughout the package:

* A fixed-point number is an integer ``raw`` interpreted as ``raw * 2**-frac_bits``.
* Right shifts are arithmetic (sign-propagating); Python ``>>`` and numpy's
  ``>>`` on signed integers both already behave this way.
* Rounding to nearest breaks ties toward +infinity -- the hardware idiom of
  adding half an ULP and then shifting.  ``round(-1.5) == -1``, ``round(1.5) == 2``.

Everything operates on plain ``int`` or ``numpy`` signed-integer arrays and is
exact; no floats are involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FixedVal",
    "round_shift_right",
    "clip",
    "leading_one",
    "bit_length",
]


@dataclass(frozen=True)
class FixedVal:
    """An exact fixed-point scalar: ``value = raw * 2**-frac_bits``."""

    raw: int
    frac_bits: int

    def __post_init__(self) -> None:
        if self.frac_bits < 0:
            raise ValueError(f"frac_bits must be >= 0, got {self.frac_bits}")

    @property
    def value(self) -> float:
        return self.raw * 2.0**-self.frac_bits

    def rounded(self, n: int) -> "FixedVal":
        """Drop ``n`` fraction bits, rounding ties toward +inf."""
        return FixedVal(round_shift_right(self.raw, n), self.frac_bits - n)

    def __repr__(self) -> str:  # 209/2^8 reads better than 0.81640625 in logs
        return f"FixedVal({self.raw}/2^{self.frac_bits} = {self.value!r})"


def round_shift_right(x, n: int):
    """Arithmetic right shift by ``n`` with round-to-nearest, ties toward +inf.

    Equivalent to ``round(x / 2**n)`` under the tie rule above, computed as the
    hardware does it: add ``2**(n-1)`` then shift.  ``n == 0`` is the identity.

    Accepts ``int`` or signed-integer ndarrays.
    """
    if n < 0:
        raise ValueError(f"shift amount must be >= 0, got {n}")
    if n == 0:
        return x
    half = 1 << (n - 1)
    if isinstance(x, np.ndarray):
        return (x + half) >> n
    return (int(x) + half) >> n


def clip(x, lo, hi):
    """Saturate ``x`` into ``[lo, hi]``; works on ints and ndarrays."""
    if isinstance(x, np.ndarray):
        return np.clip(x, lo, hi)
    return min(max(int(x), lo), hi)


def leading_one(x):
    """Index of the most significant set bit (0 for ``x == 1``).

    The hardware block this models is a leading-one detector, which has no
    defined output for zero; ``x <= 0`` raises ``ValueError('lod-zero: ...')``.
    """
    if isinstance(x, np.ndarray):
        if np.any(x <= 0):
            raise ValueError("lod-zero: leading_one undefined for values <= 0")
        return bit_length(x) - 1
    x = int(x)
    if x <= 0:
        raise ValueError(f"lod-zero: leading_one undefined for {x}")
    return x.bit_length() - 1


def bit_length(x: np.ndarray) -> np.ndarray:
    """Vectorized ``int.bit_length`` for non-negative int64 arrays.

    Smears the leading one downward then popcounts, which is exact for the
    full 63-bit positive range (unlike a float log2).
    """
    s = np.asarray(x, dtype=np.int64).copy()
    for k in (1, 2, 4, 8, 16, 32):
        s |= s >> k
    return np.bitwise_count(s).astype(np.int64)
