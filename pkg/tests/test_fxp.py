"""Tests for the fixed-point primitives."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sole.fxp import FixedVal, bit_length, clip, leading_one, round_shift_right


class TestRoundShiftRight:
    """Round-to-nearest with ties toward +inf, as add-half-then-shift."""

    def test_worked_examples(self):
        # 3/2 rounds up to 2; -3/2 rounds up to -1; 5/4 rounds down to 1.
        assert round_shift_right(3, 1) == 2
        assert round_shift_right(-3, 1) == -1
        assert round_shift_right(5, 2) == 1

    def test_zero_shift_is_identity(self):
        assert round_shift_right(7, 0) == 7
        assert round_shift_right(-7, 0) == -7

    def test_negative_shift_rejected(self):
        with pytest.raises(ValueError):
            round_shift_right(1, -1)

    def test_array_matches_scalar(self):
        x = np.arange(-40, 40, dtype=np.int64)
        got = round_shift_right(x, 3)
        want = np.array([round_shift_right(int(v), 3) for v in x])
        np.testing.assert_array_equal(got, want)

    @given(st.integers(-(2**40), 2**40), st.integers(1, 16))
    def test_matches_tie_up_rounding(self, x, n):
        # Reference: round(x / 2**n) with exact halves going toward +inf.
        num, den = x, 1 << n
        q, r = divmod(num, den)
        want = q + (1 if 2 * r >= den else 0)
        assert round_shift_right(x, n) == want

    @given(st.integers(-(2**40), 2**40), st.integers(1, 16))
    def test_error_at_most_half_ulp(self, x, n):
        got = round_shift_right(x, n)
        assert abs(got * (1 << n) - x) <= 1 << (n - 1)


class TestClip:

    def test_scalar(self):
        assert clip(5, 0, 3) == 3
        assert clip(-1, 0, 3) == 0
        assert clip(2, 0, 3) == 2

    def test_array(self):
        x = np.array([-5, 0, 5, 20])
        np.testing.assert_array_equal(clip(x, 0, 15), [0, 0, 5, 15])


class TestLeadingOne:

    def test_small_values(self):
        assert leading_one(1) == 0
        assert leading_one(0b101101) == 5
        assert leading_one(2**31) == 31

    def test_zero_and_negative_raise(self):
        with pytest.raises(ValueError, match="lod-zero"):
            leading_one(0)
        with pytest.raises(ValueError, match="lod-zero"):
            leading_one(-3)
        with pytest.raises(ValueError, match="lod-zero"):
            leading_one(np.array([4, 0, 2]))

    def test_array_agrees_with_floor_log2(self):
        x = np.arange(1, 2**20, dtype=np.int64)
        np.testing.assert_array_equal(
            leading_one(x), np.floor(np.log2(x)).astype(np.int64)
        )

    @given(st.integers(1, 2**62))
    def test_brackets_value(self, x):
        p = leading_one(x)
        assert (1 << p) <= x < (1 << (p + 1))


class TestBitLength:

    def test_matches_python_bit_length(self):
        x = np.array([0, 1, 2, 3, 255, 256, 2**40 - 1, 2**62], dtype=np.int64)
        want = [int(v).bit_length() for v in x]
        np.testing.assert_array_equal(bit_length(x), want)

    @given(st.lists(st.integers(0, 2**62), min_size=1, max_size=32))
    def test_random_values(self, vals):
        x = np.array(vals, dtype=np.int64)
        want = [v.bit_length() for v in vals]
        np.testing.assert_array_equal(bit_length(x), want)


class TestFixedVal:

    def test_value(self):
        assert FixedVal(209, 8).value == 209 / 256
        assert FixedVal(-3, 1).value == -1.5

    def test_rounded_drops_frac_bits(self):
        v = FixedVal(209, 8).rounded(4)
        assert v == FixedVal(13, 4)
        assert v.value == 13 / 16

    def test_negative_frac_bits_rejected(self):
        with pytest.raises(ValueError):
            FixedVal(1, -1)

    def test_repr_shows_raw_and_value(self):
        assert repr(FixedVal(209, 8)) == "FixedVal(209/2^8 = 0.81640625)"
