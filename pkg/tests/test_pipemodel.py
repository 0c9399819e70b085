"""Tests for the first-order pipeline cycle model."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sole.pipemodel import PipeConfig, cycles_layernorm, cycles_softmax


class TestCyclesSoftmax:

    def test_single_row_single_beat(self):
        # 32 elements fill one beat; fill + drain + 2 latency cycles.
        assert cycles_softmax(32, 1) == 2 * 1 + 2

    def test_serial_doubles_beats_per_row(self):
        cfg = PipeConfig(pingpong=False)
        assert cycles_softmax(32, 1, cfg) == 1 * (2 * 1 + 2)
        assert cycles_softmax(32, 5, cfg) == 5 * (2 * 1 + 2)

    def test_frozen_attention_workload(self):
        # 785-token rows, 16 of them, 32 lanes: 25 beats per stage.
        assert cycles_softmax(785, 16) == 427
        assert cycles_softmax(785, 16, PipeConfig(pingpong=False)) == 832

    def test_pipelining_beats_serial(self):
        for rows in (1, 2, 16):
            assert cycles_softmax(100, rows) <= cycles_softmax(
                100, rows, PipeConfig(pingpong=False)
            )

    def test_amortization(self):
        # Per-row cost approaches one beat-group as the batch grows.
        per_row_2 = cycles_softmax(256, 2) / 2
        per_row_64 = cycles_softmax(256, 64) / 64
        assert per_row_64 < per_row_2

    @given(st.integers(1, 4096), st.integers(1, 64))
    def test_monotone_in_length_and_rows(self, n, rows):
        assert cycles_softmax(n + 1, rows) >= cycles_softmax(n, rows)
        assert cycles_softmax(n, rows + 1) > cycles_softmax(n, rows)

    @given(st.integers(1, 4096), st.integers(1, 32), st.integers(1, 6))
    def test_lane_doubling_speedup_bounded(self, n, rows, lanes_exp):
        # Doubling lanes helps, but never more than 2x.
        lanes = 1 << lanes_exp
        slow = cycles_softmax(n, rows, PipeConfig(vector_lanes=lanes // 2))
        fast = cycles_softmax(n, rows, PipeConfig(vector_lanes=lanes))
        assert fast <= slow
        assert slow <= 2 * fast


class TestCyclesLayernorm:

    def test_single_row(self):
        # Extra preprocess latency on top of the softmax profile.
        assert cycles_layernorm(32, 1) == 2 * 1 + 3

    def test_frozen_transformer_width(self):
        # 768 channels, 16 rows: 24 beats per stage.
        assert cycles_layernorm(768, 16) == 411
        assert cycles_layernorm(768, 16, PipeConfig(pingpong=False)) == 816

    def test_costs_more_than_softmax(self):
        for n, rows in ((64, 1), (768, 16)):
            assert cycles_layernorm(n, rows) > cycles_softmax(n, rows)

    @given(st.integers(1, 4096), st.integers(1, 64))
    def test_pingpong_never_loses(self, n, rows):
        serial = cycles_layernorm(n, rows, PipeConfig(pingpong=False))
        assert cycles_layernorm(n, rows) <= serial


class TestConfig:

    def test_beats_is_ceiling_division(self):
        cfg = PipeConfig(vector_lanes=32)
        assert cfg.beats(1) == 1
        assert cfg.beats(32) == 1
        assert cfg.beats(33) == 2

    def test_validation(self):
        with pytest.raises(ValueError):
            PipeConfig(vector_lanes=0)
        with pytest.raises(ValueError):
            PipeConfig(stage1_lat=0)
        with pytest.raises(ValueError):
            cycles_softmax(0, 1)
        with pytest.raises(ValueError):
            cycles_softmax(5, 0)
