"""First-order cycle counts for the two-stage vector pipelines.

This is a throughput model, not a simulator: a stage consumes a vector in
``ceil(n / vector_lanes)`` beats plus a fixed latency, and with ping-pong
buffering Stage 2 of one row overlaps Stage 1 of the next, so a batch costs
one extra beat-group rather than double.  Good enough to reason about lane
scaling and batching; no contention or stalls are modeled.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["PipeConfig", "cycles_softmax", "cycles_layernorm"]


@dataclass(frozen=True)
class PipeConfig:
    vector_lanes: int = 32
    stage1_lat: int = 1
    stage2_lat: int = 1
    preprocess_lat: int = 1
    pingpong: bool = True

    def __post_init__(self) -> None:
        if self.vector_lanes < 1:
            raise ValueError(f"vector_lanes must be >= 1, got {self.vector_lanes}")
        if min(self.stage1_lat, self.stage2_lat, self.preprocess_lat) < 1:
            raise ValueError("stage latencies must be >= 1")

    def beats(self, n: int) -> int:
        return -(-n // self.vector_lanes)


def _cycles(n: int, rows: int, constants: int, cfg: PipeConfig) -> int:
    if n < 1 or rows < 1:
        raise ValueError(f"need n >= 1 and rows >= 1, got n={n} rows={rows}")
    b = cfg.beats(n)
    if cfg.pingpong:
        # Fill + drain: the two stages stream concurrently on alternating
        # buffers, so rows pipeline at one beat-group each.
        return (rows + 1) * b + constants
    return rows * (2 * b + constants)


def cycles_softmax(length: int, rows: int, cfg: PipeConfig | None = None) -> int:
    """Cycles to push ``rows`` softmax vectors of ``length`` through both stages."""
    cfg = cfg or PipeConfig()
    return _cycles(length, rows, cfg.stage1_lat + cfg.stage2_lat, cfg)


def cycles_layernorm(channels: int, rows: int, cfg: PipeConfig | None = None) -> int:
    """Like softmax, with the per-row mean/variance preprocess in between."""
    cfg = cfg or PipeConfig()
    constants = cfg.stage1_lat + cfg.preprocess_lat + cfg.stage2_lat
    return _cycles(channels, rows, constants, cfg)
