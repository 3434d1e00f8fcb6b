"""
Per-token delay sequences: computation-unaware (CU), legacy computation-aware
(CA), and corrected computation-aware (CA*).
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from simulst_latency._trace import (
    BlockStructure,
    Trace,
    carry_buffers,
    derive_blocks,
    validate_trace,
)
from simulst_latency._util import assert_never

logger = logging.getLogger(__name__)


@enum.unique
class DelayMode(str, enum.Enum):
    """
    The ways a token's delay can be measured.
    """

    CU = "cu"
    CA = "ca"
    CA_STAR = "ca-star"

    @property
    def label(self) -> str:
        """
        The mode's name as printed in reports.
        """
        if self is DelayMode.CU:
            return "CU"
        elif self is DelayMode.CA:
            return "CA"
        elif self is DelayMode.CA_STAR:
            return "CA*"
        else:
            assert_never(self)  # pragma: no cover

    @classmethod
    def from_label(cls, label: str) -> DelayMode:
        """
        Parse either a mode value (`ca-star`) or a report label (`CA*`).
        """
        for mode in cls:
            if label in {mode.value, mode.label, mode.name}:
                return mode
        raise ValueError(f"unknown delay mode: {label!r}")

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class DelaySequence:
    """
    The delays of every emitted token of one trace, under one mode.
    """

    mode: DelayMode
    values_ms: tuple[float, ...]
    inference_ms: tuple[float, ...] | None = None
    """
    Each token's inference time since its block began; only populated for CA*.
    """

    def __len__(self) -> int:
        return len(self.values_ms)


def cu_delays(trace: Trace) -> DelaySequence:
    """
    The theoretical delays: source audio consumed when each token was written.
    """
    validate_trace(trace)
    return DelaySequence(DelayMode.CU, trace.cu_delays_ms)


def legacy_ca_delays(trace: Trace) -> DelaySequence:
    """
    The legacy computation-aware delays, which add each token's cumulative
    computation timestamp on top of its CU delay.

    This treats reading and writing as if they happened one after the other,
    so computation from every earlier block is counted again.
    """
    validate_trace(trace)
    values = tuple(t.cu_delay_ms + t.computation_ts_ms for t in trace.tokens)
    return DelaySequence(DelayMode.CA, values)


def buffers(trace: Trace, blocks: BlockStructure) -> list[float]:
    """
    The generation backlog carried into each segment of `trace`.
    """
    return list(carry_buffers([s.duration_ms for s in trace.segments], blocks.block_inference_ms))


def ca_star_delays(trace: Trace) -> DelaySequence:
    """
    The corrected computation-aware delays.

    A token in block `j` becomes available once block `j` has started, which is
    the segment's arrival plus any backlog, and the block has spent the token's
    own inference time on it.
    """
    blocks = derive_blocks(trace)
    if not trace.tokens:
        return DelaySequence(DelayMode.CA_STAR, (), ())

    computation = np.asarray(trace.computation_ms, dtype=np.float64)
    segment_of = np.asarray(blocks.token_blocks, dtype=np.int64) - 1
    tau = np.asarray(blocks.tau, dtype=np.int64)

    # C_0 is zero, so the first block measures inference from the instance start.
    ts = np.concatenate(([0.0], computation))
    inference = computation - ts[tau[segment_of]]
    backlog = np.asarray(buffers(trace, blocks), dtype=np.float64)[segment_of]
    values = backlog + inference + np.asarray(trace.cu_delays_ms, dtype=np.float64)

    return DelaySequence(
        DelayMode.CA_STAR,
        tuple(values.tolist()),
        tuple(inference.tolist()),
    )


def delays_for(trace: Trace, mode: DelayMode) -> DelaySequence:
    """
    Compute `trace`'s delays under `mode`.
    """
    if mode is DelayMode.CU:
        return cu_delays(trace)
    elif mode is DelayMode.CA:
        return legacy_ca_delays(trace)
    elif mode is DelayMode.CA_STAR:
        return ca_star_delays(trace)
    else:
        assert_never(mode)  # pragma: no cover
