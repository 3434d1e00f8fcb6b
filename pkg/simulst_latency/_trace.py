"""
The canonical data model for evaluation instances, and derivation of the
per-segment block structure that computation-aware delays are built on.

All times are milliseconds. A token's computation timestamp is the cumulative
*pure computation* time spent by the system up to and including that token,
not a wall-clock reading.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from simulst_latency._util import MS_TOLERANCE

logger = logging.getLogger(__name__)


class TraceError(Exception):
    """
    Raised when an evaluation instance cannot be used, for any reason.
    """

    pass


class Malformed(TraceError):
    """
    A `TraceError` for instances that violate the trace model's invariants.
    """

    def __init__(self, reason: str, *, trace_id: str | None = None) -> None:
        self.reason = reason
        self.trace_id = trace_id
        prefix = f"instance {trace_id}: " if trace_id is not None else ""
        super().__init__(f"{prefix}{reason}")


@dataclass(frozen=True)
class SourceSegment:
    """
    One raw audio segment of the source stream.
    """

    duration_ms: float


@dataclass(frozen=True)
class TokenEvent:
    """
    One emitted target token.
    """

    index: int
    """
    The token's 1-based position in the hypothesis.
    """

    cu_delay_ms: float
    """
    The computation-unaware delay: source audio consumed before this token was written.
    """

    computation_ts_ms: float
    """
    Cumulative computation time elapsed when this token was produced.
    """

    text: str | None = None


@dataclass(frozen=True)
class Trace:
    """
    One evaluation instance: the source segmentation, the tokens the system
    emitted, and the length of the reference translation.
    """

    id: str
    segments: tuple[SourceSegment, ...]
    tokens: tuple[TokenEvent, ...]
    reference_length: int

    @cached_property
    def boundaries_ms(self) -> tuple[float, ...]:
        """
        Arrival time of each segment's end, i.e. the prefix sums of segment durations.
        """
        return segment_boundaries([s.duration_ms for s in self.segments])

    @property
    def total_source_ms(self) -> float:
        """
        The duration of the whole source stream.
        """
        return self.boundaries_ms[-1] if self.boundaries_ms else 0.0

    @property
    def token_count(self) -> int:
        """
        The hypothesis length.
        """
        return len(self.tokens)

    @property
    def cu_delays_ms(self) -> tuple[float, ...]:
        """
        Each token's computation-unaware delay, in hypothesis order.
        """
        return tuple(t.cu_delay_ms for t in self.tokens)

    @property
    def computation_ms(self) -> tuple[float, ...]:
        """
        Each token's cumulative computation timestamp, in hypothesis order.
        """
        return tuple(t.computation_ts_ms for t in self.tokens)


@dataclass(frozen=True)
class BlockStructure:
    """
    The decomposition of a trace into per-segment blocks of tokens.

    Lists are indexed by segment, so `tau[0]` belongs to the first segment.
    """

    tau: tuple[int, ...]
    """
    For each segment, the index of the last token emitted before it was processed (0 for none).
    """

    block_inference_ms: tuple[float, ...]
    """
    For each segment, the computation spent on the tokens emitted while it was the latest read.
    """

    buffers_ms: tuple[float, ...]
    """
    For each segment, the generation backlog carried into it from earlier blocks.
    """

    token_blocks: tuple[int, ...]
    """
    For each token, the 1-based segment whose boundary its CU delay matches.
    """


def segment_boundaries(durations_ms: Sequence[float]) -> tuple[float, ...]:
    """
    Return the prefix sums of `durations_ms`.

    Every producer of segment arrival times goes through this function, so that
    arrival times computed from the same durations are bit-identical.
    """
    if not durations_ms:
        return ()
    return tuple(np.cumsum(np.asarray(durations_ms, dtype=np.float64)).tolist())


def token_blocks(trace: Trace) -> tuple[int, ...]:
    """
    Assign every token to the segment whose boundary its CU delay matches.

    Raises `Malformed` for a token whose CU delay is not within `MS_TOLERANCE`
    of any segment boundary.
    """
    if not trace.tokens:
        return ()

    boundaries = np.asarray(trace.boundaries_ms, dtype=np.float64)
    delays = np.asarray(trace.cu_delays_ms, dtype=np.float64)
    candidates = np.searchsorted(boundaries, delays - MS_TOLERANCE, side="left")

    blocks: list[int] = []
    for token, candidate in zip(trace.tokens, candidates.tolist()):
        if candidate >= len(boundaries) or (
            abs(boundaries[candidate] - token.cu_delay_ms) > MS_TOLERANCE
        ):
            raise Malformed(
                f"token {token.index} has CU delay {token.cu_delay_ms} ms, "
                "which is not a prefix sum of segment durations",
                trace_id=trace.id,
            )
        blocks.append(candidate + 1)
    return tuple(blocks)


def validate_trace(trace: Trace) -> Trace:
    """
    Check every trace-model invariant, returning `trace` unchanged on success.

    Raises `Malformed` on the first violation found.
    """
    if not trace.segments:
        raise Malformed("trace has no source segments", trace_id=trace.id)
    for position, segment in enumerate(trace.segments, start=1):
        if not math.isfinite(segment.duration_ms) or segment.duration_ms <= 0:
            raise Malformed(
                f"segment {position} has nonpositive duration {segment.duration_ms} ms",
                trace_id=trace.id,
            )
    if trace.reference_length < 1:
        raise Malformed(
            f"reference length must be positive, not {trace.reference_length}",
            trace_id=trace.id,
        )

    previous: TokenEvent | None = None
    for position, token in enumerate(trace.tokens, start=1):
        if token.index != position:
            raise Malformed(
                f"token at position {position} carries index {token.index}", trace_id=trace.id
            )
        if not math.isfinite(token.computation_ts_ms) or token.computation_ts_ms < 0:
            raise Malformed(
                f"token {position} has invalid computation timestamp {token.computation_ts_ms}",
                trace_id=trace.id,
            )
        if previous is not None:
            if token.computation_ts_ms < previous.computation_ts_ms:
                raise Malformed(
                    f"computation timestamps decrease at token {position} "
                    f"({previous.computation_ts_ms} -> {token.computation_ts_ms})",
                    trace_id=trace.id,
                )
            if token.cu_delay_ms < previous.cu_delay_ms:
                raise Malformed(
                    f"CU delays decrease at token {position} "
                    f"({previous.cu_delay_ms} -> {token.cu_delay_ms})",
                    trace_id=trace.id,
                )
        previous = token

    # Raises on any delay that misses every segment boundary, which also
    # rejects delays past the end of the source.
    token_blocks(trace)
    return trace


def carry_buffers(
    durations_ms: Sequence[float], block_inference_ms: Sequence[float]
) -> tuple[float, ...]:
    """
    Run the backlog recursion over a block decomposition.

    The first segment starts with an empty backlog. Each later segment inherits
    the previous backlog plus the previous block's computation, less whatever
    the new segment's own duration absorbs; backlogs never go negative.
    """
    buffers: list[float] = []
    for j, duration in enumerate(durations_ms):
        if j == 0:
            buffers.append(0.0)
            continue
        buffers.append(max(0.0, buffers[j - 1] + block_inference_ms[j - 1] - duration))
    return tuple(buffers)


def derive_blocks(trace: Trace) -> BlockStructure:
    """
    Decompose `trace` into per-segment blocks.

    `tau[j]` is the largest token index whose CU delay is at most the start of
    segment `j`. A block's inference total is the difference between the
    computation timestamps at consecutive `tau` values, with the final block
    running to the last token. Segments that emit nothing have a zero total.
    """
    validate_trace(trace)
    blocks = token_blocks(trace)
    segment_count = len(trace.segments)

    tau = np.searchsorted(
        np.asarray(blocks, dtype=np.int64), np.arange(segment_count), side="right"
    )
    tau_next = np.append(tau[1:], trace.token_count)

    # C_0 is zero: nothing has been computed before the first token.
    computation = np.concatenate(([0.0], np.asarray(trace.computation_ms, dtype=np.float64)))
    block_inference = computation[tau_next] - computation[tau]

    durations = [s.duration_ms for s in trace.segments]
    totals = tuple(block_inference.tolist())
    structure = BlockStructure(
        tau=tuple(tau.tolist()),
        block_inference_ms=totals,
        buffers_ms=carry_buffers(durations, totals),
        token_blocks=blocks,
    )
    logger.debug(f"instance {trace.id}: derived {segment_count} blocks, tau={structure.tau}")
    return structure
