"""
A deterministic discrete-event simulation of a simultaneous translation
system's read/write loop.

Speech arrives on its own clock. A single, non-preemptive generation worker
writes each block's tokens in order, starting a block only once its segment
has arrived and the previous block is finished. Time is logical: nothing
sleeps.
"""

from __future__ import annotations

import heapq
import logging
import math
from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass
from itertools import count

import numpy as np

from simulst_latency._delay import DelayMode, delays_for
from simulst_latency._trace import (
    SourceSegment,
    TokenEvent,
    Trace,
    segment_boundaries,
    token_blocks,
    validate_trace,
)

from .interface import ComputeModel, InvalidCompute, Policy, SimulationError, SimulationOutcome

logger = logging.getLogger(__name__)

# Completions sort before arrivals at the same instant.
_DONE, _ARRIVAL = range(2)


def simulate(
    segments: Sequence[float],
    policy: Policy,
    compute: ComputeModel,
    *,
    instance_id: str = "0",
    reference_length: int | None = None,
) -> SimulationOutcome:
    """
    Run the read/write loop over a source of the given segment durations.

    The trace records each token's CU delay as its segment's arrival time and
    its computation timestamp as the running total of inference costs, without
    any waiting. The outcome also carries the time each token truly became
    available. `reference_length` defaults to the number of tokens written.
    """
    if not segments:
        raise SimulationError("cannot simulate an empty source")
    for position, duration in enumerate(segments, start=1):
        if not math.isfinite(duration) or duration <= 0:
            raise SimulationError(f"segment {position} has nonpositive duration {duration} ms")

    sizes = policy.block_sizes(len(segments))
    costs = compute.costs(sum(sizes))
    if any(c < 0 for c in costs):
        raise InvalidCompute("compute model produced a negative cost")
    arrivals = segment_boundaries(segments)

    sequence = count()
    events: list[tuple[float, int, int, int]] = [
        (arrival, _ARRIVAL, next(sequence), j) for j, arrival in enumerate(arrivals)
    ]
    heapq.heapify(events)

    remaining = iter(costs)
    pending: deque[tuple[int, float]] = deque()
    busy = False
    computation = 0.0
    tokens: list[TokenEvent] = []
    emission: list[float] = []
    in_flight: tuple[int, float] | None = None

    while events:
        now, kind, _, segment = heapq.heappop(events)
        if kind == _ARRIVAL:
            for _ in range(sizes[segment]):
                pending.append((segment, next(remaining)))
        else:
            assert in_flight is not None
            written_for, cost = in_flight
            computation += cost
            tokens.append(
                TokenEvent(
                    index=len(tokens) + 1,
                    cu_delay_ms=arrivals[written_for],
                    computation_ts_ms=computation,
                )
            )
            emission.append(now)
            busy = False

        if not busy and pending:
            in_flight = pending.popleft()
            busy = True
            heapq.heappush(events, (now + in_flight[1], _DONE, next(sequence), in_flight[0]))

    trace = Trace(
        id=instance_id,
        segments=tuple(SourceSegment(d) for d in segments),
        tokens=tuple(tokens),
        reference_length=reference_length if reference_length is not None else max(1, len(tokens)),
    )
    logger.debug(
        f"instance {instance_id}: simulated {len(tokens)} tokens over {len(segments)} segments, "
        f"last token at {emission[-1] if emission else 0.0} ms"
    )
    return SimulationOutcome(trace=trace, emission_wall_ms=tuple(emission))


def wall_clock_oracle(trace: Trace) -> list[float]:
    """
    Replay `trace`'s blocks on a single generation worker and return the time
    each token became available.

    This walks the event model directly, one token at a time, and deliberately
    shares nothing with the corrected delay computation it is used to check.
    """
    validate_trace(trace)
    clock = 0.0
    current_block = 0
    previous_computation = 0.0
    emission: list[float] = []
    for token, block in zip(trace.tokens, token_blocks(trace)):
        if block != current_block:
            # A block starts when its segment has arrived and the worker is free.
            clock = max(token.cu_delay_ms, clock)
            current_block = block
        clock += token.computation_ts_ms - previous_computation
        previous_computation = token.computation_ts_ms
        emission.append(clock)
    return emission


def concat_scale(base: Trace, repeats: int) -> Trace:
    """
    Build a longer instance by playing `base` back to back `repeats` times.

    Each copy's CU delays are shifted by the source duration before it and its
    computation timestamps by the computation spent before it.
    """
    if repeats < 1:
        raise SimulationError(f"repeat count must be at least 1, not {repeats}")
    validate_trace(base)
    if repeats == 1:
        return base

    total = base.total_source_ms
    computed = base.tokens[-1].computation_ts_ms if base.tokens else 0.0
    tokens = [
        TokenEvent(
            index=r * base.token_count + t.index,
            cu_delay_ms=t.cu_delay_ms + r * total,
            computation_ts_ms=t.computation_ts_ms + r * computed,
            text=t.text,
        )
        for r in range(repeats)
        for t in base.tokens
    ]
    return Trace(
        id=base.id,
        segments=base.segments * repeats,
        tokens=tuple(tokens),
        reference_length=base.reference_length * repeats,
    )


def draw_durations(
    segment_count: int, lo_ms: float, hi_ms: float, *, seed: int
) -> list[float]:
    """
    Draw `segment_count` segment durations uniformly from `[lo_ms, hi_ms]`,
    rounded to whole milliseconds, from a PCG64 generator seeded with `seed`.
    """
    if lo_ms <= 0 or hi_ms < lo_ms:
        raise SimulationError(f"invalid segment duration range [{lo_ms}, {hi_ms}]")
    rng = np.random.Generator(np.random.PCG64(seed & 0xFFFF_FFFF_FFFF_FFFF))
    drawn: list[float] = np.maximum(
        1.0, np.round(rng.uniform(lo_ms, hi_ms, size=segment_count))
    ).tolist()
    return drawn


@dataclass(frozen=True)
class CompletionGap:
    """
    How far one mode's last-token delay is from the true completion time.
    """

    mode: DelayMode
    last_delay_ms: float
    completion_ms: float

    @property
    def difference_ms(self) -> float:
        """
        The signed gap; positive when the delay overstates completion.
        """
        return self.last_delay_ms - self.completion_ms

    @property
    def relative_percent(self) -> float:
        """
        The signed gap as a percentage of the true completion time.
        """
        if self.completion_ms == 0:
            return 0.0
        return 100.0 * self.difference_ms / self.completion_ms


def completion_gap(trace: Trace, emission_wall_ms: Sequence[float]) -> dict[DelayMode, CompletionGap]:
    """
    Compare every mode's last-token delay with the last true emission time.

    Returns an empty mapping for an instance with no tokens.
    """
    if not trace.tokens:
        return {}
    completion = emission_wall_ms[-1]
    return {
        mode: CompletionGap(mode, delays_for(trace, mode).values_ms[-1], completion)
        for mode in DelayMode
    }
