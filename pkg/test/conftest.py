from __future__ import annotations

import numpy as np
import pytest

from simulst_latency._trace import SourceSegment, TokenEvent, Trace


def make_trace(durations, tokens, *, reference_length=None, id="0"):
    """
    Build a trace from segment durations and `(cu_delay_ms, computation_ts_ms)` pairs.
    """
    return Trace(
        id=id,
        segments=tuple(SourceSegment(d) for d in durations),
        tokens=tuple(TokenEvent(i, cu, c) for i, (cu, c) in enumerate(tokens, start=1)),
        reference_length=reference_length if reference_length is not None else max(1, len(tokens)),
    )


@pytest.fixture
def trace_of():
    return make_trace


@pytest.fixture
def mississippi():
    # Three one-second segments, two tokens written after each, 500 ms per token.
    return make_trace(
        [1000, 1000, 1000],
        [(1000, 500), (1000, 1000), (2000, 1500), (2000, 2000), (3000, 2500), (3000, 3000)],
    )


@pytest.fixture
def empty_middle():
    # The middle segment writes nothing while the first block is still generating.
    return make_trace([1000, 1000, 1000], [(1000, 3000), (3000, 3500)])


@pytest.fixture
def random_trace():
    """
    A factory for valid random traces: random segment durations, random block
    sizes (empty blocks included), and nondecreasing computation timestamps.
    """

    def _random_trace(
        rng: np.random.Generator, *, max_segments=30, max_cost=800.0, reference_padding=0, id="0"
    ):
        segments = int(rng.integers(1, max_segments + 1))
        durations = rng.integers(100, 2001, size=segments).astype(float).tolist()
        boundaries = np.cumsum(durations).tolist()
        tokens = []
        computation = 0.0
        for boundary, size in zip(boundaries, rng.integers(0, 4, size=segments).tolist()):
            for _ in range(size):
                computation += float(rng.uniform(0.0, max_cost))
                tokens.append((boundary, computation))
        return make_trace(
            durations, tokens, reference_length=max(1, len(tokens)) + reference_padding, id=id
        )

    return _random_trace
