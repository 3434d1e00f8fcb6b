import numpy as np
import pytest

from simulst_latency import _delay as delay
from simulst_latency._delay import DelayMode
from simulst_latency._trace import derive_blocks


def test_mode_labels():
    assert [m.label for m in DelayMode] == ["CU", "CA", "CA*"]
    for mode in DelayMode:
        assert str(mode) == mode.value
        assert DelayMode.from_label(mode.label) is mode
        assert DelayMode.from_label(mode.value) is mode
        assert DelayMode.from_label(mode.name) is mode

    with pytest.raises(ValueError):
        DelayMode.from_label("CA**")


def test_cu_delays(mississippi, trace_of):
    assert delay.cu_delays(mississippi).values_ms == (1000, 1000, 2000, 2000, 3000, 3000)
    assert delay.cu_delays(trace_of([250], [])).values_ms == ()
    assert delay.cu_delays(trace_of([250] * 4, [(1000, 10)])).values_ms == (1000,)


def test_legacy_ca_delays(mississippi, trace_of):
    assert delay.legacy_ca_delays(mississippi).values_ms == (1500, 2000, 3500, 4000, 5500, 6000)
    assert delay.legacy_ca_delays(trace_of([2000], [(2000, 100), (2000, 200)])).values_ms == (
        2100,
        2200,
    )


def test_buffers(mississippi, trace_of):
    assert delay.buffers(mississippi, derive_blocks(mississippi)) == [0, 0, 0]

    backlog = trace_of([1000, 1000], [(1000, 3000)])
    assert delay.buffers(backlog, derive_blocks(backlog)) == [0, 2000]


def test_ca_star_delays(mississippi):
    result = delay.ca_star_delays(mississippi)
    assert result.mode is DelayMode.CA_STAR
    assert result.values_ms == (1500, 2000, 2500, 3000, 3500, 4000)
    assert result.inference_ms == (500, 1000, 500, 1000, 500, 1000)


def test_ca_star_empty_middle(empty_middle):
    assert delay.ca_star_delays(empty_middle).values_ms == (4000, 4500)


def test_ca_star_no_tokens(trace_of):
    result = delay.ca_star_delays(trace_of([1000], []))
    assert result.values_ms == ()
    assert len(result) == 0


@pytest.mark.parametrize("mode", list(DelayMode))
def test_delays_for_dispatch(mississippi, mode):
    result = delay.delays_for(mississippi, mode)
    assert result.mode is mode
    assert len(result) == mississippi.token_count


def test_zero_computation_collapse(trace_of):
    trace = trace_of([400, 600, 250], [(400, 0), (1000, 0), (1000, 0), (1250, 0)])
    cu = delay.cu_delays(trace).values_ms
    assert delay.legacy_ca_delays(trace).values_ms == cu
    assert delay.ca_star_delays(trace).values_ms == cu


def test_zero_computation_collapse_random(random_trace):
    rng = np.random.default_rng(31337)
    for _ in range(1000):
        trace = random_trace(rng, max_cost=0.0)
        cu = delay.cu_delays(trace).values_ms
        assert delay.legacy_ca_delays(trace).values_ms == cu
        assert delay.ca_star_delays(trace).values_ms == cu


def test_sandwich_and_monotonicity(random_trace):
    rng = np.random.default_rng(20240611)
    for _ in range(1000):
        trace = random_trace(rng)
        cu = np.asarray(delay.cu_delays(trace).values_ms)
        ca = np.asarray(delay.legacy_ca_delays(trace).values_ms)
        ca_star = np.asarray(delay.ca_star_delays(trace).values_ms)

        assert np.all(cu <= ca_star + 1e-9)
        assert np.all(ca_star <= ca + 1e-6)
        assert np.all(np.diff(ca_star) >= -1e-9)
        assert np.all(ca_star >= 0)


def test_buffers_bounded_by_computation(random_trace):
    rng = np.random.default_rng(99)
    for _ in range(1000):
        trace = random_trace(rng)
        blocks = derive_blocks(trace)
        last = trace.tokens[-1].computation_ts_ms if trace.tokens else 0.0
        assert blocks.buffers_ms[0] == 0
        assert all(0 <= b <= last + 1e-9 for b in blocks.buffers_ms)


@pytest.mark.parametrize("alpha", [0.5, 2.0, 1000.0])
def test_scale_equivariance(random_trace, trace_of, alpha):
    rng = np.random.default_rng(int(alpha * 10))
    for _ in range(1000):
        trace = random_trace(rng)
        scaled = trace_of(
            [s.duration_ms * alpha for s in trace.segments],
            [(t.cu_delay_ms * alpha, t.computation_ts_ms * alpha) for t in trace.tokens],
        )
        for mode in DelayMode:
            original = np.asarray(delay.delays_for(trace, mode).values_ms)
            rescaled = np.asarray(delay.delays_for(scaled, mode).values_ms)
            np.testing.assert_allclose(rescaled, original * alpha, rtol=1e-9, atol=1e-6)
