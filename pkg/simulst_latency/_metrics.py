"""
Aggregation of delay sequences into Average Lagging (AL) and Length-Adaptive
Average Lagging (LAAL), per instance and over a corpus.
"""

from __future__ import annotations

import enum
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from simulst_latency._delay import DelayMode, DelaySequence, delays_for
from simulst_latency._trace import Trace
from simulst_latency._util import MS_TOLERANCE, assert_never

logger = logging.getLogger(__name__)


class MetricError(Exception):
    """
    Raised when a latency metric cannot be computed, for any reason.
    """

    pass


class DegenerateInstance(MetricError):
    """
    A `MetricError` for instances with no reference tokens or no source audio.
    """

    pass


class EmptyHypothesis(MetricError):
    """
    A `MetricError` for instances where the system emitted nothing.
    """

    pass


class NoScorableInstances(MetricError):
    """
    A `MetricError` for corpora in which no instance produced a score.
    """

    pass


@enum.unique
class Metric(str, enum.Enum):
    """
    The lagging metrics this package computes.
    """

    AL = "AL"
    LAAL = "LAAL"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class OracleDelays:
    """
    The delays of an ideal system that emits its tokens uniformly over the source.
    """

    values_ms: tuple[float, ...]
    denominator: int


@dataclass(frozen=True)
class ModeScore:
    """
    One instance's scores under one delay mode. Unrequested metrics are `None`.
    """

    al_ms: float | None
    laal_ms: float | None
    cutoff_index: int


@dataclass(frozen=True)
class LatencyReport:
    """
    The scores of one instance, for every requested delay mode.

    A mode maps to `None` when the instance could not be scored (the system
    emitted no tokens).
    """

    instance_id: str
    scores: dict[DelayMode, ModeScore | None]
    token_count: int
    reference_length: int
    total_source_ms: float

    def is_scored(self) -> bool:
        """
        Check whether any mode produced a score for this instance.
        """
        return any(score is not None for score in self.scores.values())


@dataclass(frozen=True)
class ModeMean:
    """
    Corpus means for one delay mode.
    """

    al_ms: float | None
    laal_ms: float | None
    instances: int


@dataclass(frozen=True)
class CorpusAverage:
    """
    The unweighted per-instance means over a corpus.
    """

    means: dict[DelayMode, ModeMean]
    scored: int = 0
    skipped: int = 0


def oracle_delays(total_ms: float, ref_len: int, hyp_len: int, variant: Metric) -> OracleDelays:
    """
    The ideal delays for a hypothesis of `hyp_len` tokens.

    AL spreads the source over the reference length; LAAL spreads it over the
    longer of reference and hypothesis, so over-generation is not rewarded.
    """
    if ref_len < 1:
        raise DegenerateInstance(f"reference length must be positive, not {ref_len}")
    if total_ms <= 0:
        raise DegenerateInstance(f"source duration must be positive, not {total_ms}")

    if variant is Metric.AL:
        denominator = ref_len
    elif variant is Metric.LAAL:
        denominator = max(ref_len, hyp_len)
    else:
        assert_never(variant)  # pragma: no cover

    values = np.arange(hyp_len, dtype=np.float64) * total_ms / denominator
    return OracleDelays(tuple(values.tolist()), denominator)


def cutoff_index(delays: DelaySequence, total_ms: float) -> int:
    """
    The 1-based index of the first token whose delay reaches the end of the source.

    Falls back to the last token when no delay gets there.
    """
    if not delays.values_ms:
        raise EmptyHypothesis("no tokens to score")

    reached = np.flatnonzero(
        np.asarray(delays.values_ms, dtype=np.float64) >= total_ms - MS_TOLERANCE
    )
    if reached.size == 0:
        return len(delays)
    return int(reached[0]) + 1


def average_lagging(delays: DelaySequence, oracle: OracleDelays, cutoff: int) -> float:
    """
    The mean lag of `delays` behind `oracle` over the first `cutoff` tokens.
    """
    lags = np.asarray(delays.values_ms[:cutoff], dtype=np.float64) - np.asarray(
        oracle.values_ms[:cutoff], dtype=np.float64
    )
    return math.fsum(lags.tolist()) / cutoff


def score_delays(
    delays: DelaySequence,
    total_ms: float,
    reference_length: int,
    metrics: Iterable[Metric] = (Metric.AL, Metric.LAAL),
) -> ModeScore:
    """
    Score one delay sequence with its own cutoff.

    Raises `EmptyHypothesis` when the sequence is empty.
    """
    cutoff = cutoff_index(delays, total_ms)
    wanted = set(metrics)
    al = laal = None
    if Metric.AL in wanted:
        oracle = oracle_delays(total_ms, reference_length, len(delays), Metric.AL)
        al = average_lagging(delays, oracle, cutoff)
    if Metric.LAAL in wanted:
        oracle = oracle_delays(total_ms, reference_length, len(delays), Metric.LAAL)
        laal = average_lagging(delays, oracle, cutoff)
    return ModeScore(al_ms=al, laal_ms=laal, cutoff_index=cutoff)


def evaluate_instance(
    trace: Trace,
    modes: Iterable[DelayMode],
    metrics: Iterable[Metric] = (Metric.AL, Metric.LAAL),
) -> LatencyReport:
    """
    Score `trace` under each of `modes`.

    Every mode's cutoff is taken from that mode's own delays. An instance with
    no tokens is reported with null scores rather than raising.
    """
    metrics = tuple(metrics)
    scores: dict[DelayMode, ModeScore | None] = {}
    for mode in sorted(set(modes), key=list(DelayMode).index):
        delays = delays_for(trace, mode)
        try:
            scores[mode] = score_delays(
                delays, trace.total_source_ms, trace.reference_length, metrics
            )
        except EmptyHypothesis:
            logger.debug(f"instance {trace.id}: no tokens, {mode.label} left unscored")
            scores[mode] = None

    return LatencyReport(
        instance_id=trace.id,
        scores=scores,
        token_count=trace.token_count,
        reference_length=trace.reference_length,
        total_source_ms=trace.total_source_ms,
    )


def _mean(values: Sequence[float]) -> float | None:
    if not values:
        return None
    # fsum is exact, so the mean does not depend on the order reports arrive in.
    return math.fsum(values) / len(values)


def corpus_average(reports: Iterable[LatencyReport]) -> CorpusAverage:
    """
    Average per-instance scores over a corpus, skipping unscored instances.

    Raises `NoScorableInstances` when nothing was scored.
    """
    al: dict[DelayMode, list[float]] = {}
    laal: dict[DelayMode, list[float]] = {}
    counts: dict[DelayMode, int] = {}
    scored = skipped = 0

    for report in reports:
        if not report.is_scored():
            skipped += 1
            continue
        scored += 1
        for mode, score in report.scores.items():
            if score is None:
                continue
            counts[mode] = counts.get(mode, 0) + 1
            if score.al_ms is not None:
                al.setdefault(mode, []).append(score.al_ms)
            if score.laal_ms is not None:
                laal.setdefault(mode, []).append(score.laal_ms)

    if scored == 0:
        raise NoScorableInstances(
            f"no scorable instances ({skipped} skipped for having no tokens)"
        )

    means = {
        mode: ModeMean(
            al_ms=_mean(al.get(mode, [])),
            laal_ms=_mean(laal.get(mode, [])),
            instances=counts[mode],
        )
        for mode in sorted(counts, key=list(DelayMode).index)
    }
    return CorpusAverage(means=means, skipped=skipped, scored=scored)
