"""
Core evaluation APIs: score a stream of traces and average them over the corpus.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable, Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from simulst_latency._delay import DelayMode
from simulst_latency._metrics import LatencyReport, Metric, evaluate_instance
from simulst_latency._trace import Trace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvaluateOptions:
    """
    Settings that control the behavior of an `Evaluator` instance.
    """

    workers: int = 1
    """
    How many threads score instances concurrently. Reports are always yielded in input order.
    """

    deterministic: bool = False
    """
    Forces single-threaded evaluation, so runs are reproducible byte for byte.
    """


class Evaluator:
    """
    The core class of the `simulst_latency` API.

    For a set of delay modes and metrics, turn traces into latency reports.
    """

    def __init__(
        self,
        modes: Iterable[DelayMode] = tuple(DelayMode),
        metrics: Iterable[Metric] = tuple(Metric),
        options: EvaluateOptions = EvaluateOptions(),
        progress: Callable[[str], None] | None = None,
    ) -> None:
        """
        Create a new evaluator scoring the given `modes` with the given `metrics`.

        `progress`, when given, is called with a status message for each instance.
        """
        self._modes = tuple(modes)
        self._metrics = tuple(metrics)
        if not self._modes:
            raise ValueError("at least one delay mode is required")
        if not self._metrics:
            raise ValueError("at least one metric is required")
        self._options = options
        self._progress = progress

    @property
    def modes(self) -> tuple[DelayMode, ...]:
        """
        The delay modes this evaluator scores.
        """
        return self._modes

    @property
    def metrics(self) -> tuple[Metric, ...]:
        """
        The metrics this evaluator computes.
        """
        return self._metrics

    def _evaluate_one(self, trace: Trace) -> LatencyReport:
        if self._progress is not None:
            self._progress(f"Evaluating instance {trace.id}")
        return evaluate_instance(trace, self._modes, self._metrics)

    def evaluate(self, traces: Iterable[Trace]) -> Iterator[LatencyReport]:
        """
        Score every trace, yielding reports in input order.
        """
        workers = 1 if self._options.deterministic else max(1, self._options.workers)
        if workers == 1:
            for trace in traces:
                yield self._evaluate_one(trace)
            return

        logger.debug(f"evaluating with {workers} workers")
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # `map` preserves input order, which keeps output writing serialized.
            yield from pool.map(self._evaluate_one, traces)
