"""
Builders for the tables the CLI emits: per-instance latency reports, per-mode
comparisons, and scale studies. Also parses report CSVs back into reports.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import IO

from simulst_latency._delay import DelayMode, DelaySequence, delays_for
from simulst_latency._evaluate import Evaluator
from simulst_latency._format import Table
from simulst_latency._format.csv import FOOTER_PREFIX
from simulst_latency._format.interface import Cell
from simulst_latency._metrics import (
    CorpusAverage,
    LatencyReport,
    ModeMean,
    ModeScore,
    corpus_average,
    score_delays,
)
from simulst_latency._simulator import concat_scale
from simulst_latency._trace import Trace

logger = logging.getLogger(__name__)

CORPUS_ID = "<corpus>"
"""
The `instance_id` of corpus-average rows.
"""

ORACLE_LABEL = "oracle"
"""
The `mode` of rows scored on ground-truth emission times.
"""

REPORT_COLUMNS = (
    "instance_id",
    "mode",
    "AL_ms",
    "LAAL_ms",
    "cutoff",
    "tokens",
    "ref_len",
    "source_ms",
)

COMPARISON_COLUMNS = ("mode", "AL_ms", "LAAL_ms", "instances")

SCALE_COLUMNS = ("repeat", "mode", "AL_ms", "LAAL_ms", "last_delay_ms")


def report_table(reports: Sequence[LatencyReport], corpus: CorpusAverage) -> Table:
    """
    One row per instance and mode, followed by one corpus-average row per mode.

    Unscored instances get a row per mode with empty metric cells. The number of
    skipped instances goes in the footer.
    """
    rows: list[tuple[Cell, ...]] = []
    for report in reports:
        for mode, score in report.scores.items():
            rows.append(
                (
                    report.instance_id,
                    mode.label,
                    score.al_ms if score is not None else None,
                    score.laal_ms if score is not None else None,
                    score.cutoff_index if score is not None else None,
                    report.token_count,
                    report.reference_length,
                    report.total_source_ms,
                )
            )
    for mode, mean in corpus.means.items():
        rows.append((CORPUS_ID, mode.label, mean.al_ms, mean.laal_ms, None, mean.instances, None, None))
    return Table(columns=REPORT_COLUMNS, rows=rows, footer={"skipped": corpus.skipped})


@dataclass(frozen=True)
class ParsedReport:
    """
    A report CSV read back into its parts.
    """

    reports: list[LatencyReport]
    corpus: dict[DelayMode, ModeMean]
    footer: dict[str, str] = field(default_factory=dict)


def _optional_float(cell: str) -> float | None:
    return float(cell) if cell else None


def read_report(stream: IO[str]) -> ParsedReport:
    """
    Parse a report CSV written with `report_table`.

    Footer comment lines are collected separately. Raises `ValueError` on rows
    that don't fit the schema.
    """
    footer: dict[str, str] = {}
    body: list[str] = []
    for line in stream:
        if line.startswith(FOOTER_PREFIX):
            key, _, value = line[len(FOOTER_PREFIX) :].strip().partition("=")
            footer[key] = value
        elif line.strip():
            body.append(line)

    reader = csv.DictReader(body)
    if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
        raise ValueError(f"unexpected report columns: {reader.fieldnames}")

    order: list[str] = []
    grouped: dict[str, dict[str, str]] = {}
    scores: dict[str, dict[DelayMode, ModeScore | None]] = {}
    corpus: dict[DelayMode, ModeMean] = {}
    for row in reader:
        mode = DelayMode.from_label(row["mode"])
        if row["instance_id"] == CORPUS_ID:
            corpus[mode] = ModeMean(
                al_ms=_optional_float(row["AL_ms"]),
                laal_ms=_optional_float(row["LAAL_ms"]),
                instances=int(row["tokens"]),
            )
            continue

        instance = row["instance_id"]
        if instance not in grouped:
            order.append(instance)
            grouped[instance] = row
            scores[instance] = {}
        scores[instance][mode] = (
            ModeScore(
                al_ms=_optional_float(row["AL_ms"]),
                laal_ms=_optional_float(row["LAAL_ms"]),
                cutoff_index=int(row["cutoff"]),
            )
            if row["cutoff"]
            else None
        )

    reports = [
        LatencyReport(
            instance_id=instance,
            scores=scores[instance],
            token_count=int(grouped[instance]["tokens"]),
            reference_length=int(grouped[instance]["ref_len"]),
            total_source_ms=float(grouped[instance]["source_ms"]),
        )
        for instance in order
    ]
    return ParsedReport(reports=reports, corpus=corpus, footer=footer)


def comparison_table(
    corpus: CorpusAverage, oracle: ModeMean | None = None
) -> Table:
    """
    One row of corpus means per delay mode, plus an `oracle` row when
    ground-truth emission times were scored.
    """
    rows: list[tuple[Cell, ...]] = [
        (mode.label, mean.al_ms, mean.laal_ms, mean.instances) for mode, mean in corpus.means.items()
    ]
    if oracle is not None:
        rows.append((ORACLE_LABEL, oracle.al_ms, oracle.laal_ms, oracle.instances))
    return Table(columns=COMPARISON_COLUMNS, rows=rows, footer={"skipped": corpus.skipped})


def score_emission(
    traces: Iterable[Trace],
    emission: Mapping[str, Sequence[float]],
    evaluator: Evaluator,
) -> ModeMean:
    """
    Score ground-truth emission times the way CA* delays are scored, and
    average them over the corpus.

    Instances without an emission entry, or without tokens, are left out.
    """
    al: list[float] = []
    laal: list[float] = []
    for trace in traces:
        times = emission.get(trace.id)
        if not times or not trace.tokens:
            continue
        if len(times) != trace.token_count:
            raise ValueError(
                f"instance {trace.id}: {len(times)} emission times for {trace.token_count} tokens"
            )
        # Wrapped as CA* only to reuse the scoring path; CA* should match it exactly.
        sequence = DelaySequence(DelayMode.CA_STAR, tuple(times))
        score = score_delays(
            sequence, trace.total_source_ms, trace.reference_length, evaluator.metrics
        )
        if score.al_ms is not None:
            al.append(score.al_ms)
        if score.laal_ms is not None:
            laal.append(score.laal_ms)

    count = max(len(al), len(laal))
    return ModeMean(
        al_ms=math.fsum(al) / len(al) if al else None,
        laal_ms=math.fsum(laal) / len(laal) if laal else None,
        instances=count,
    )


def delay_dump(traces: Iterable[Trace], modes: Iterable[DelayMode]) -> Iterable[dict[str, object]]:
    """
    Yield one record per instance and mode holding its full delay sequence.
    CA* records also carry each token's inference time.
    """
    modes = tuple(modes)
    for trace in traces:
        for mode in modes:
            delays = delays_for(trace, mode)
            record: dict[str, object] = {
                "instance_id": trace.id,
                "mode": mode.label,
                "delays": list(delays.values_ms),
            }
            if delays.inference_ms is not None:
                record["inference"] = list(delays.inference_ms)
            yield record


@dataclass(frozen=True)
class ScaleRow:
    """
    Corpus results for one repeat count and one delay mode.
    """

    repeat: int
    mode: DelayMode
    al_ms: float | None
    laal_ms: float | None
    last_delay_ms: float


@dataclass(frozen=True)
class ScaleStudy:
    """
    The rows of a scale study and its growth check.
    """

    rows: list[ScaleRow]
    ca_outgrows_ca_star: bool | None
    """
    Whether the CA last-token delay grows strictly faster than CA*'s across
    consecutive repeats; `None` when either mode was not studied or there is
    only one repeat count.
    """

    divergence_ms: float | None
    """
    How much more the CA last-token delay grew than CA*'s between the first and last repeats.
    """

    skipped: int = 0


def scale_study(bases: Sequence[Trace], repeats: Sequence[int], evaluator: Evaluator) -> ScaleStudy:
    """
    Lengthen every base trace by concatenation for each repeat count, and score
    the lengthened corpus in every mode.

    `last_delay_ms` is the corpus mean of each instance's last-token delay.
    """
    if list(repeats) != sorted(repeats) or not repeats:
        raise ValueError(f"repeat counts must be a non-empty ascending list, not {list(repeats)}")

    rows: list[ScaleRow] = []
    last: dict[DelayMode, list[float]] = {}
    skipped = 0
    for repeat in repeats:
        scaled = [concat_scale(base, repeat) for base in bases]
        corpus = corpus_average(evaluator.evaluate(scaled))
        skipped = corpus.skipped
        for mode, mean in corpus.means.items():
            finals = [delays_for(t, mode).values_ms[-1] for t in scaled if t.tokens]
            last_delay = math.fsum(finals) / len(finals)
            last.setdefault(mode, []).append(last_delay)
            rows.append(ScaleRow(repeat, mode, mean.al_ms, mean.laal_ms, last_delay))

    ca, ca_star = last.get(DelayMode.CA), last.get(DelayMode.CA_STAR)
    if ca is None or ca_star is None or len(repeats) < 2:
        return ScaleStudy(rows, None, None, skipped)

    outgrows = all(
        (ca[i + 1] - ca[i]) > (ca_star[i + 1] - ca_star[i]) for i in range(len(ca) - 1)
    )
    divergence = (ca[-1] - ca[0]) - (ca_star[-1] - ca_star[0])
    logger.debug(f"scale study: CA outgrows CA* = {outgrows}, divergence {divergence} ms")
    return ScaleStudy(rows, outgrows, divergence, skipped)


def scale_table(study: ScaleStudy) -> Table:
    """
    One row per repeat count and mode, then a summary row for the growth check.
    """
    rows: list[tuple[Cell, ...]] = [
        (row.repeat, row.mode.label, row.al_ms, row.laal_ms, row.last_delay_ms) for row in study.rows
    ]
    footer: dict[str, Cell] = {"skipped": study.skipped}
    if study.ca_outgrows_ca_star is not None:
        rows.append(("summary", "CA-vs-CA*", None, None, study.divergence_ms))
        footer["ca_outgrows_ca_star"] = "yes" if study.ca_outgrows_ca_star else "no"
    return Table(columns=SCALE_COLUMNS, rows=rows, footer=footer)
