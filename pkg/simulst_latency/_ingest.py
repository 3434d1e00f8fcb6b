"""
Reading and writing evaluation logs in SimulEval's instance-log layout: one
JSON object per line, one line per instance.

The `elapsed` field is pinned to the CU delay plus the token's cumulative
computation time. A token's computation time is recovered from it by
subtraction unless the record carries an explicit `computation` list.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from typing import IO, Any

from simulst_latency._trace import (
    Malformed,
    SourceSegment,
    TokenEvent,
    Trace,
    validate_trace,
)
from simulst_latency._util import MS_TOLERANCE

logger = logging.getLogger(__name__)

UNKNOWN_TOKEN = "<unk>"
"""
Written in place of tokens whose text was never recorded.
"""

_REFERENCE_PLACEHOLDER = "<ref>"

_PRECISION = 3

# Upper bound on the segments a uniform `segment_ms` may tile the source into.
_MAX_SEGMENTS = 1_000_000


class IngestError(Exception):
    """
    Raised when a log record cannot be read or written.

    Concrete failures subclass this exception to provide more context.
    """

    def __init__(self, line: int, reason: str) -> None:
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class ParseError(IngestError):
    """
    An `IngestError` for lines that are not a JSON object.
    """

    pass


class SchemaError(IngestError):
    """
    An `IngestError` for records whose fields are missing, ill-typed or
    inconsistent with each other.
    """

    pass


class InvalidRecord(IngestError):
    """
    An `IngestError` for well-formed records that describe an impossible trace.
    """

    pass


def _as_ms(value: Any, line: int, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(line, f"field {name!r} must be numeric, not {value!r}")
    try:
        converted = float(value)
    except OverflowError:
        raise SchemaError(line, f"field {name!r} is out of range") from None
    if not math.isfinite(converted):
        raise SchemaError(line, f"field {name!r} must be finite")
    return converted


@enum.unique
class SegmentSource(str, enum.Enum):
    """
    Where a record's segment durations came from, in order of preference.
    """

    Explicit = "explicit"
    Uniform = "uniform"
    Inferred = "inferred"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class LogRecord:
    """
    One line of an evaluation log.
    """

    index: int
    prediction: str
    delays: list[float]
    elapsed: list[float]
    source_length: float
    reference: str
    computation: list[float] | None = None
    segment_ms: float | None = None
    segment_durations: list[float] | None = None

    @classmethod
    def from_json(cls, obj: Any, *, line: int) -> LogRecord:
        """
        Build a record from a decoded JSON object, checking field types and lengths.

        Unknown fields are ignored.
        """
        if not isinstance(obj, dict):
            raise SchemaError(line, f"expected a JSON object, got {type(obj).__name__}")

        def required(name: str) -> Any:
            if name not in obj:
                raise SchemaError(line, f"missing field {name!r}")
            return obj[name]

        def number(value: Any, name: str) -> float:
            return _as_ms(value, line, name)

        def numbers(value: Any, name: str) -> list[float]:
            if not isinstance(value, list):
                raise SchemaError(line, f"field {name!r} must be a list")
            return [number(v, name) for v in value]

        index = required("index")
        if isinstance(index, bool) or not isinstance(index, int):
            raise SchemaError(line, f"field 'index' must be an integer, not {index!r}")
        prediction = required("prediction")
        reference = obj.get("reference", "")
        if not isinstance(prediction, str) or not isinstance(reference, str):
            raise SchemaError(line, "fields 'prediction' and 'reference' must be strings")

        record = cls(
            index=index,
            prediction=prediction,
            delays=numbers(required("delays"), "delays"),
            elapsed=numbers(required("elapsed"), "elapsed"),
            source_length=number(required("source_length"), "source_length"),
            reference=reference,
            computation=(
                numbers(obj["computation"], "computation")
                if obj.get("computation") is not None
                else None
            ),
            segment_ms=(
                number(obj["segment_ms"], "segment_ms")
                if obj.get("segment_ms") is not None
                else None
            ),
            segment_durations=(
                numbers(obj["segment_durations"], "segment_durations")
                if obj.get("segment_durations") is not None
                else None
            ),
        )
        record._check(line)
        return record

    def _check(self, line: int) -> None:
        count = len(self.prediction.split())
        lengths = {"delays": len(self.delays), "elapsed": len(self.elapsed)}
        if self.computation is not None:
            lengths["computation"] = len(self.computation)
        for name, length in lengths.items():
            if length != count:
                raise SchemaError(
                    line, f"prediction has {count} tokens but {name!r} has {length} entries"
                )
        for i, (delay, elapsed) in enumerate(zip(self.delays, self.elapsed), start=1):
            if elapsed < delay:
                raise SchemaError(line, f"token {i}: elapsed {elapsed} precedes delay {delay}")
        if self.source_length <= 0:
            raise SchemaError(line, f"source_length must be positive, not {self.source_length}")

    def to_json(self) -> dict[str, Any]:
        """
        Render the record as a JSON-ready mapping, with a fixed key order.
        """
        obj: dict[str, Any] = {
            "index": self.index,
            "prediction": self.prediction,
            "delays": self.delays,
            "elapsed": self.elapsed,
        }
        if self.computation is not None:
            obj["computation"] = self.computation
        obj["source_length"] = self.source_length
        if self.segment_ms is not None:
            obj["segment_ms"] = self.segment_ms
        if self.segment_durations is not None:
            obj["segment_durations"] = self.segment_durations
        obj["reference"] = self.reference
        return obj

    @classmethod
    def from_trace(cls, trace: Trace, *, position: int) -> LogRecord:
        """
        Build the record for `trace`. Every millisecond value is rounded to 3 decimals.
        """

        def ms(value: float) -> float:
            return round(value, _PRECISION)

        index = int(trace.id) if trace.id.lstrip("-").isdigit() else position
        return cls(
            index=index,
            prediction=" ".join(t.text or UNKNOWN_TOKEN for t in trace.tokens),
            delays=[ms(t.cu_delay_ms) for t in trace.tokens],
            elapsed=[ms(t.cu_delay_ms + t.computation_ts_ms) for t in trace.tokens],
            computation=[ms(t.computation_ts_ms) for t in trace.tokens],
            source_length=ms(trace.total_source_ms),
            segment_durations=[ms(s.duration_ms) for s in trace.segments],
            reference=" ".join([_REFERENCE_PLACEHOLDER] * trace.reference_length),
        )


def infer_segments(record: LogRecord, *, line: int) -> tuple[list[float], SegmentSource]:
    """
    Work out a record's segment durations.

    An explicit list wins; otherwise a uniform segment size is tiled over the
    source (the last segment may be shorter); otherwise every distinct CU delay
    is taken as a segment boundary, completed to the source length.
    """
    if record.segment_durations:
        total = math.fsum(record.segment_durations)
        if abs(total - record.source_length) > MS_TOLERANCE:
            raise SchemaError(
                line,
                f"segment durations sum to {total} ms, not source_length {record.source_length}",
            )
        return list(record.segment_durations), SegmentSource.Explicit

    if record.segment_ms is not None:
        if record.segment_ms <= MS_TOLERANCE:
            raise SchemaError(
                line, f"segment_ms must exceed {MS_TOLERANCE} ms, not {record.segment_ms}"
            )
        # The last tile absorbs any remainder within tolerance of a full segment.
        tiles = max(1, math.ceil((record.source_length - MS_TOLERANCE) / record.segment_ms))
        if tiles > _MAX_SEGMENTS:
            raise SchemaError(line, f"segment_ms {record.segment_ms} yields {tiles} segments")
        durations = [record.segment_ms] * (tiles - 1)
        durations.append(record.source_length - record.segment_ms * (tiles - 1))
        return durations, SegmentSource.Uniform

    boundaries: list[float] = []
    for delay in sorted(set(record.delays)):
        if delay > record.source_length + MS_TOLERANCE:
            raise SchemaError(
                line, f"delay {delay} ms lies beyond source_length {record.source_length}"
            )
        if not boundaries or delay - boundaries[-1] > MS_TOLERANCE:
            boundaries.append(delay)
    if not boundaries or record.source_length - boundaries[-1] > MS_TOLERANCE:
        boundaries.append(record.source_length)

    durations = [b - a for a, b in zip([0.0, *boundaries], boundaries)]
    return durations, SegmentSource.Inferred


def record_to_trace(record: LogRecord, *, line: int) -> Trace:
    """
    Convert a checked record into a validated trace.

    Raises `InvalidRecord` when the resulting trace breaks a trace-model invariant.
    """
    durations, source = infer_segments(record, line=line)
    logger.debug(f"line {line}: segments from {source} rule ({len(durations)} segments)")

    if record.computation is not None:
        computation = record.computation
    else:
        # Subtraction of rounded values leaves float noise; logs carry at most
        # microsecond precision.
        computation = [round(e - d, 6) for d, e in zip(record.delays, record.elapsed)]

    tokens = tuple(
        TokenEvent(
            index=i,
            cu_delay_ms=delay,
            computation_ts_ms=c,
            text=None if text == UNKNOWN_TOKEN else text,
        )
        for i, (text, delay, c) in enumerate(
            zip(record.prediction.split(), record.delays, computation), start=1
        )
    )
    trace = Trace(
        id=str(record.index),
        segments=tuple(SourceSegment(d) for d in durations),
        tokens=tokens,
        reference_length=max(1, len(record.reference.split())),
    )
    try:
        return validate_trace(trace)
    except Malformed as exc:
        raise InvalidRecord(line, exc.reason) from exc


@dataclass(frozen=True)
class SkippedRecord:
    """
    A log line that was skipped under lenient parsing.
    """

    line: int
    reason: str


class LogReader:
    """
    Streams traces out of an evaluation log, one line at a time.
    """

    def __init__(self, stream: IO[str], *, lenient: bool = False) -> None:
        """
        Create a new `LogReader` over `stream`.

        With `lenient`, bad lines are logged, recorded in `skipped` and passed
        over; otherwise the first bad line raises its `IngestError`.
        """
        self._stream = stream
        self._lenient = lenient
        self.skipped: list[SkippedRecord] = []

    def read(self) -> Iterator[Trace]:
        """
        Yield a validated trace for each non-empty line, in file order.
        """
        for line_number, raw in enumerate(self._stream, start=1):
            if not raw.strip():
                continue
            try:
                yield self._parse_line(raw, line_number)
            except IngestError as exc:
                if not self._lenient:
                    raise
                logger.warning(f"skipping line {exc.line}: {exc.reason}")
                self.skipped.append(SkippedRecord(exc.line, exc.reason))

    def _parse_line(self, raw: str, line: int) -> Trace:
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(line, f"invalid JSON: {exc.msg}") from exc
        except RecursionError:
            raise ParseError(line, "invalid JSON: nested too deeply") from None
        return record_to_trace(LogRecord.from_json(obj, line=line), line=line)


def read_log(stream: IO[str], *, lenient: bool = False) -> list[Trace]:
    """
    Read every trace in `stream`. See `LogReader`.
    """
    return list(LogReader(stream, lenient=lenient).read())


def write_log(traces: Iterable[Trace], stream: IO[str]) -> int:
    """
    Write one record per trace to `stream`, returning the number written.

    The `computation` field is always written, so reading the log back does
    not depend on subtraction.
    """
    written = 0
    for position, trace in enumerate(traces):
        record = LogRecord.from_trace(trace, position=position)
        try:
            stream.write(json.dumps(record.to_json(), ensure_ascii=False) + "\n")
        except OSError as exc:
            raise IngestError(position + 1, f"instance {trace.id}: {exc}") from exc
        written += 1
    return written


def write_emission(emission: Iterable[tuple[str, Sequence[float]]], stream: IO[str]) -> int:
    """
    Write ground-truth emission times, one `{"index": ..., "emission": [...]}`
    line per instance, returning the number written.
    """
    written = 0
    for position, (instance_id, times) in enumerate(emission):
        index = int(instance_id) if instance_id.lstrip("-").isdigit() else position
        line = {"index": index, "emission": [round(t, _PRECISION) for t in times]}
        try:
            stream.write(json.dumps(line) + "\n")
        except OSError as exc:
            raise IngestError(position + 1, f"instance {instance_id}: {exc}") from exc
        written += 1
    return written


def read_emission(stream: IO[str]) -> dict[str, list[float]]:
    """
    Read a file written by `write_emission`, keyed by instance id.
    """
    emission: dict[str, list[float]] = {}
    for line_number, raw in enumerate(stream, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(line_number, f"invalid JSON: {exc.msg}") from exc
        except RecursionError:
            raise ParseError(line_number, "invalid JSON: nested too deeply") from None
        if not isinstance(obj, dict) or not isinstance(obj.get("emission"), list):
            raise SchemaError(line_number, "expected an object with an 'emission' list")
        emission[str(obj.get("index", line_number - 1))] = [
            _as_ms(t, line_number, "emission") for t in obj["emission"]
        ]
    return emission
