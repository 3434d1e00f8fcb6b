"""
Command-line entrypoints for `simulst-latency`.
"""

from __future__ import annotations

import argparse
import enum
import json
import logging
import math
import os
import sys
from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from typing import IO, NoReturn

from simulst_latency import __version__
from simulst_latency._config import ConfigError, RunConfig, apply_config, load_config
from simulst_latency._delay import DelayMode
from simulst_latency._evaluate import EvaluateOptions, Evaluator
from simulst_latency._format import ColumnsFormat, CsvFormat, RecordsFormat, ReportFormat, Table
from simulst_latency._ingest import (
    IngestError,
    LogReader,
    read_emission,
    write_emission,
    write_log,
)
from simulst_latency._metrics import Metric, MetricError, corpus_average
from simulst_latency._report import (
    comparison_table,
    delay_dump,
    report_table,
    scale_study,
    scale_table,
    score_emission,
)
from simulst_latency._simulator import (
    SimulationError,
    SimulationOutcome,
    WaitKStrideN,
    completion_gap,
    draw_durations,
    parse_compute,
    simulate,
)
from simulst_latency._state import ProgressSpinner
from simulst_latency._trace import Trace, TraceError
from simulst_latency._util import assert_never, plural

logging.basicConfig()
logger = logging.getLogger(__name__)

# NOTE: We configure the top package logger, rather than the root logger,
# to avoid overly verbose logging in third-party code by default.
package_logger = logging.getLogger("simulst_latency")
package_logger.setLevel(os.environ.get("SIMULST_LATENCY_LOGLEVEL", "INFO").upper())

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


@contextmanager
def _output_io(name: Path) -> Iterator[IO[str]]:  # pragma: no cover
    """
    A context managing wrapper for the `--output` flag. The file is only
    created once there is something to write to it.
    """
    if str(name) in {"stdout", "-"}:
        yield sys.stdout
    else:
        with name.open("w", encoding="utf-8") as io:
            yield io


@contextmanager
def _input_io(name: Path) -> Iterator[IO[str]]:  # pragma: no cover
    """
    Like `_output_io`, for `--input`: `-` reads standard input.
    """
    if str(name) == "-":
        yield sys.stdin
    else:
        with name.open("r", encoding="utf-8") as io:
            yield io


@enum.unique
class OutputFormatChoice(str, enum.Enum):
    """
    Report formats supported by the `simulst-latency` CLI.
    """

    Csv = "csv"
    Records = "records"
    Columns = "columns"

    def to_format(self) -> ReportFormat:
        if self is OutputFormatChoice.Csv:
            return CsvFormat()
        elif self is OutputFormatChoice.Records:
            return RecordsFormat()
        elif self is OutputFormatChoice.Columns:
            return ColumnsFormat()
        else:
            assert_never(self)  # pragma: no cover

    def __str__(self) -> str:
        return self.value


@enum.unique
class DelayModeChoice(str, enum.Enum):
    """
    Delay modes selectable with `--modes`.
    """

    Cu = "cu"
    Ca = "ca"
    CaStar = "ca-star"

    def to_mode(self) -> DelayMode:
        if self is DelayModeChoice.Cu:
            return DelayMode.CU
        elif self is DelayModeChoice.Ca:
            return DelayMode.CA
        elif self is DelayModeChoice.CaStar:
            return DelayMode.CA_STAR
        else:
            assert_never(self)  # pragma: no cover

    def __str__(self) -> str:
        return self.value


@enum.unique
class MetricChoice(str, enum.Enum):
    """
    Metrics selectable with `--metrics`.
    """

    Al = "al"
    Laal = "laal"

    def to_metric(self) -> Metric:
        if self is MetricChoice.Al:
            return Metric.AL
        elif self is MetricChoice.Laal:
            return Metric.LAAL
        else:
            assert_never(self)  # pragma: no cover

    def __str__(self) -> str:
        return self.value


@enum.unique
class ProgressSpinnerChoice(str, enum.Enum):
    """
    Whether or not `simulst-latency` should display a progress spinner.
    """

    On = "on"
    Off = "off"

    def __bool__(self) -> bool:
        return self is ProgressSpinnerChoice.On

    def __str__(self) -> str:
        return self.value


def _enum_help(msg: str, e: type[enum.Enum]) -> str:  # pragma: no cover
    """
    Render a `--help`-style string for the given enumeration.
    """
    return f"{msg} (choices: {', '.join(str(v) for v in e)})"


def _mode_list(text: str) -> list[DelayModeChoice]:
    """
    Parse `--modes`: comma-separated mode names, in either `ca-star` or `CA*` spelling.
    """
    choices: list[DelayModeChoice] = []
    for item in filter(None, (part.strip() for part in text.split(","))):
        try:
            choice = DelayModeChoice(DelayMode.from_label(item).value)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
        if choice not in choices:
            choices.append(choice)
    return choices


def _metric_list(text: str) -> list[MetricChoice]:
    choices: list[MetricChoice] = []
    for item in filter(None, (part.strip().lower() for part in text.split(","))):
        try:
            choice = MetricChoice(item)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"unknown metric: {item!r}") from exc
        if choice not in choices:
            choices.append(choice)
    return choices


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, not {text!r}") from exc


def _ms_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected lo,hi milliseconds, not {text!r}") from exc
    return lo, hi


class _ArgumentParser(argparse.ArgumentParser):
    """
    An `ArgumentParser` whose usage errors exit with `EXIT_USAGE`.
    """

    def error(self, message: str) -> NoReturn:  # pragma: no cover
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fatal(msg: str, code: int = EXIT_USAGE) -> NoReturn:  # pragma: no cover
    """
    Log a fatal error to the standard error stream and exit.
    """
    # NOTE: We buffer the logger when the progress spinner is active,
    # ensuring that the fatal message is formatted on its own line.
    logger.error(msg)
    sys.exit(code)


def _base_args() -> argparse.ArgumentParser:
    """
    Flags every command takes.
    """
    base = argparse.ArgumentParser(add_help=False)
    base.add_argument(
        "-o",
        "--output",
        type=Path,
        metavar="FILE",
        help="output the report or log to the given file",
        default="stdout",
    )
    base.add_argument(
        "--modes",
        type=_mode_list,
        default="cu,ca,ca-star",
        metavar="MODES",
        help=_enum_help("comma-separated delay modes to score", DelayModeChoice),
    )
    base.add_argument(
        "--progress-spinner",
        type=ProgressSpinnerChoice,
        choices=ProgressSpinnerChoice,
        default=os.environ.get("SIMULST_LATENCY_PROGRESS_SPINNER", ProgressSpinnerChoice.On),
        help="display a progress spinner",
    )
    base.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="run with additional debug logging; supply multiple times to increase verbosity",
    )
    base.add_argument(
        "--config",
        type=Path,
        metavar="FILE",
        help="a TOML file of flag defaults, in a [simulst-latency] table",
    )
    return base


def _report_args(format_default: OutputFormatChoice) -> argparse.ArgumentParser:
    """
    Flags for commands that score traces and emit a report table.
    """
    report = argparse.ArgumentParser(add_help=False)
    report.add_argument(
        "-f",
        "--format",
        type=OutputFormatChoice,
        choices=OutputFormatChoice,
        default=os.environ.get("SIMULST_LATENCY_FORMAT", format_default),
        metavar="FORMAT",
        help=_enum_help("the format to emit reports in", OutputFormatChoice),
    )
    report.add_argument(
        "--metrics",
        type=_metric_list,
        default="al,laal",
        metavar="METRICS",
        help=_enum_help("comma-separated metrics to compute", MetricChoice),
    )
    report.add_argument(
        "--lenient",
        action="store_true",
        help="skip and count malformed log lines instead of failing on the first one",
    )
    report.add_argument(
        "--deterministic",
        action="store_true",
        help="evaluate on a single thread, so repeated runs produce identical output",
    )
    report.add_argument(
        "--workers",
        type=int,
        default=1,
        metavar="N",
        help="how many threads score instances concurrently",
    )
    return report


def _simulation_args() -> argparse.ArgumentParser:
    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument(
        "--policy",
        default="4,3",
        metavar="K,N",
        help="wait-k-stride-n policy: read K segments, then write N tokens per segment",
    )
    sim.add_argument(
        "--tail-tokens",
        type=int,
        default=0,
        metavar="N",
        help="tokens written after the last segment, on top of the policy's stride",
    )
    sim.add_argument(
        "--segments",
        type=int,
        default=100,
        metavar="COUNT",
        help="number of source segments per instance",
    )
    sim.add_argument(
        "--segment-ms",
        type=float,
        default=250.0,
        metavar="MS",
        help="duration of every source segment",
    )
    sim.add_argument(
        "--segment-range",
        type=_ms_range,
        metavar="LO,HI",
        help="draw each segment's duration uniformly from [LO, HI] ms instead of using --segment-ms",
    )
    sim.add_argument(
        "--compute",
        default="constant:30",
        metavar="MODEL",
        help="inference cost per token: constant:MS, uniform:LO,HI or per-token:MS,MS,...",
    )
    sim.add_argument(
        "--seed",
        type=int,
        default=0,
        help="seed for every random draw; instance i uses seed + i",
    )
    return sim


def _parser() -> argparse.ArgumentParser:  # pragma: no cover
    parser = _ArgumentParser(
        prog="simulst-latency",
        description="measure the latency of simultaneous speech translation output",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("-V", "--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    base_args = _base_args()
    report_args = _report_args(OutputFormatChoice.Csv)
    compare_args = _report_args(OutputFormatChoice.Columns)
    sim_args = _simulation_args()
    fmt = argparse.ArgumentDefaultsHelpFormatter

    evaluate = commands.add_parser(
        "evaluate",
        parents=[base_args, report_args],
        formatter_class=fmt,
        help="score every instance of an evaluation log",
    )
    evaluate.add_argument(
        "-i", "--input", type=Path, metavar="FILE", help="the evaluation log to score (- for stdin)"
    )

    sim = commands.add_parser(
        "simulate",
        parents=[base_args, sim_args],
        formatter_class=fmt,
        help="simulate a policy and write its evaluation log",
    )
    sim.add_argument(
        "--instances",
        type=int,
        default=1,
        metavar="N",
        help="number of instances to simulate",
    )
    sim.add_argument(
        "--emission-output",
        type=Path,
        metavar="FILE",
        help="where to write ground-truth emission times; defaults to OUTPUT.emission.jsonl",
    )

    scale = commands.add_parser(
        "scale-study",
        parents=[base_args, report_args, sim_args],
        formatter_class=fmt,
        help="score lengthened copies of a corpus in every delay mode",
    )
    scale.add_argument(
        "-i",
        "--input",
        type=Path,
        metavar="FILE",
        help="the base evaluation log; without it a base instance is simulated",
    )
    scale.add_argument(
        "--repeats",
        type=_int_list,
        default="1,2,3,4",
        metavar="R,R,...",
        help="ascending concatenation counts",
    )

    compare = commands.add_parser(
        "compare",
        parents=[base_args, compare_args],
        formatter_class=fmt,
        help="compare corpus latency across delay modes",
    )
    compare.add_argument(
        "-i", "--input", type=Path, metavar="FILE", help="the evaluation log to score (- for stdin)"
    )
    compare.add_argument(
        "--emission",
        type=Path,
        metavar="FILE",
        help="ground-truth emission times written by `simulate`, scored as an extra oracle row",
    )
    compare.add_argument(
        "--dump-delays",
        type=Path,
        metavar="FILE",
        help="write every instance's delay sequence per mode to FILE",
    )
    return parser


def _commands(parser: argparse.ArgumentParser) -> list[argparse.ArgumentParser]:
    return [
        sub
        for action in parser._actions
        if isinstance(action, argparse._SubParsersAction)
        for sub in action.choices.values()
    ]


def _parse_args(
    parser: argparse.ArgumentParser, argv: Sequence[str] | None = None
) -> argparse.Namespace:  # pragma: no cover
    # `--config` has to be known before the real parse, since it supplies defaults.
    pre = _ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    if known.config is not None:
        try:
            values = load_config(known.config)
            unknown = set(values) - {"config"}
            for command in _commands(parser):
                unknown &= set(apply_config(command, values))
        except ConfigError as exc:
            _fatal(str(exc))
        if unknown:
            _fatal(f"unknown keys in {known.config}: {', '.join(sorted(unknown))}")

    args = parser.parse_args(argv)

    # Configure logging upfront, so that we don't miss anything.
    if args.verbose >= 1:
        package_logger.setLevel("DEBUG")
    if args.verbose >= 2:
        logging.getLogger().setLevel("DEBUG")

    logger.debug(f"parsed arguments: {args}")

    return args


def _read_traces(path: Path | None, lenient: bool) -> tuple[list[Trace], int]:
    if path is None:
        _fatal("this command needs an --input log")
    with _input_io(path) as io:
        reader = LogReader(io, lenient=lenient)
        traces = list(reader.read())
    if reader.skipped:
        logger.warning(f"skipped {plural(len(reader.skipped), 'malformed line')}")
    return traces, len(reader.skipped)


def _with_skipped(table: Table, skipped_lines: int) -> Table:
    skipped = table.footer.get("skipped") or 0
    assert isinstance(skipped, int)
    return replace(table, footer={**table.footer, "skipped": skipped + skipped_lines})


def _emit(table: Table, args: argparse.Namespace) -> None:
    formatter = args.format.to_format()
    with _output_io(args.output) as io:
        print(formatter.format(table), file=io)


def _evaluator(args: argparse.Namespace, config: RunConfig, spinner: ProgressSpinner) -> Evaluator:
    options = EvaluateOptions(workers=args.workers, deterministic=config.deterministic)
    return Evaluator(config.modes, config.metrics, options, progress=spinner.update_state)


def _simulate_corpus(
    args: argparse.Namespace, config: RunConfig, instances: int, spinner: ProgressSpinner
) -> list[SimulationOutcome]:
    policy = WaitKStrideN.parse(args.policy, tail_tokens=args.tail_tokens)
    outcomes = []
    for i in range(instances):
        seed = config.seed + i
        spinner.update_state(f"Simulating instance {i}")
        if args.segment_range is not None:
            durations = draw_durations(args.segments, *args.segment_range, seed=seed)
        else:
            durations = [args.segment_ms] * args.segments
        compute = parse_compute(args.compute, seed=seed)
        outcomes.append(simulate(durations, policy, compute, instance_id=str(i)))
    return outcomes


def _run_evaluate(args: argparse.Namespace, config: RunConfig, spinner: ProgressSpinner) -> None:
    traces, skipped_lines = _read_traces(args.input, config.lenient)
    reports = list(_evaluator(args, config, spinner).evaluate(traces))
    corpus = corpus_average(reports)
    logger.debug(f"evaluated {plural(corpus.scored, 'instance')}")
    _emit(_with_skipped(report_table(reports, corpus), skipped_lines), args)


def _run_simulate(args: argparse.Namespace, config: RunConfig, spinner: ProgressSpinner) -> None:
    if args.instances < 1:
        raise ConfigError(f"instance count must be at least 1, not {args.instances}")
    outcomes = _simulate_corpus(args, config, args.instances, spinner)

    with _output_io(args.output) as io:
        write_log((o.trace for o in outcomes), io)

    emission_path = args.emission_output
    if emission_path is None and str(args.output) not in {"stdout", "-"}:
        emission_path = args.output.with_name(args.output.name + ".emission.jsonl")
    if emission_path is not None:
        with _output_io(emission_path) as io:
            write_emission(((o.trace.id, o.emission_wall_ms) for o in outcomes), io)
    else:
        logger.debug("no --emission-output given; ground-truth emission times not written")

    gaps = [completion_gap(o.trace, o.emission_wall_ms) for o in outcomes]
    for mode in config.modes:
        relative = [g[mode].relative_percent for g in gaps if mode in g]
        if relative:
            mean = math.fsum(relative) / len(relative)
            logger.info(f"{mode.label}: last-token delay is {mean:+.1f}% off true completion")


def _run_scale_study(args: argparse.Namespace, config: RunConfig, spinner: ProgressSpinner) -> None:
    skipped_lines = 0
    if args.input is not None:
        bases, skipped_lines = _read_traces(args.input, config.lenient)
    else:
        bases = [o.trace for o in _simulate_corpus(args, config, 1, spinner)]
    study = scale_study(bases, config.repeats, _evaluator(args, config, spinner))
    if study.ca_outgrows_ca_star is False:
        logger.warning("CA last-token delay did not outgrow CA* at every repeat step")
    _emit(_with_skipped(scale_table(study), skipped_lines), args)


def _run_compare(args: argparse.Namespace, config: RunConfig, spinner: ProgressSpinner) -> None:
    traces, skipped_lines = _read_traces(args.input, config.lenient)
    evaluator = _evaluator(args, config, spinner)
    corpus = corpus_average(evaluator.evaluate(traces))

    oracle = None
    if args.emission is not None:
        with _input_io(args.emission) as io:
            oracle = score_emission(traces, read_emission(io), evaluator)

    if args.dump_delays is not None:
        with _output_io(args.dump_delays) as io:
            for record in delay_dump(traces, config.modes):
                print(json.dumps(record), file=io)

    _emit(_with_skipped(comparison_table(corpus, oracle), skipped_lines), args)


_COMMANDS: dict[str, Callable[[argparse.Namespace, RunConfig, ProgressSpinner], None]] = {
    "evaluate": _run_evaluate,
    "simulate": _run_simulate,
    "scale-study": _run_scale_study,
    "compare": _run_compare,
}


def main(argv: Sequence[str] | None = None) -> NoReturn:  # pragma: no cover
    """
    The primary entrypoint for `simulst-latency`.
    """
    parser = _parser()
    args = _parse_args(parser, argv)

    try:
        config = RunConfig(
            command=args.command,
            modes=tuple(choice.to_mode() for choice in args.modes),
            metrics=tuple(
                choice.to_metric() for choice in getattr(args, "metrics", list(MetricChoice))
            ),
            lenient=getattr(args, "lenient", False),
            deterministic=getattr(args, "deterministic", False),
            seed=getattr(args, "seed", 0),
            repeats=tuple(getattr(args, "repeats", (1,))),
        )
    except ConfigError as exc:
        _fatal(str(exc))

    with ProgressSpinner("Reading inputs", enabled=bool(args.progress_spinner)) as spinner:
        try:
            _COMMANDS[config.command](args, config, spinner)
        except (ConfigError, SimulationError, OSError) as exc:
            _fatal(str(exc), EXIT_USAGE)
        except (IngestError, TraceError, MetricError, ValueError) as exc:
            _fatal(str(exc), EXIT_DATA)

    sys.exit(EXIT_OK)
