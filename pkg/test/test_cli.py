import argparse
import json

import pytest

import simulst_latency._cli as cli
from simulst_latency._cli import (
    DelayModeChoice,
    MetricChoice,
    OutputFormatChoice,
    ProgressSpinnerChoice,
)
from simulst_latency._delay import DelayMode
from simulst_latency._format import ReportFormat
from simulst_latency._ingest import read_emission, read_log
from simulst_latency._metrics import Metric

_MISSISSIPPI_RECORD = {
    "index": 0,
    "prediction": "ein zwei drei vier fünf sechs",
    "delays": [1000, 1000, 2000, 2000, 3000, 3000],
    "elapsed": [1500, 2000, 3500, 4000, 5500, 6000],
    "source_length": 3000,
    "segment_ms": 1000,
    "reference": "one two three four five six",
}


class TestOutputFormatChoice:
    def test_to_format_is_exhaustive(self):
        for choice in OutputFormatChoice:
            assert isinstance(choice.to_format(), ReportFormat)

    def test_str(self):
        for choice in OutputFormatChoice:
            assert str(choice) == choice.value


class TestDelayModeChoice:
    def test_to_mode_is_exhaustive(self):
        assert {choice.to_mode() for choice in DelayModeChoice} == set(DelayMode)

    def test_str(self):
        for choice in DelayModeChoice:
            assert str(choice) == choice.value == choice.to_mode().value


class TestMetricChoice:
    def test_to_metric_is_exhaustive(self):
        assert {choice.to_metric() for choice in MetricChoice} == set(Metric)

    def test_str(self):
        for choice in MetricChoice:
            assert str(choice) == choice.value


class TestProgressSpinnerChoice:
    def test_bool(self):
        assert bool(ProgressSpinnerChoice.On)
        assert not bool(ProgressSpinnerChoice.Off)

    def test_str(self):
        for choice in ProgressSpinnerChoice:
            assert str(choice) == choice.value


def test_mode_list():
    assert cli._mode_list("CA*,cu,cu") == [DelayModeChoice.CaStar, DelayModeChoice.Cu]
    assert cli._mode_list("ca-star") == [DelayModeChoice.CaStar]
    with pytest.raises(argparse.ArgumentTypeError):
        cli._mode_list("cu,dal")


def test_metric_list():
    assert cli._metric_list("LAAL, al") == [MetricChoice.Laal, MetricChoice.Al]
    with pytest.raises(argparse.ArgumentTypeError):
        cli._metric_list("bleu")


def test_int_list_and_range():
    assert cli._int_list("1,2,4") == [1, 2, 4]
    assert cli._ms_range("100,2000") == (100.0, 2000.0)
    with pytest.raises(argparse.ArgumentTypeError):
        cli._int_list("1,two")
    with pytest.raises(argparse.ArgumentTypeError):
        cli._ms_range("100")


def _run(*argv):
    with pytest.raises(SystemExit) as exc:
        cli.main([*argv, "--progress-spinner", "off"])
    return exc.value.code


@pytest.fixture
def mississippi_log(tmp_path):
    path = tmp_path / "mississippi.jsonl"
    path.write_text(json.dumps(_MISSISSIPPI_RECORD) + "\n", encoding="utf-8")
    return path


def test_evaluate(tmp_path, mississippi_log):
    out = tmp_path / "report.csv"
    assert _run("evaluate", "-i", str(mississippi_log), "-o", str(out)) == 0

    lines = out.read_text().splitlines()
    assert lines[0] == "instance_id,mode,AL_ms,LAAL_ms,cutoff,tokens,ref_len,source_ms"
    assert "0,CU,800.000,800.000,5,6,6,3000.000" in lines
    assert "0,CA,1833.333,1833.333,3,6,6,3000.000" in lines
    assert "0,CA*,1500.000,1500.000,4,6,6,3000.000" in lines
    assert "<corpus>,CA*,1500.000,1500.000,,1,," in lines
    assert lines[-1] == "# skipped=0"


def test_evaluate_mode_and_metric_selection(tmp_path, mississippi_log):
    out = tmp_path / "report.csv"
    code = _run(
        "evaluate", "-i", str(mississippi_log), "-o", str(out), "--modes", "cu,CA*", "--metrics", "al"
    )
    assert code == 0

    rows = out.read_text().splitlines()[1:-1]
    assert [row.split(",")[1] for row in rows] == ["CU", "CA*", "CU", "CA*"]
    assert rows[0] == "0,CU,800.000,,5,6,6,3000.000"


def test_evaluate_empty_log(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert _run("evaluate", "-i", str(empty)) == 2


def test_evaluate_bad_line(tmp_path, mississippi_log):
    log = tmp_path / "bad.jsonl"
    log.write_text(mississippi_log.read_text() + "{oops\n")
    out = tmp_path / "report.csv"

    assert _run("evaluate", "-i", str(log), "-o", str(out)) == 2
    assert _run("evaluate", "-i", str(log), "-o", str(out), "--lenient") == 0
    assert out.read_text().splitlines()[-1] == "# skipped=1"


def test_evaluate_out_of_range_line(tmp_path, mississippi_log):
    log = tmp_path / "huge.jsonl"
    huge = json.dumps(dict(_MISSISSIPPI_RECORD, index=1, source_length=10**400))
    log.write_text(mississippi_log.read_text() + huge + "\n")
    out = tmp_path / "report.csv"

    assert _run("evaluate", "-i", str(log), "-o", str(out)) == 2
    assert _run("evaluate", "-i", str(log), "-o", str(out), "--lenient") == 0
    assert out.read_text().splitlines()[-1] == "# skipped=1"


def test_usage_errors(tmp_path, mississippi_log):
    assert _run() == 1
    assert _run("evaluate") == 1
    assert _run("evaluate", "-i", str(tmp_path / "missing.jsonl")) == 1
    assert _run("evaluate", "-i", str(mississippi_log), "--modes", "dal") == 1
    assert _run("evaluate", "-i", str(mississippi_log), "--no-such-flag") == 1


def test_simulate_mississippi(tmp_path, mississippi_log):
    out = tmp_path / "sim.jsonl"
    code = _run(
        "simulate",
        "--policy",
        "1,2",
        "--segments",
        "3",
        "--segment-ms",
        "1000",
        "--compute",
        "constant:500",
        "-o",
        str(out),
    )
    assert code == 0

    with out.open() as io, mississippi_log.open() as expected:
        [simulated] = read_log(io)
        [logged] = read_log(expected)
    assert simulated.cu_delays_ms == logged.cu_delays_ms
    assert simulated.computation_ms == logged.computation_ms
    assert simulated.segments == logged.segments

    with (tmp_path / "sim.jsonl.emission.jsonl").open() as io:
        assert read_emission(io) == {"0": [1500, 2000, 2500, 3000, 3500, 4000]}


def test_simulate_invalid(tmp_path):
    out = str(tmp_path / "sim.jsonl")
    assert _run("simulate", "--policy", "5,1", "--segments", "4", "-o", out) == 1
    assert _run("simulate", "--policy", "four,three", "-o", out) == 1
    assert _run("simulate", "--compute", "gaussian:5", "-o", out) == 1
    assert _run("simulate", "--instances", "0", "-o", out) == 1


def test_simulate_rejects_report_flags(tmp_path):
    out = str(tmp_path / "sim.jsonl")
    assert _run("simulate", "-o", out, "--format", "csv") == 1
    assert _run("simulate", "-o", out, "--metrics", "al") == 1
    assert _run("simulate", "-o", out, "--lenient") == 1
    assert _run("simulate", "-o", out, "--workers", "4") == 1


def test_simulate_is_deterministic(tmp_path):
    args = [
        "simulate",
        "--instances",
        "5",
        "--segments",
        "20",
        "--segment-range",
        "100,2000",
        "--compute",
        "uniform:0,400",
        "--seed",
        "11",
    ]
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert _run(*args, "-o", str(first)) == 0
    assert _run(*args, "-o", str(second)) == 0
    assert first.read_bytes() == second.read_bytes()
    assert len(first.read_text().splitlines()) == 5

    report_a, report_b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert _run("evaluate", "-i", str(first), "-o", str(report_a), "--deterministic") == 0
    assert _run("evaluate", "-i", str(first), "-o", str(report_b), "--deterministic") == 0
    assert report_a.read_bytes() == report_b.read_bytes()


def test_compare_with_oracle(tmp_path):
    log = tmp_path / "sim.jsonl"
    assert _run("simulate", "--instances", "3", "--segments", "40", "-o", str(log)) == 0

    out = tmp_path / "compare.csv"
    dump = tmp_path / "delays.jsonl"
    code = _run(
        "compare",
        "-i",
        str(log),
        "--emission",
        str(tmp_path / "sim.jsonl.emission.jsonl"),
        "--dump-delays",
        str(dump),
        "-f",
        "csv",
        "-o",
        str(out),
    )
    assert code == 0

    rows = {}
    for line in out.read_text().splitlines()[1:-1]:
        mode, al, laal, instances = line.split(",")
        rows[mode] = (float(al), float(laal), int(instances))
    assert list(rows) == ["CU", "CA", "CA*", "oracle"]
    assert rows["oracle"] == pytest.approx(rows["CA*"], abs=5e-3)
    assert rows["oracle"][2] == 3
    assert len(dump.read_text().splitlines()) == 3 * 3


def test_compare_columns_by_default(tmp_path, mississippi_log):
    out = tmp_path / "compare.txt"
    assert _run("compare", "-i", str(mississippi_log), "-o", str(out)) == 0

    lines = out.read_text().splitlines()
    assert lines[0].split() == ["mode", "AL_ms", "LAAL_ms", "instances"]
    assert lines[2].split() == ["CU", "800.0", "800.0", "1"]
    assert lines[3].split() == ["CA", "1833.3", "1833.3", "1"]
    assert lines[4].split() == ["CA*", "1500.0", "1500.0", "1"]


def test_scale_study(tmp_path, mississippi_log):
    out = tmp_path / "scale.csv"
    code = _run("scale-study", "-i", str(mississippi_log), "--repeats", "1,2,3,4", "-o", str(out))
    assert code == 0

    lines = out.read_text().splitlines()
    assert lines[0] == "repeat,mode,AL_ms,LAAL_ms,last_delay_ms"
    assert any(line.startswith("4,CA,") and line.endswith(",24000.000") for line in lines)
    assert "# ca_outgrows_ca_star=yes" in lines


def test_scale_study_simulated_base(tmp_path):
    out = tmp_path / "scale.jsonl"
    code = _run("scale-study", "--repeats", "1,2", "-f", "records", "-o", str(out))
    assert code == 0

    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert records[-1] == {"footer": {"skipped": 0, "ca_outgrows_ca_star": "yes"}}


def test_scale_study_unsorted_repeats(mississippi_log):
    assert _run("scale-study", "-i", str(mississippi_log), "--repeats", "2,1") == 1


def test_config_file(tmp_path, mississippi_log):
    config = tmp_path / "run.toml"
    config.write_text('[simulst-latency]\nmodes = ["cu"]\nmetrics = "al"\n')
    out = tmp_path / "report.csv"

    code = _run("evaluate", "-i", str(mississippi_log), "-o", str(out), "--config", str(config))
    assert code == 0
    rows = out.read_text().splitlines()[1:-1]
    assert [row.split(",")[1] for row in rows] == ["CU", "CU"]

    # Explicit flags win over the file.
    code = _run(
        "evaluate",
        "-i",
        str(mississippi_log),
        "-o",
        str(out),
        "--config",
        str(config),
        "--modes",
        "ca",
    )
    assert code == 0
    assert out.read_text().splitlines()[1].split(",")[1] == "CA"


def test_config_file_errors(tmp_path, mississippi_log):
    config = tmp_path / "run.toml"
    config.write_text('[simulst-latency]\ncolour = "red"\n')
    assert _run("evaluate", "-i", str(mississippi_log), "--config", str(config)) == 1

    config.write_text("modes = \n")
    assert _run("evaluate", "-i", str(mississippi_log), "--config", str(config)) == 1
