import simulst_latency._format as format


def test_csv(comparison):
    csv_format = format.CsvFormat()
    expected_csv = """mode,AL_ms,instances
CU,800.000,2
CA*,,1
# skipped=1"""
    assert csv_format.format(comparison) == expected_csv


def test_csv_quotes_cells():
    table = format.Table(columns=("instance_id", "mode"), rows=[("a,b", "CU")])
    assert format.CsvFormat().format(table) == 'instance_id,mode\n"a,b",CU'


def test_csv_no_footer(bare):
    assert format.CsvFormat().format(bare) == "repeat,mode\n1,CU"
