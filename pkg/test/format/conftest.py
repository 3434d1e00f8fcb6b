import pytest

from simulst_latency._format import Table


@pytest.fixture
def comparison():
    return Table(
        columns=("mode", "AL_ms", "instances"),
        rows=[("CU", 800.0, 2), ("CA*", None, 1)],
        footer={"skipped": 1},
    )


@pytest.fixture
def bare():
    return Table(columns=("repeat", "mode"), rows=[(1, "CU")])
