"""
Functionality for formatting result tables as a set of human-readable columns.
"""

from __future__ import annotations

from collections.abc import Iterable
from itertools import zip_longest
from typing import Any

from .interface import Cell, ReportFormat, Table


def tabulate(rows: Iterable[Iterable[Any]]) -> tuple[list[str], list[int]]:
    """Return a list of formatted rows and a list of column sizes.
    For example::
    >>> tabulate([['CU', 800.0], ['CA*']])
    (['CU  800.0', 'CA*'], [3, 5])
    """
    rows = [tuple(map(str, row)) for row in rows]
    sizes = [max(map(len, col)) for col in zip_longest(*rows, fillvalue="")]
    table = [" ".join(map(str.ljust, row, sizes)).rstrip() for row in rows]
    return table, sizes


class ColumnsFormat(ReportFormat):
    """
    An implementation of `ReportFormat` that formats tables as aligned columns,
    with milliseconds printed to one decimal.
    """

    def __init__(self, decimals: int = 1) -> None:
        """
        Create a new `ColumnsFormat` printing floats with `decimals` digits.
        """
        self.decimals = decimals

    def format(self, table: Table) -> str:
        """
        See `ReportFormat.format`.
        """
        data = [list(table.columns)]
        data.extend([self._format_cell(cell) for cell in row] for row in table.rows)
        lines, sizes = tabulate(data)

        # Separator under the header.
        lines.insert(1, " ".join("-" * size for size in sizes))

        for key, value in table.footer.items():
            lines.append(f"{key}: {self._format_cell(value)}")
        return "\n".join(lines)

    def _format_cell(self, cell: Cell) -> str:
        if cell is None:
            return "-"
        if isinstance(cell, float):
            return f"{cell:.{self.decimals}f}"
        return str(cell)
