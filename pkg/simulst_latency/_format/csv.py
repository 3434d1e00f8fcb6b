"""
Functionality for formatting result tables as comma-separated values.
"""

from __future__ import annotations

import csv
import io

from .interface import Cell, ReportFormat, Table

FOOTER_PREFIX = "# "


class CsvFormat(ReportFormat):
    """
    An implementation of `ReportFormat` that writes a header row and one CSV row
    per table row. Floats are printed with 3 decimals and empty cells are left
    blank. Footer notes follow as `# key=value` comment lines.
    """

    def __init__(self, decimals: int = 3) -> None:
        """
        Create a new `CsvFormat` printing floats with `decimals` digits.
        """
        self.decimals = decimals

    def format(self, table: Table) -> str:
        """
        See `ReportFormat.format`.
        """
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([self._format_cell(cell) for cell in row])
        for key, value in table.footer.items():
            buffer.write(f"{FOOTER_PREFIX}{key}={self._format_cell(value)}\n")
        return buffer.getvalue().rstrip("\n")

    def _format_cell(self, cell: Cell) -> str:
        if cell is None:
            return ""
        if isinstance(cell, float):
            return f"{cell:.{self.decimals}f}"
        return str(cell)
