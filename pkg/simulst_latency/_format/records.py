"""
Functionality for formatting result tables as line-delimited JSON objects.
"""

from __future__ import annotations

import json

from .interface import ReportFormat, Table


class RecordsFormat(ReportFormat):
    """
    An implementation of `ReportFormat` that writes one JSON object per row,
    keyed by column name, at full float precision. Footer notes, if any, follow
    as a final `{"footer": {...}}` object.
    """

    def format(self, table: Table) -> str:
        """
        See `ReportFormat.format`.
        """
        lines = [json.dumps(dict(zip(table.columns, row)), ensure_ascii=False) for row in table.rows]
        if table.footer:
            lines.append(json.dumps({"footer": table.footer}, ensure_ascii=False))
        return "\n".join(lines)
