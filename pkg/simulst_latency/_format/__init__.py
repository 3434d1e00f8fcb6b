"""
Output format interfaces and implementations for `simulst-latency`.
"""

from .columns import ColumnsFormat
from .csv import CsvFormat
from .interface import ReportFormat, Table
from .records import RecordsFormat

__all__ = [
    "ColumnsFormat",
    "CsvFormat",
    "ReportFormat",
    "RecordsFormat",
    "Table",
]
