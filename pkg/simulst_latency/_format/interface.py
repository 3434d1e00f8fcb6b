"""
Interfaces for rendering result tables into a string representation.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Union

Cell = Union[str, int, float, None]


@dataclass(frozen=True)
class Table:
    """
    A rectangular result: a header, rows of cells, and footer notes.

    Empty cells are `None`; every format decides how to render them.
    """

    columns: tuple[str, ...]
    rows: Sequence[tuple[Cell, ...]]
    footer: dict[str, Cell] = field(default_factory=dict)


class ReportFormat(ABC):
    """
    Represents an abstract string representation for result tables.
    """

    @abstractmethod
    def format(self, table: Table) -> str:  # pragma: no cover
        """
        Convert a table into a string.
        """
        raise NotImplementedError
