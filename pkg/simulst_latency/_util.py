"""
Utility functions for `simulst-latency`.
"""

from __future__ import annotations

from typing import NoReturn  # pragma: no cover

MS_TOLERANCE = 0.5
"""
Slack, in milliseconds, when matching logged delays against segment boundaries.

Logs store rounded milliseconds, so exact comparisons are never safe.
"""


def assert_never(x: NoReturn) -> NoReturn:  # pragma: no cover
    """
    A hint to the typechecker that a branch can never occur.
    """
    assert False, f"unhandled type: {type(x).__name__}"


def plural(count: int, singular: str, plural: str | None = None) -> str:
    """
    Render `count` followed by the right form of `singular`.
    """
    if count == 1:
        return f"{count} {singular}"
    return f"{count} {plural or singular + 's'}"
