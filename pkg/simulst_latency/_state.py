"""
A progress spinner for long evaluation and simulation runs.
"""

from __future__ import annotations

import logging
from logging.handlers import MemoryHandler
from typing import Any

from rich.console import Console
from rich.status import Status


class ProgressSpinner:
    """
    A progress spinner on standard error, using `rich.status` under the hood.

    Use it as a context manager. Log records emitted while the spinner runs are
    held back and flushed once it stops, so they don't get mixed into the
    spinner's line. A disabled spinner accepts updates and does nothing.
    """

    def __init__(self, message: str = "", *, enabled: bool = True) -> None:
        """
        Create a new `ProgressSpinner` starting with `message`.
        """
        self.enabled = enabled
        self._status = Status(
            message, console=Console(stderr=True), spinner="line", refresh_per_second=30
        )

        # No target until the spinner stops, regardless of capacity.
        self.log_handler = MemoryHandler(
            0, flushLevel=logging.CRITICAL + 1, target=None, flushOnClose=False
        )
        self.prev_handlers: list[logging.Handler] = []
        self.updates = 0

    def update_state(self, message: str) -> None:
        """
        Replace the spinner's message.
        """
        self.updates += 1
        if self.enabled:
            self._status.update(message)

    def __enter__(self) -> ProgressSpinner:
        """
        Redirect logging to an in-memory handler and start spinning.
        """
        if not self.enabled:
            return self

        root_logger = logging.root
        self.prev_handlers = list(root_logger.handlers)
        for handler in self.prev_handlers:
            root_logger.removeHandler(handler)
        root_logger.addHandler(self.log_handler)

        self._status.start()
        return self

    def __exit__(self, _exc_type: Any, _exc_value: Any, _exc_traceback: Any) -> None:
        """
        Stop spinning, flush the held-back log records, and restore the original handlers.
        """
        if not self.enabled:
            return

        self._status.stop()

        root_logger = logging.root
        stream_handler = logging.StreamHandler()
        stream_handler.setFormatter(logging.Formatter(logging.BASIC_FORMAT))
        self.log_handler.setTarget(stream_handler)
        self.log_handler.flush()

        root_logger.removeHandler(self.log_handler)
        for handler in self.prev_handlers:
            root_logger.addHandler(handler)
