"""
Run configuration: TOML defaults for CLI flags, and the validated settings of one run.
"""

from __future__ import annotations

import argparse
import logging
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import toml

from simulst_latency._delay import DelayMode
from simulst_latency._metrics import Metric

logger = logging.getLogger(__name__)

CONFIG_TABLE = "simulst-latency"
"""
The TOML table holding flag defaults. Without it, top-level keys are used.
"""


class ConfigError(Exception):
    """
    Raised when a configuration file can't be read, or holds values that don't
    fit the flags they configure.
    """

    pass


def load_config(path: Path) -> dict[str, Any]:
    """
    Load flag defaults from the TOML file at `path`.

    Keys are flag long names, with dashes or underscores. Returned keys use
    underscores, matching `argparse` destinations.
    """
    try:
        with path.open("r") as f:
            data = toml.load(f)
    except OSError as exc:
        raise ConfigError(f"couldn't read config file {path}: {exc}") from exc
    except toml.TomlDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc

    table = data.get(CONFIG_TABLE, data)
    if not isinstance(table, dict):
        raise ConfigError(f"[{CONFIG_TABLE}] in {path} must be a table")

    values = {key.replace("-", "_"): value for key, value in table.items()}
    logger.debug(f"loaded {len(values)} defaults from {path}")
    return values


def _as_flag_value(key: str, value: Any) -> Any:
    # Flag values reach argparse as text, so its `type` converters apply to them too.
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float, str)):
        return str(value)
    if isinstance(value, list) and all(isinstance(v, (int, float, str)) for v in value):
        return ",".join(str(v) for v in value)
    raise ConfigError(f"config key {key!r} has an unsupported value {value!r}")


def apply_config(parser: argparse.ArgumentParser, values: Mapping[str, Any]) -> list[str]:
    """
    Install `values` as defaults on `parser`, for the keys it has a flag for.

    Returns the keys `parser` doesn't know, so callers can reject them once
    every parser has had its turn.
    """
    known = {action.dest for action in parser._actions}
    defaults: dict[str, Any] = {}
    unknown: list[str] = []
    for key, value in values.items():
        if key in known:
            defaults[key] = _as_flag_value(key, value)
        else:
            unknown.append(key)
    parser.set_defaults(**defaults)
    return unknown


@dataclass(frozen=True)
class RunConfig:
    """
    The settings of one CLI run, after flags and config defaults are merged.
    """

    command: str
    modes: tuple[DelayMode, ...]
    metrics: tuple[Metric, ...]
    lenient: bool = False
    deterministic: bool = False
    seed: int = 0
    repeats: tuple[int, ...] = (1,)

    def __post_init__(self) -> None:
        if not self.modes:
            raise ConfigError("at least one delay mode is required")
        if not self.metrics:
            raise ConfigError("at least one metric is required")
        if not self.repeats or any(r < 1 for r in self.repeats):
            raise ConfigError(f"repeat counts must be positive, not {list(self.repeats)}")
        if list(self.repeats) != sorted(self.repeats):
            raise ConfigError(f"repeat counts must be ascending, not {list(self.repeats)}")
