"""
Per-token inference cost models.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence

import numpy as np

from .interface import ComputeKind, ComputeModel, InvalidCompute

logger = logging.getLogger(__name__)


def _check_cost(value: float, what: str) -> float:
    if not math.isfinite(value) or value < 0:
        raise InvalidCompute(f"{what} must be a nonnegative number of milliseconds, not {value}")
    return float(value)


class ConstantCompute(ComputeModel):
    """
    Every token takes the same time to generate.
    """

    def __init__(self, constant_ms: float) -> None:
        """
        Create a new `ConstantCompute` charging `constant_ms` per token.
        """
        self.constant_ms = _check_cost(constant_ms, "constant cost")

    @property
    def kind(self) -> ComputeKind:
        """
        See `ComputeModel.kind`.
        """
        return ComputeKind.Constant

    def costs(self, count: int) -> list[float]:
        """
        See `ComputeModel.costs`.
        """
        return [self.constant_ms] * count


class PerTokenCompute(ComputeModel):
    """
    Each token's cost is listed explicitly.
    """

    def __init__(self, per_token_ms: Sequence[float]) -> None:
        """
        Create a new `PerTokenCompute` from a list of costs, one per token in emission order.
        """
        self.per_token_ms = [_check_cost(c, f"cost of token {i}") for i, c in enumerate(per_token_ms, 1)]

    @property
    def kind(self) -> ComputeKind:
        """
        See `ComputeModel.kind`.
        """
        return ComputeKind.PerToken

    def costs(self, count: int) -> list[float]:
        """
        See `ComputeModel.costs`.
        """
        if count > len(self.per_token_ms):
            raise InvalidCompute(
                f"policy writes {count} tokens but only {len(self.per_token_ms)} costs are listed"
            )
        return self.per_token_ms[:count]


class SeededUniformCompute(ComputeModel):
    """
    Token costs drawn independently and uniformly from `[lo, hi)`.

    Draws come from NumPy's PCG64 bit generator seeded with the 64-bit `seed`,
    through `Generator.uniform`, so a given seed always yields the same costs.
    Implementations in other languages should share fixtures by recording the
    drawn costs (e.g. via the log's `computation` field), not by reimplementing
    the generator.
    """

    def __init__(self, lo_ms: float, hi_ms: float, seed: int) -> None:
        """
        Create a new `SeededUniformCompute` over `[lo_ms, hi_ms)`.
        """
        self.lo_ms = _check_cost(lo_ms, "lower bound")
        self.hi_ms = _check_cost(hi_ms, "upper bound")
        if self.hi_ms < self.lo_ms:
            raise InvalidCompute(f"empty cost range [{lo_ms}, {hi_ms})")
        self.seed = seed & 0xFFFF_FFFF_FFFF_FFFF

    @property
    def kind(self) -> ComputeKind:
        """
        See `ComputeModel.kind`.
        """
        return ComputeKind.SeededUniform

    def costs(self, count: int) -> list[float]:
        """
        See `ComputeModel.costs`.
        """
        rng = np.random.Generator(np.random.PCG64(self.seed))
        drawn: list[float] = rng.uniform(self.lo_ms, self.hi_ms, size=count).tolist()
        return drawn


def parse_compute(text: str, *, seed: int = 0) -> ComputeModel:
    """
    Build a compute model from its command-line form.

    Accepted forms are `constant:<ms>`, `uniform:<lo>,<hi>`, and
    `per-token:<ms>,<ms>,...`. Raises `InvalidCompute` on anything else.
    """
    kind, sep, arguments = text.partition(":")
    if not sep:
        raise InvalidCompute(f"compute model {text!r} is missing its parameters")
    try:
        values = [float(v) for v in arguments.split(",") if v.strip()]
    except ValueError as exc:
        raise InvalidCompute(f"compute model {text!r} has a non-numeric parameter") from exc

    if kind == ComputeKind.Constant.value and len(values) == 1:
        return ConstantCompute(values[0])
    if kind == ComputeKind.SeededUniform.value and len(values) == 2:
        return SeededUniformCompute(values[0], values[1], seed)
    if kind == ComputeKind.PerToken.value and values:
        return PerTokenCompute(values)
    raise InvalidCompute(
        f"unsupported compute model {text!r} "
        f"(choices: {', '.join(str(k) for k in ComputeKind)})"
    )
