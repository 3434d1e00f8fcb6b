"""
Interfaces for the read/write simulator: read policies, models of how long
each token takes to generate, and the simulation outcome.
"""

from __future__ import annotations

import enum
from abc import ABC, abstractmethod
from dataclasses import dataclass

from simulst_latency._trace import Trace


class SimulationError(Exception):
    """
    Raised when a simulation cannot be run, for any reason.

    Concrete failures subclass this exception to provide more context.
    """

    pass


class InvalidPolicy(SimulationError):
    """
    A `SimulationError` for read/write policies that cannot drive the given source.
    """

    pass


class InvalidCompute(SimulationError):
    """
    A `SimulationError` for compute models that would produce unusable token costs.
    """

    pass


@enum.unique
class ComputeKind(str, enum.Enum):
    """
    The supported families of per-token inference cost.
    """

    Constant = "constant"
    PerToken = "per-token"
    SeededUniform = "uniform"

    def __str__(self) -> str:
        return self.value


class ComputeModel(ABC):
    """
    Represents an abstract source of per-token inference costs.
    """

    @property
    @abstractmethod
    def kind(self) -> ComputeKind:  # pragma: no cover
        """
        The family this model belongs to.
        """
        raise NotImplementedError

    @abstractmethod
    def costs(self, count: int) -> list[float]:  # pragma: no cover
        """
        Return the inference cost, in milliseconds, of each of `count` tokens.

        Implementations raise `InvalidCompute` rather than return a negative cost.
        """
        raise NotImplementedError


class Policy(ABC):
    """
    Represents an abstract read/write policy, reduced to the shape of its output:
    how many tokens it writes after reading each segment.
    """

    @abstractmethod
    def block_sizes(self, segment_count: int) -> list[int]:  # pragma: no cover
        """
        Return, for each segment, the number of tokens written while it is the latest read.
        """
        raise NotImplementedError


@dataclass(frozen=True)
class SimulationOutcome:
    """
    A synthetic trace together with the true time each of its tokens became available.
    """

    trace: Trace
    emission_wall_ms: tuple[float, ...]
    """
    Wall-clock availability of each token, measured from the start of the speech.
    """
