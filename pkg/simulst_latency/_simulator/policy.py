"""
Read/write policies, reduced to how many tokens they write per segment.
"""

from __future__ import annotations

from dataclasses import dataclass

from .interface import InvalidPolicy, Policy


@dataclass(frozen=True)
class WaitKStrideN(Policy):
    """
    Read `k` segments, write `n` tokens, then write `n` more after every further
    segment. Once the source is exhausted, write `tail_tokens` more.
    """

    k: int
    n: int
    tail_tokens: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidPolicy(f"k must be at least 1, not {self.k}")
        if self.n < 1:
            raise InvalidPolicy(f"n must be at least 1, not {self.n}")
        if self.tail_tokens < 0:
            raise InvalidPolicy(f"tail token count must be nonnegative, not {self.tail_tokens}")

    def block_sizes(self, segment_count: int) -> list[int]:
        """
        See `Policy.block_sizes`.

        Tail tokens belong to the final segment's block.
        """
        if self.k > segment_count:
            raise InvalidPolicy(
                f"wait-{self.k} policy needs at least {self.k} segments, got {segment_count}"
            )
        sizes = [0] * (self.k - 1) + [self.n] * (segment_count - self.k + 1)
        sizes[-1] += self.tail_tokens
        return sizes

    @classmethod
    def parse(cls, text: str, *, tail_tokens: int = 0) -> WaitKStrideN:
        """
        Build a policy from its command-line form, `k,n`.
        """
        try:
            k, n = (int(v) for v in text.split(","))
        except ValueError as exc:
            raise InvalidPolicy(f"policy {text!r} is not of the form k,n") from exc
        return cls(k=k, n=n, tail_tokens=tail_tokens)
