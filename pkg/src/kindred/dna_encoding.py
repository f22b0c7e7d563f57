"""Base/digit bijection and continued fractions of square roots."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

DEFAULT_MAPPING = {1: "C", 2: "G", 3: "A", 4: "T"}


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class BaseBijection:
    mapping: Mapping[int, str] = field(default_factory=lambda: dict(DEFAULT_MAPPING))

    def __post_init__(self):
        if sorted(self.mapping) != [1, 2, 3, 4] or sorted(self.mapping.values()) != list("ACGT"):
            raise EncodingError(f"not a bijection between 1..4 and ACGT: {dict(self.mapping)}")

    @property
    def inverse(self) -> dict[str, int]:
        return {base: digit for digit, base in self.mapping.items()}


def seq_to_digits(seq: str, f: BaseBijection = BaseBijection()) -> list[int]:
    inv = f.inverse
    try:
        return [inv[base] for base in seq]
    except KeyError as exc:
        raise EncodingError(f"invalid base {exc.args[0]!r}") from None


def digits_to_seq(digits: Sequence[int], f: BaseBijection = BaseBijection()) -> str:
    try:
        return "".join(f.mapping[d] for d in digits)
    except KeyError as exc:
        raise EncodingError(f"invalid digit {exc.args[0]!r}") from None


@dataclass(frozen=True)
class CfExpansion:
    head: int
    tail: tuple[int, ...] = ()
    period: tuple[int, int] | None = None  # (start index in tail, length)

    def terms(self) -> list[int]:
        return [self.head, *self.tail]

    def convergents(self) -> list[Fraction]:
        out = []
        h_prev, h = 1, self.head
        k_prev, k = 0, 1
        out.append(Fraction(h, k))
        for a in self.tail:
            h_prev, h = h, a * h + h_prev
            k_prev, k = k, a * k + k_prev
            out.append(Fraction(h, k))
        return out

    def to_dict(self) -> dict:
        return {"head": self.head, "tail": list(self.tail), "period": list(self.period) if self.period else None}


def cf_sqrt(n: int, terms: int) -> CfExpansion:
    """Continued fraction of sqrt(n) via the integer (m, d, a) recurrence.

    ``terms`` counts the head. The period is found from the first
    repeated (m, d) state, independently of how many terms are asked for.
    """
    if n < 1:
        raise EncodingError("n must be a positive integer")
    a0 = math.isqrt(n)
    if a0 * a0 == n:
        return CfExpansion(a0)
    if terms < 1:
        raise EncodingError("need at least one term for an irrational root")

    m, d, a = 0, 1, a0
    tail: list[int] = []
    seen: dict[tuple[int, int], int] = {}
    period = None
    while len(tail) < terms - 1 or period is None:
        m = d * a - m
        d = (n - m * m) // d
        a = (a0 + m) // d
        state = (m, d)
        if period is None:
            if state in seen:
                start = seen[state]
                period = (start, len(tail) - start)
            else:
                seen[state] = len(tail)
        tail.append(a)
    return CfExpansion(a0, tuple(tail[: terms - 1]), period)
