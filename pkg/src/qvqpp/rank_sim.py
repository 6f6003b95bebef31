"""Rank-biased overlap (RBO) between two ranked lists.

Implements the extrapolated variant: the overlap observed on the seen
prefixes is assumed to continue, so two identical lists score 1.0. For
lists of unequal length the standard uneven-length extrapolation is
used. The persistence parameter ``p`` controls top-weighting: weight
mass on the first d ranks is roughly 1 - p^d.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .corpus_io import RankedList

ListLike = Union[RankedList, Sequence[str]]


@dataclass(frozen=True)
class RboParams:
    p: float = 0.9
    eval_depth: int = 100

    def __post_init__(self) -> None:
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must be in (0, 1), got {self.p}")
        if self.eval_depth < 1:
            raise ValueError(f"eval_depth must be >= 1, got {self.eval_depth}")


def _ids(ranking: ListLike) -> list[str]:
    if isinstance(ranking, RankedList):
        return ranking.doc_ids()
    return list(ranking)


def rbo_ext(a: ListLike, b: ListLike, params: RboParams = RboParams()) -> float:
    """Extrapolated RBO of two rankings, in [0, 1].

    Both inputs are truncated to ``params.eval_depth`` first. Ids must be
    unique within each list. If either list is empty the overlap carries
    no evidence and the result is defined as 0.
    """
    first = _ids(a)[: params.eval_depth]
    second = _ids(b)[: params.eval_depth]
    for name, ids in (("first", first), ("second", second)):
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate id within {name} list")
    if len(first) > len(second):
        longer, shorter = first, second
    else:
        longer, shorter = second, first
    s, l = len(shorter), len(longer)
    if s == 0:
        return 0.0

    p = params.p
    # x_d = |prefix_d(longer) ∩ prefix_min(d,s)(shorter)|
    seen_short: set[str] = set()
    seen_long: set[str] = set()
    overlap = 0
    x_at = [0] * (l + 1)
    sum1 = 0.0
    p_pow = 1.0
    for d in range(1, l + 1):
        p_pow *= p
        long_elem = longer[d - 1]
        if d <= s:
            short_elem = shorter[d - 1]
            if long_elem == short_elem:
                overlap += 1
            else:
                if long_elem in seen_short:
                    overlap += 1
                if short_elem in seen_long:
                    overlap += 1
            seen_long.add(long_elem)
            seen_short.add(short_elem)
        else:
            if long_elem in seen_short:
                overlap += 1
            seen_long.add(long_elem)
        x_at[d] = overlap
        sum1 += overlap / d * p_pow

    x_s, x_l = x_at[s], x_at[l]
    sum2 = 0.0
    if s < l:
        p_pow = p**s
        for d in range(s + 1, l + 1):
            p_pow *= p
            sum2 += x_s * (d - s) / (s * d) * p_pow
    sum3 = ((x_l - x_s) / l + x_s / s) * p**l
    value = (1.0 - p) / p * (sum1 + sum2) + sum3
    return min(1.0, max(0.0, value))
