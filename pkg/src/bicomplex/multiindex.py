"""Signed multi-indices J = (j^1, ..., j^p) used for shifts and stencil offsets."""

from __future__ import annotations

from itertools import product
from math import comb, factorial, prod
from typing import Iterable, Iterator

MultiIndex = tuple[int, ...]


def zero(p: int) -> MultiIndex:
    return (0,) * p


def unit(p: int, i: int) -> MultiIndex:
    """The multi-index 1_i (0-based direction ``i``)."""
    return tuple(1 if m == i else 0 for m in range(p))


def add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


def sub(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x - y for x, y in zip(a, b))


def neg(a: MultiIndex) -> MultiIndex:
    return tuple(-x for x in a)


def contains(big: MultiIndex, small: MultiIndex) -> bool:
    """``big ⊃ small``: componentwise ``big >= small``."""
    return all(x >= y for x, y in zip(big, small))


def order(a: MultiIndex) -> int:
    return sum(a)


def mi_factorial(a: MultiIndex) -> int:
    if any(x < 0 for x in a):
        raise ValueError(f"factorial of a multi-index with negative entries: {a}")
    return prod(factorial(x) for x in a)


def binomial(big: MultiIndex, small: MultiIndex) -> int:
    """prod_m C(i^m, j^m); defined only when big ⊃ small >= 0."""
    if any(y < 0 for y in small) or not contains(big, small):
        raise ValueError(f"binomial({big}, {small}) requires {big} ⊃ {small} >= 0")
    return prod(comb(x, y) for x, y in zip(big, small))


def box(lo: MultiIndex, hi: MultiIndex) -> Iterator[MultiIndex]:
    """All multi-indices K with lo <= K <= hi componentwise."""
    return product(*(range(a, b + 1) for a, b in zip(lo, hi)))


def componentwise_min(indices: Iterable[MultiIndex], p: int) -> MultiIndex:
    out = None
    for idx in indices:
        out = idx if out is None else tuple(min(x, y) for x, y in zip(out, idx))
    return zero(p) if out is None else out
