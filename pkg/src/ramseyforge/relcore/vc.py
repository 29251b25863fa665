"""Set families, shattering, VC dimension and the Sauer-Shelah bound."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Iterable

from ..errors import DomainError, RefusedTooLarge

DEFAULT_UNIVERSE_BOUND = 24


@dataclass(frozen=True)
class SetFamily:
    """Subsets of the universe {1..u}, stored as bit masks (bit i-1 <-> i)."""

    universe: int
    sets: tuple[int, ...]

    def __post_init__(self):
        if self.universe < 0:
            raise DomainError("universe size must be non-negative")
        full = (1 << self.universe) - 1
        for m in self.sets:
            if m & ~full:
                raise DomainError(f"set {m:#b} leaves the universe [1..{self.universe}]")

    @classmethod
    def from_sets(cls, universe: int, sets: Iterable[Iterable[int]]) -> "SetFamily":
        masks = []
        for S in sets:
            m = 0
            for x in S:
                if not 1 <= x <= universe:
                    raise DomainError(f"element {x} outside [1..{universe}]")
                m |= 1 << (x - 1)
            masks.append(m)
        return cls(universe, tuple(masks))

    def members(self, mask: int) -> list[int]:
        return [i + 1 for i in range(self.universe) if mask >> i & 1]


def _check(F: SetFamily, bound: int):
    if F.universe > bound:
        raise RefusedTooLarge(f"universe {F.universe} exceeds exhaustive bound {bound}", estimate=F.universe)


def trace_count(F: SetFamily, B: int) -> int:
    """|F ∩ B| = number of distinct traces S & B."""
    return len({S & B for S in F.sets})


def _subset_masks(u: int, size: int):
    for c in combinations(range(u), size):
        m = 0
        for i in c:
            m |= 1 << i
        yield m


def is_shattered(F: SetFamily, B: int) -> bool:
    return trace_count(F, B) == 1 << bin(B).count("1")


def vc_dimension(F: SetFamily, bound: int = DEFAULT_UNIVERSE_BOUND) -> int:
    """Largest size of a shattered subset; -1 for the empty family."""
    _check(F, bound)
    if not F.sets:
        return -1
    d = 0
    for size in range(1, F.universe + 1):
        if len(set(F.sets)) < 1 << size:
            break
        if any(is_shattered(F, B) for B in _subset_masks(F.universe, size)):
            d = size
        else:
            break  # shattering is closed under subsets
    return d


def shatter_function(F: SetFamily, n: int, bound: int = DEFAULT_UNIVERSE_BOUND) -> int:
    """max over n-subsets B of the universe of |F ∩ B|."""
    _check(F, bound)
    if not 0 <= n <= F.universe:
        raise DomainError(f"n={n} outside [0, {F.universe}]")
    return max(trace_count(F, B) for B in _subset_masks(F.universe, n))


def sauer_bound(n: int, d: int) -> int:
    return sum(comb(n, i) for i in range(d + 1))


def sauer_check(F: SetFamily, bound: int = DEFAULT_UNIVERSE_BOUND) -> bool:
    """Verify shatter_function(F, n) <= sum_{i<=d} C(n, i) for every n <= u."""
    d = vc_dimension(F, bound)
    if d < 0:
        return True
    return all(shatter_function(F, n, bound) <= sauer_bound(n, d) for n in range(F.universe + 1))


def dual_family(elements, probes, E) -> SetFamily:
    """Family on the probe index set {1..|probes|}: one set per element x,
    namely {j : E(*probes[j-1], x)}. Truth patterns are exactly its members."""
    sets = []
    for x in elements:
        m = 0
        for j, probe in enumerate(probes):
            if E(*probe, x):
                m |= 1 << j
        sets.append(m)
    return SetFamily(len(probes), tuple(sets))
