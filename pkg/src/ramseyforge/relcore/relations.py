"""k-ary relations, indiscernibility and truth patterns."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Optional, Sequence

from ..errors import ArityError, UndeterminedPattern
from ..exactnum import exact

Truth = Optional[bool]  # None means undetermined


@dataclass(frozen=True)
class KRelation:
    """A k-ary relation given by a deterministic evaluator.

    ``func`` receives k exact numbers and returns True, False or None
    (undetermined). ``symbolic`` optionally evaluates the same relation on
    :class:`~ramseyforge.exactnum.LogExpr` arguments; relations that are
    nested inside log-transformed step-up relations need it.
    """

    arity: int
    func: Callable[..., Truth]
    name: str = "E"
    symbolic: Optional[Callable[..., Truth]] = None

    def __post_init__(self):
        if self.arity < 1:
            raise ArityError("arity must be at least 1")

    def __call__(self, *args) -> Truth:
        if len(args) != self.arity:
            raise ArityError(f"{self.name} takes {self.arity} arguments, got {len(args)}")
        return self.func(*args)

    def on_exprs(self, *args) -> Truth:
        if self.symbolic is None:
            raise TypeError(f"relation {self.name} has no symbolic evaluator")
        if len(args) != self.arity:
            raise ArityError(f"{self.name} takes {self.arity} arguments, got {len(args)}")
        return self.symbolic(*args)

    def __repr__(self):
        return f"KRelation({self.name}, arity={self.arity})"


def constant_relation(k: int, value: bool = True) -> KRelation:
    return KRelation(k, lambda *xs: value, f"const{int(value)}_{k}", lambda *xs: value)


def table_relation(k: int, table: dict, name: str = "table") -> KRelation:
    """Relation on positions/labels given by an explicit truth table.

    ``table`` maps k-tuples (as stored in the sequence) to booleans; missing
    tuples evaluate to False.
    """
    frozen = dict(table)
    return KRelation(k, lambda *xs: frozen.get(tuple(xs), False), name)


def is_indiscernible(s: Sequence, E: KRelation) -> Truth:
    """True iff E is constant on all increasing k-tuples of ``s``.

    Returns None when some evaluation is undetermined and the determined
    ones do not already show both truth values.
    """
    k = E.arity
    if len(s) < k:
        raise ArityError(f"sequence of length {len(s)} shorter than arity {k}")
    seen_true = seen_false = unknown = False
    for t in combinations(s, k):
        v = E(*t)
        if v is None:
            unknown = True
        elif v:
            seen_true = True
        else:
            seen_false = True
        if seen_true and seen_false:
            return False
    if unknown:
        return None
    return True


TruthPattern = tuple


def truth_pattern(x, probes: Sequence[tuple], E: KRelation) -> TruthPattern:
    """Bit vector ``(E(*probe, x) for probe in probes)``.

    Each probe is a (k-1)-tuple of ground elements.
    """
    bits = []
    for probe in probes:
        v = E(*probe, x)
        if v is None:
            raise UndeterminedPattern(f"{E.name}{(*probe, x)} is undetermined")
        bits.append(1 if v else 0)
    return tuple(bits)


def as_seq(values) -> list:
    return [exact(v) for v in values]


def random_relation(k: int, seed: int, p_true: float = 0.5, name: str | None = None) -> KRelation:
    """Deterministic pseudo-random k-ary relation keyed on (seed, tuple).

    Independent of Python's hash randomisation, so reruns agree bit for bit.
    """
    import hashlib

    threshold = int(p_true * 2**32)

    def func(*xs):
        h = hashlib.blake2b(repr((seed,) + tuple(xs)).encode(), digest_size=4).digest()
        return int.from_bytes(h, "big") < threshold

    return KRelation(k, func, name or f"rand{k}_s{seed}")
