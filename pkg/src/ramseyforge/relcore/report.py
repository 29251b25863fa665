"""ExtractionReport: the common result record of every extractor."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

from ..exactnum import format_exact


def jsonable(x):
    """Convert exact numbers (recursively) to JSON-safe values.

    Integers and rationals become decimal strings so that big values survive
    any JSON reader bit-exactly.
    """
    from fractions import Fraction

    if isinstance(x, bool) or x is None or isinstance(x, (str, float)):
        return x
    if isinstance(x, (int, Fraction)):
        return format_exact(x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if hasattr(x, "to_json"):
        return x.to_json()
    return str(x)


@dataclass
class ExtractionReport:
    """What an extractor found and how it was certified.

    ``positions`` are 1-based indices into the input sequence, strictly
    increasing. ``verified`` is only set after the named certificate has been
    re-checked on the output.
    """

    input: dict
    positions: list[int]
    certificate: str
    verified: bool = False
    exhaustive: bool = True
    measured: dict[str, Any] = field(default_factory=dict)
    wall_clock_s: float = 0.0
    seed: int | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.positions)

    def to_json(self, include_timing: bool = True) -> dict:
        d = asdict(self)
        d["input"] = jsonable(self.input)
        d["measured"] = jsonable(self.measured)
        if not include_timing:
            d.pop("wall_clock_s")
        return d
