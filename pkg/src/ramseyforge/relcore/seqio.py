"""Sequence files: CSV (one element per line) and JSON arrays.

Integers are written in decimal, rationals as ``num/den``. JSON arrays hold
strings (decimal or ``num/den``); plain JSON integers are accepted on read.
Round trips are bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import DomainError
from ..exactnum import exact, format_exact


def parse_sequence(text: str, fmt: str) -> list:
    if fmt == "csv":
        out = []
        for n, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                out.append(exact(line))
            except (ValueError, ZeroDivisionError) as e:
                raise DomainError(f"line {n}: cannot parse {line!r}") from e
        return out
    if fmt == "json":
        data = json.loads(text)
        if not isinstance(data, list):
            raise DomainError("JSON sequence must be an array")
        out = []
        for item in data:
            if isinstance(item, float):
                raise DomainError(f"floating point element {item!r} is not exact")
            try:
                out.append(exact(item))
            except (TypeError, ValueError, ZeroDivisionError) as e:
                raise DomainError(f"cannot parse element {item!r}") from e
        return out
    raise DomainError(f"unknown sequence format {fmt!r}")


def format_sequence(seq, fmt: str) -> str:
    if fmt == "csv":
        return "".join(format_exact(x) + "\n" for x in seq)
    if fmt == "json":
        return json.dumps([format_exact(x) for x in seq])
    raise DomainError(f"unknown sequence format {fmt!r}")


def _guess_format(path: Path) -> str:
    return "json" if path.suffix.lower() == ".json" else "csv"


def read_sequence(path, fmt: str | None = None) -> list:
    path = Path(path)
    return parse_sequence(path.read_text(), fmt or _guess_format(path))


def write_sequence(path, seq, fmt: str | None = None) -> None:
    path = Path(path)
    path.write_text(format_sequence(seq, fmt or _guess_format(path)))
