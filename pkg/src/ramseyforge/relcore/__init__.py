"""Sequences, relations, indiscernibility search and VC utilities."""

from .relations import (
    KRelation,
    Truth,
    TruthPattern,
    as_seq,
    constant_relation,
    is_indiscernible,
    random_relation,
    table_relation,
    truth_pattern,
)
from .report import ExtractionReport, jsonable
from .search import (
    TupleCache,
    find_avoiding_coloring,
    log_iter,
    max_indiscernible,
    ramsey_exact,
    ramsey_search_estimate,
    tower,
)
from .seqio import format_sequence, parse_sequence, read_sequence, write_sequence
from .vc import SetFamily, dual_family, sauer_bound, sauer_check, shatter_function, trace_count, vc_dimension

__all__ = [
    "ExtractionReport",
    "KRelation",
    "SetFamily",
    "Truth",
    "TruthPattern",
    "TupleCache",
    "as_seq",
    "constant_relation",
    "dual_family",
    "find_avoiding_coloring",
    "format_sequence",
    "is_indiscernible",
    "jsonable",
    "log_iter",
    "max_indiscernible",
    "parse_sequence",
    "ramsey_exact",
    "ramsey_search_estimate",
    "random_relation",
    "read_sequence",
    "sauer_bound",
    "sauer_check",
    "shatter_function",
    "table_relation",
    "tower",
    "trace_count",
    "truth_pattern",
    "vc_dimension",
    "write_sequence",
]
