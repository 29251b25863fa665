"""Exact constructions and extraction algorithms for Ramsey numbers of definable relations."""

__version__ = "0.1.0"
