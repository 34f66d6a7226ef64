"""Exact-arithmetic constructions and checks for probabilistic finite automata."""

__version__ = "0.1.0"
