"""Retrieval-augmented repair tooling for a small HDL dialect."""

__version__ = "0.1.0"
