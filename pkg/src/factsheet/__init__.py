"""Automated fact-sheet generation from tabular data."""

__version__ = "0.1.0"
