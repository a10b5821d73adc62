"""Corpus generator and evaluation harness for sequential recommendation."""

__version__ = "0.1.0"
