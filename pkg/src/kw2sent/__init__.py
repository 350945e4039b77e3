"""Keyword-to-sentence generation with POS-template control."""

__version__ = "0.1.0"
