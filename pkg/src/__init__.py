"""Grafted multi-scale pyramids for toy vision transformers."""

__version__ = "0.1.0"
