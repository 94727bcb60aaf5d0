"""Sandpile groups of random digraphs and their Cohen-Lenstra limits."""

__version__ = "0.1.0"
