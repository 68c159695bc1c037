"""Cops and robbers on toroidal chess graphs."""

__version__ = "0.1.0"
