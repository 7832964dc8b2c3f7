"""Exact symbolic p-adic integration by cell decomposition."""

__version__ = "0.1.0"
