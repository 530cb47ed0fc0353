"""Structured-grid simulator and diagnostic suite for the dynamic linear
relaxed micromorphic continuum."""

__version__ = "0.1.0"
