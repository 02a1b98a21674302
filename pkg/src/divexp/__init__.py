"""Diverse exploration with high-confidence off-policy safety tests."""

__version__ = "0.1.0"
