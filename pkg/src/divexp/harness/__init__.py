"""Experiment harness: CLI, persistence and summary metrics."""
