"""Experiment runner, records and CLI."""
