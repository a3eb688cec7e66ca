"""Utility modules for alohacalc."""

from .csv_format import format_value, read_csv, write_csv

__all__ = ["format_value", "read_csv", "write_csv"]
