"""Test helpers for alohacalc tests."""
