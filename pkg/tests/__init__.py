"""Tests for alohacalc."""
