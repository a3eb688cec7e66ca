"""
Command-line overrides of config values using JSONPath expressions.
"""

import copy
import json
from typing import Any, Sequence

from jsonpath_ng import parse as jsonpath_parse


class OverrideError(ValueError):
    """Raised when an override is malformed or cannot be applied."""

    pass


def parse_value(text: str) -> Any:
    """
    Parse an override value.

    JSON literals (numbers, booleans, lists, quoted strings) are decoded;
    anything else is kept as a plain string, so `--set name=foo` works
    without quoting.
    """
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def normalize_path(path: str) -> str:
    """Add the `$.` root to dot-notation paths ("sweep.stop" -> "$.sweep.stop")."""
    path = path.strip()
    if not path:
        raise OverrideError("Override path is empty")
    if not path.startswith("$"):
        path = f"$.{path}"
    return path


def set_value(data: dict[str, Any], path: str, value: Any) -> dict[str, Any]:
    """
    Set the value at a JSONPath, creating intermediate sections.

    Args:
        data: Config tree (modified in place)
        path: JSONPath expression, with or without the `$.` prefix
        value: New value

    Returns:
        The updated tree

    Raises:
        OverrideError: If the path does not parse or cannot be created
    """
    path = normalize_path(path)
    try:
        expression = jsonpath_parse(path)
    except Exception as e:
        raise OverrideError(f"Failed to parse JSONPath expression '{path}': {e}")

    try:
        return expression.update_or_create(data, value)
    except Exception as e:
        raise OverrideError(f"Failed to set '{path}': {e}")


def apply_overrides(data: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """
    Apply `PATH=VALUE` overrides to a copy of a config tree.

    Args:
        data: Parsed config
        overrides: Strings like "sweep.stop=300" or "$.routing.matrix=[[0,0,1],[0.5,0.5,0]]"

    Returns:
        A new tree with the overrides applied in order

    Raises:
        OverrideError: If an override has no '=' or its path is invalid
    """
    result = copy.deepcopy(data)
    for override in overrides:
        if "=" not in override:
            raise OverrideError(f"Override '{override}' must look like PATH=VALUE")
        path, text = override.split("=", 1)
        result = set_value(result, path, parse_value(text))
    return result
