"""Parser and validator for run configuration files (TOML or JSON)."""

import copy
import json
import tomllib
from pathlib import Path
from typing import Any, Optional, Sequence

from slugify import slugify

from .overrides import apply_overrides

COMMANDS = ("table", "induce", "de", "sim", "rayleigh", "admit")
RECEIVER_KINDS = ("sa", "dfold", "nearfar", "table", "topology")

# Allowed keys per section; anything else is rejected.
SCHEMA: dict[str, tuple[str, ...]] = {
    "receiver": ("kind", "D", "matrix", "topology_path", "path", "method", "cap"),
    "poisson": ("mode", "n_max", "epsilon"),
    "routing": ("matrix",),
    "de": ("i_max", "tol"),
    "sweep": ("slots", "users", "degrees", "class", "start", "stop", "step", "target", "target_class"),
    "sim": ("runs", "i_max", "assignment", "chunk"),
    "capture": ("gamma_db", "b_db", "gamma", "b", "n_max", "tail_tol"),
    "grid": ("points", "start", "stop", "step"),
}
TOP_LEVEL = ("command", "name", "seed", "output") + tuple(SCHEMA)

REQUIRED_SECTIONS: dict[str, tuple[str, ...]] = {
    "table": ("receiver",),
    "induce": ("receiver", "grid"),
    "de": ("sweep",),
    "sim": ("sweep", "sim"),
    "rayleigh": ("capture", "grid"),
    "admit": ("sweep",),
}


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_matrix(value: Any) -> bool:
    return (
        isinstance(value, list)
        and len(value) > 0
        and all(isinstance(row, list) and all(_is_number(x) for x in row) for row in value)
    )


def load_config_file(path: Path | str) -> dict[str, Any]:
    """Read a `.toml` or `.json` config into a plain dict."""
    path = Path(path)
    if path.suffix == ".json":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    else:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: top level must be a table/object")
    return data


class RunConfig:
    """A validated run description for one command."""

    def __init__(self, data: dict[str, Any], command: str, base_dir: Optional[Path | str] = None):
        """
        Args:
            data: Parsed config tree
            command: The command it will run
            base_dir: Directory relative paths in the config are resolved against

        Raises:
            ValueError: If the tree does not fit the schema for `command`
        """
        self.data = copy.deepcopy(data)
        self.command = command
        self.base_dir = Path(base_dir) if base_dir else Path.cwd()
        self._validate()

    @classmethod
    def load(cls, path: Path | str, command: str, overrides: Sequence[str] = ()) -> "RunConfig":
        """Read a config file, apply `PATH=VALUE` overrides, then validate."""
        path = Path(path)
        data = apply_overrides(load_config_file(path), overrides)
        return cls(data, command, base_dir=path.parent)

    def _validate(self) -> None:
        """Validate the config tree."""
        if self.command not in COMMANDS:
            raise ValueError(f"Unknown command '{self.command}'; expected one of {', '.join(COMMANDS)}")

        for key in self.data:
            if key not in TOP_LEVEL:
                raise ValueError(f"{key}: unknown key")
        for section, allowed in SCHEMA.items():
            if section not in self.data:
                continue
            if not isinstance(self.data[section], dict):
                raise ValueError(f"{section}: must be a section")
            for key in self.data[section]:
                if key not in allowed:
                    raise ValueError(f"{section}.{key}: unknown key")

        if "command" in self.data and self.data["command"] != self.command:
            raise ValueError(f"command: config is for '{self.data['command']}', not '{self.command}'")
        if "name" in self.data and (not isinstance(self.data["name"], str) or not self.data["name"].strip()):
            raise ValueError("name: must be a non-empty string")
        if "seed" in self.data and not _is_int(self.data["seed"]):
            raise ValueError("seed: must be an integer")
        if "output" in self.data and not isinstance(self.data["output"], str):
            raise ValueError("output: must be a path string")

        for section in REQUIRED_SECTIONS[self.command]:
            if section not in self.data:
                raise ValueError(f"{section}: section is required for '{self.command}'")
        if self.command in ("de", "sim", "admit"):
            if ("receiver" in self.data) == ("capture" in self.data):
                raise ValueError(f"'{self.command}' needs exactly one of [receiver] or [capture]")

        if "receiver" in self.data:
            self._validate_receiver(self.data["receiver"])
        if "poisson" in self.data:
            self._validate_poisson(self.data["poisson"])
        if "routing" in self.data:
            if not _is_matrix(self.data["routing"].get("matrix")):
                raise ValueError("routing.matrix: must be a non-empty list of numeric rows")
        if "de" in self.data:
            self._positive_int("de", "i_max")
            self._positive_number("de", "tol")
        if "sweep" in self.data:
            self._validate_sweep(self.data["sweep"])
        if "sim" in self.data:
            self._validate_sim(self.data["sim"])
        if "capture" in self.data:
            self._validate_capture(self.data["capture"])
        if "grid" in self.data:
            self._validate_grid(self.data["grid"])

    def _positive_int(self, section: str, key: str, required: bool = False, allow_zero: bool = False) -> None:
        values = self.data[section]
        if key not in values:
            if required:
                raise ValueError(f"{section}.{key}: is required")
            return
        value = values[key]
        if not _is_int(value) or value < (0 if allow_zero else 1):
            bound = "non-negative" if allow_zero else "positive"
            raise ValueError(f"{section}.{key}: must be a {bound} integer, got {value!r}")

    def _positive_number(self, section: str, key: str) -> None:
        value = self.data[section].get(key)
        if value is not None and (not _is_number(value) or value <= 0):
            raise ValueError(f"{section}.{key}: must be a positive number, got {value!r}")

    def _validate_receiver(self, receiver: dict[str, Any]) -> None:
        kind = receiver.get("kind")
        if kind not in RECEIVER_KINDS:
            raise ValueError(f"receiver.kind: must be one of {', '.join(RECEIVER_KINDS)}, got {kind!r}")
        self._positive_int("receiver", "D", required=kind in ("dfold", "topology"))
        self._positive_int("receiver", "cap")

        if kind == "topology":
            has_matrix = "matrix" in receiver
            has_path = "topology_path" in receiver
            if has_matrix == has_path:
                raise ValueError("receiver: topology needs exactly one of 'matrix' or 'topology_path'")
            if has_matrix and not _is_matrix(receiver["matrix"]):
                raise ValueError("receiver.matrix: must be a non-empty list of 0/1 rows")
            if receiver.get("method", "maxsum") not in ("maxsum", "combinators"):
                raise ValueError("receiver.method: must be 'maxsum' or 'combinators'")
        elif kind == "table":
            if not isinstance(receiver.get("path"), str):
                raise ValueError("receiver.path: is required for table receivers")

    def _validate_poisson(self, poisson: dict[str, Any]) -> None:
        if poisson.get("mode", "exact") not in ("exact", "truncated"):
            raise ValueError("poisson.mode: must be 'exact' or 'truncated'")
        self._positive_int("poisson", "n_max")
        self._positive_number("poisson", "epsilon")

    def _validate_sweep(self, sweep: dict[str, Any]) -> None:
        self._positive_int("sweep", "slots", required=True)
        users = sweep.get("users")
        if not isinstance(users, list) or not users or not all(_is_int(n) and n >= 0 for n in users):
            raise ValueError("sweep.users: must be a non-empty list of non-negative integers")
        degrees = sweep.get("degrees")
        if not isinstance(degrees, list) or len(degrees) != len(users):
            raise ValueError(f"sweep.degrees: must list one degree distribution per class ({len(users)})")
        for k, degree in enumerate(degrees):
            if _is_int(degree):
                if degree < 0:
                    raise ValueError(f"sweep.degrees[{k}]: repetition count must be non-negative")
            elif not (isinstance(degree, list) and degree and all(_is_number(c) for c in degree)):
                raise ValueError(
                    f"sweep.degrees[{k}]: must be a repetition count or a list of coefficients"
                )

        for key in ("class", "target_class"):
            self._positive_int("sweep", key)
            if sweep.get(key, 1) > len(users):
                raise ValueError(f"sweep.{key}: class {sweep[key]} outside 1..{len(users)}")
        for key in ("start", "stop"):
            self._positive_int("sweep", key, allow_zero=True)
        self._positive_int("sweep", "step")
        if sweep.get("start", 0) > sweep.get("stop", sweep.get("start", 0)):
            raise ValueError("sweep: start must not exceed stop")
        target = sweep.get("target")
        if target is not None and (not _is_number(target) or not 0 < target < 1):
            raise ValueError(f"sweep.target: must be a probability in (0, 1), got {target!r}")
        if self.command in ("de", "sim", "admit") and ("start" not in sweep or "stop" not in sweep):
            raise ValueError(f"sweep: 'start' and 'stop' are required for '{self.command}'")

    def _validate_sim(self, sim: dict[str, Any]) -> None:
        self._positive_int("sim", "runs", required=True)
        self._positive_int("sim", "i_max")
        self._positive_int("sim", "chunk")
        assignment = sim.get("assignment")
        if assignment is None:
            return
        users = self.data.get("sweep", {}).get("users", [])
        if not isinstance(assignment, list) or len(assignment) != len(users):
            raise ValueError(f"sim.assignment: must list one rule per class ({len(users)})")
        for k, rule in enumerate(assignment):
            if isinstance(rule, str):
                if rule not in ("uniform", "scheduled"):
                    raise ValueError(f"sim.assignment[{k}]: must be 'uniform', 'scheduled' or a slot list")
            elif not (isinstance(rule, list) and rule and all(_is_int(s) and s >= 0 for s in rule)):
                raise ValueError(f"sim.assignment[{k}]: must be 'uniform', 'scheduled' or a slot list")

    def _validate_capture(self, capture: dict[str, Any]) -> None:
        for linear, db in (("gamma", "gamma_db"), ("b", "b_db")):
            if (linear in capture) == (db in capture):
                raise ValueError(f"capture: exactly one of '{linear}' or '{db}' is required")
            if linear in capture:
                self._positive_number("capture", linear)
            elif not _is_number(capture[db]):
                raise ValueError(f"capture.{db}: must be a number")
        self._positive_int("capture", "n_max")
        self._positive_number("capture", "tail_tol")

    def _validate_grid(self, grid: dict[str, Any]) -> None:
        if "points" in grid:
            if any(k in grid for k in ("start", "stop", "step")):
                raise ValueError("grid: use either 'points' or 'start'/'stop'/'step'")
            points = grid["points"]
            if not isinstance(points, list) or not points:
                raise ValueError("grid.points: must be a non-empty list")
            for i, point in enumerate(points):
                values = point if isinstance(point, list) else [point]
                if not values or not all(_is_number(v) and v >= 0 for v in values):
                    raise ValueError(f"grid.points[{i}]: offered loads must be non-negative numbers")
            return

        for key in ("start", "stop", "step"):
            value = grid.get(key)
            if not _is_number(value) or value < 0:
                raise ValueError(f"grid.{key}: must be a non-negative number")
        if grid["step"] <= 0 or grid["start"] > grid["stop"]:
            raise ValueError("grid: need step > 0 and start <= stop")

    @property
    def name(self) -> str:
        return self.data.get("name", "run")

    @property
    def seed(self) -> int:
        return self.data.get("seed", 0)

    @property
    def receiver(self) -> Optional[dict[str, Any]]:
        return self.data.get("receiver")

    @property
    def capture(self) -> Optional[dict[str, Any]]:
        return self.data.get("capture")

    @property
    def poisson(self) -> dict[str, Any]:
        return self.data.get("poisson", {})

    @property
    def routing(self) -> Optional[list[list[float]]]:
        routing = self.data.get("routing")
        return routing["matrix"] if routing else None

    @property
    def de(self) -> dict[str, Any]:
        return self.data.get("de", {})

    @property
    def sweep(self) -> dict[str, Any]:
        return self.data.get("sweep", {})

    @property
    def sim(self) -> dict[str, Any]:
        return self.data.get("sim", {})

    @property
    def grid(self) -> dict[str, Any]:
        return self.data.get("grid", {})

    def resolve(self, path: str) -> Path:
        """Resolve a path from the config against the config file's directory."""
        candidate = Path(path)
        return candidate if candidate.is_absolute() else self.base_dir / candidate

    def output_path(self) -> Path:
        """`output` if given, else `<slugified name>-<command>.csv` in the working directory."""
        if "output" in self.data:
            return Path(self.data["output"])
        return Path(f"{slugify(self.name)}-{self.command}.csv")
