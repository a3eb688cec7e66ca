"""Table-backed success functions and their CSV layout."""

import logging
from pathlib import Path
from typing import Mapping, Optional

from .algebra import (
    DimensionError,
    DomainError,
    Load,
    SuccessEvaluator,
    VerificationBox,
    as_load,
)
from ..utils.csv_format import read_csv, write_csv

logger = logging.getLogger(__name__)


class TableEvaluator(SuccessEvaluator):
    """
    Success function stored as a finite lookup table over a box.

    With `saturating=True`, a class count above its cap is evaluated as if it
    were the cap (the equivalence-class clamping of D-fold networks, where
    every load with n_k > D+1 decodes like n_k = D+1). Without saturation a
    query outside the box raises DomainError.
    """

    def __init__(
        self,
        table: Mapping[Load, Load],
        cap: Load,
        saturating: bool = False,
        name: Optional[str] = None,
    ):
        cap = as_load(cap)
        super().__init__(len(cap), name or "table")
        self.box = VerificationBox(cap)
        self.saturating = saturating
        self._table: dict[Load, Load] = {}

        for load, value in table.items():
            load = as_load(load, self.dimension)
            self._table[load] = as_load(value, self.dimension)

        missing = [load for load in self.box.loads() if load not in self._table]
        if missing:
            raise ValueError(f"Table is missing {len(missing)} loads of its box, e.g. {missing[0]}")
        extra = [load for load in self._table if not self.box.contains(load)]
        if extra:
            raise ValueError(f"Table has loads outside its cap {cap}, e.g. {extra[0]}")

    @property
    def cap(self) -> Load:
        return self.box.upper

    def _evaluate(self, load: Load) -> Load:
        if self.box.contains(load):
            return self._table[load]
        if not self.saturating:
            raise DomainError(f"Load {load} is outside the table box {self.cap}")
        clamped = tuple(min(n, u) for n, u in zip(load, self.cap))
        return self._table[clamped]

    def rows(self) -> list[tuple[Load, Load]]:
        """(load, phi(load)) pairs in lexicographic order of the load."""
        return [(load, self._table[load]) for load in self.box.loads()]


def materialize(
    f: SuccessEvaluator,
    box: VerificationBox,
    saturating: bool = False,
    name: Optional[str] = None,
) -> TableEvaluator:
    """
    Tabulate a lazy evaluator over a box.

    Metadata flags are carried over: a property that holds everywhere holds on
    the box, and the saturated extension repeats boundary values only.
    """
    if box.dimension != f.dimension:
        raise DimensionError(f"Box has {box.dimension} classes, {f.name} has {f.dimension}")
    logger.info("Materialising %s over %d loads", f.name, box.size)
    table = {load: f(load) for load in box.loads()}
    result = TableEvaluator(table, box.upper, saturating=saturating, name=name or f.name)
    return result.mark(monotone_failure=f.monotone_failure, all_or_nothing=f.all_or_nothing)


def table_header(dimension: int) -> list[str]:
    return [f"n_{k}" for k in range(1, dimension + 1)] + [
        f"phi_{k}" for k in range(1, dimension + 1)
    ]


def write_table_csv(table: TableEvaluator, path: Path | str) -> Path:
    """Write one row per load of the box, loads in lexicographic order."""
    rows = (load + value for load, value in table.rows())
    return write_csv(path, table_header(table.dimension), rows)


def read_table_csv(path: Path | str, saturating: bool = True, name: Optional[str] = None) -> TableEvaluator:
    """
    Load a table written in the `n_1..n_K,phi_1..phi_K` layout.

    The cap is the componentwise maximum of the loads present.

    Raises:
        ValueError: If the header is malformed or rows are missing
    """
    header, raw_rows = read_csv(path)
    if len(header) % 2 != 0 or len(header) == 0:
        raise ValueError(f"{path}: expected n_1..n_K,phi_1..phi_K columns, got {header}")
    dimension = len(header) // 2
    if header != table_header(dimension):
        raise ValueError(f"{path}: expected header {table_header(dimension)}, got {header}")

    table: dict[Load, Load] = {}
    for i, row in enumerate(raw_rows):
        if len(row) != 2 * dimension:
            raise ValueError(f"{path}: row {i + 1} has {len(row)} columns, expected {2 * dimension}")
        values = [int(cell) for cell in row]
        table[tuple(values[:dimension])] = tuple(values[dimension:])

    if not table:
        raise ValueError(f"{path}: no table rows")
    cap = tuple(max(load[k] for load in table) for k in range(dimension))
    return TableEvaluator(table, cap, saturating=saturating, name=name or Path(path).stem)
