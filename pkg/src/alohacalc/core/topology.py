"""Bipartite association graphs between traffic classes and receivers."""

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from ..utils.csv_format import read_csv, write_csv


class TopologyError(ValueError):
    """Raised for malformed or unsuitable bi-adjacency matrices."""

    pass


@dataclass(frozen=True)
class BipartiteTopology:
    """
    K x T binary bi-adjacency matrix H.

    Row k lists the receivers (or internal classes) class k is sent to (B_k);
    column t lists the classes feeding receiver t (C_t).
    """

    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in row) for row in self.matrix)
        if not rows:
            raise TopologyError("Topology needs at least one class (row)")
        width = len(rows[0])
        for k, row in enumerate(rows):
            if len(row) != width:
                raise TopologyError(f"Row {k + 1} has {len(row)} entries, expected {width}")
            if any(x not in (0, 1) for x in row):
                raise TopologyError(f"Row {k + 1} has non-binary entries: {row}")
        object.__setattr__(self, "matrix", rows)

    @classmethod
    def from_array(cls, array: Sequence[Sequence[int]] | np.ndarray) -> "BipartiteTopology":
        return cls(tuple(tuple(int(x) for x in row) for row in np.asarray(array)))

    @classmethod
    def from_edges(cls, edges: Sequence[tuple[int, int]], classes: int, receivers: int) -> "BipartiteTopology":
        """Build from 1-based (k, t) pairs."""
        array = np.zeros((classes, receivers), dtype=int)
        for k, t in edges:
            if not (1 <= k <= classes and 1 <= t <= receivers):
                raise TopologyError(f"Edge ({k},{t}) outside a {classes}x{receivers} topology")
            array[k - 1, t - 1] = 1
        return cls.from_array(array)

    @classmethod
    def identity(cls, size: int) -> "BipartiteTopology":
        return cls.from_array(np.eye(size, dtype=int))

    @property
    def classes(self) -> int:
        """K, the number of rows."""
        return len(self.matrix)

    @property
    def receivers(self) -> int:
        """T, the number of columns."""
        return len(self.matrix[0])

    @cached_property
    def array(self) -> np.ndarray:
        array = np.array(self.matrix, dtype=int).reshape(self.classes, self.receivers)
        array.flags.writeable = False
        return array

    @cached_property
    def row_sets(self) -> tuple[tuple[int, ...], ...]:
        """B_k as 0-based receiver indices."""
        return tuple(tuple(t for t, x in enumerate(row) if x) for row in self.matrix)

    @cached_property
    def column_sets(self) -> tuple[tuple[int, ...], ...]:
        """C_t as 0-based class indices."""
        return tuple(
            tuple(k for k in range(self.classes) if self.matrix[k][t]) for t in range(self.receivers)
        )

    @property
    def edge_count(self) -> int:
        return int(self.array.sum())

    def edges(self) -> list[tuple[int, int]]:
        """1-based (k, t) pairs in row-major order."""
        return [(k + 1, t + 1) for k, row in enumerate(self.row_sets) for t in row]

    @property
    def is_multiplexing(self) -> bool:
        """Every class feeds at most one receiver."""
        return all(len(row) <= 1 for row in self.row_sets)

    @property
    def is_coding(self) -> bool:
        """Every receiver is fed by at most one class."""
        return all(len(column) <= 1 for column in self.column_sets)

    def map_load(self, load: Sequence[int]) -> tuple[int, ...]:
        """The internal load nH."""
        if len(load) != self.classes:
            raise TopologyError(f"Load {tuple(load)} does not match {self.classes} classes")
        return tuple(
            sum(load[k] for k in column) for column in self.column_sets
        )

    def write_csv(self, path: Path | str) -> Path:
        header = [f"t_{t}" for t in range(1, self.receivers + 1)]
        return write_csv(path, header, self.matrix)

    def write_edges(self, path: Path | str) -> Path:
        return write_csv(path, ["k", "t"], self.edges())


def read_topology(path: Path | str) -> BipartiteTopology:
    """
    Read a topology from CSV or an edge list.

    A file whose header is `k,t` is an edge list (1-based pairs; K and T are
    the largest indices seen). Anything else is a 0/1 matrix; an optional
    header row of non-numeric labels is skipped. Lines starting with `#` are
    comments.
    """
    try:
        header, rows = read_csv(path, comment="#")
    except ValueError:
        raise TopologyError(f"{path}: empty topology file")

    if header == ["k", "t"]:
        try:
            edges = [(int(k), int(t)) for k, t in rows]
        except ValueError as e:
            raise TopologyError(f"{path}: bad edge row: {e}") from e
        if not edges:
            raise TopologyError(f"{path}: edge list has no edges")
        return BipartiteTopology.from_edges(
            edges, max(k for k, _ in edges), max(t for _, t in edges)
        )

    if all(c.lstrip("-").isdigit() for c in header):
        rows = [header] + rows
    try:
        return BipartiteTopology(tuple(tuple(int(c) for c in row) for row in rows))
    except ValueError as e:
        raise TopologyError(f"{path}: {e}") from e


def split_bipartite(topology: BipartiteTopology) -> tuple[BipartiteTopology | None, BipartiteTopology | None]:
    """
    Factor H = H1 H2 through one intermediate node per edge.

    Edges are numbered in row-major order. H1 (K x E) sends class k to the
    nodes of its own edges, so every column has one nonzero (a coding
    matrix); H2 (E x T) sends each edge node to its receiver, so every row has
    one nonzero (a multiplexing matrix).

    Returns:
        (H1, H2), or (None, None) when H has no edges
    """
    edges = [(k, t) for k, row in enumerate(topology.row_sets) for t in row]
    if not edges:
        return None, None

    h1 = np.zeros((topology.classes, len(edges)), dtype=int)
    h2 = np.zeros((len(edges), topology.receivers), dtype=int)
    for e, (k, t) in enumerate(edges):
        h1[k, e] = 1
        h2[e, t] = 1
    return BipartiteTopology.from_array(h1), BipartiteTopology.from_array(h2)
