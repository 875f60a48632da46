"""Rectangular typed data tables, the ground truth behind every chart."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Sequence

from .errors import ValidationError

# Numeric cells are stored with at most this many significant digits so the
# decimal-string serialization round-trips exactly.
SIGNIFICANT_DIGITS = 6


def canon_num(x: Any) -> float:
    """Canonicalize a numeric cell: finite float with <= 6 significant digits."""
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ValidationError("bad_cell_type", f"expected a number, got {x!r}")
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError("nonfinite_numeric", f"non-finite numeric cell {x!r}")
    x = float(f"{x:.{SIGNIFICANT_DIGITS}g}")
    return 0.0 if x == 0.0 else x


def fmt_num(x: float) -> str:
    """Canonical decimal string for a canonicalized number."""
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


class ColumnKind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    TEMPORAL = "temporal"


@dataclass(frozen=True)
class Column:
    name: str
    kind: ColumnKind

    def __post_init__(self):
        if not self.name:
            raise ValidationError("empty_column_name", "column name must be non-empty")
        if not isinstance(self.kind, ColumnKind):
            object.__setattr__(self, "kind", ColumnKind(self.kind))


@dataclass(frozen=True)
class DataTable:
    """Immutable typed table. Numeric cells are canonicalized on construction."""

    name: str
    columns: tuple[Column, ...]
    rows: tuple[tuple[Any, ...], ...]

    def __post_init__(self):
        columns = tuple(
            c if isinstance(c, Column) else Column(*c) for c in self.columns
        )
        object.__setattr__(self, "columns", columns)
        if not columns:
            raise ValidationError("empty_table", "table needs at least one column")
        names = [c.name for c in columns]
        if len(set(names)) != len(names):
            raise ValidationError("dup_column", f"duplicate column names in {names}")
        if not self.rows:
            raise ValidationError("empty_table", "table needs at least one row")
        canon_rows = []
        for i, row in enumerate(self.rows):
            if len(row) != len(columns):
                raise ValidationError(
                    "row_width",
                    f"row {i} has {len(row)} cells, expected {len(columns)}",
                )
            cells = []
            for col, cell in zip(columns, row):
                if col.kind is ColumnKind.NUMERIC:
                    cells.append(canon_num(cell))
                else:
                    if not isinstance(cell, str):
                        raise ValidationError(
                            "bad_cell_type",
                            f"column {col.name!r} expects strings, got {cell!r}",
                        )
                    cells.append(cell)
            canon_rows.append(tuple(cells))
        object.__setattr__(self, "rows", tuple(canon_rows))

    # -- accessors ---------------------------------------------------------

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    def column_index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise ValidationError("unknown_column", f"no column named {name!r}")

    def column_kind(self, name: str) -> ColumnKind:
        return self.columns[self.column_index(name)].kind

    def column_values(self, name: str) -> list:
        j = self.column_index(name)
        return [row[j] for row in self.rows]

    def columns_of_kind(self, kind: ColumnKind) -> list[str]:
        return [c.name for c in self.columns if c.kind is kind]

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "columns": [{"name": c.name, "kind": c.kind.value} for c in self.columns],
            "rows": [
                [
                    fmt_num(cell) if col.kind is ColumnKind.NUMERIC else cell
                    for col, cell in zip(self.columns, row)
                ]
                for row in self.rows
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "DataTable":
        columns = tuple(Column(c["name"], ColumnKind(c["kind"])) for c in d["columns"])
        rows = []
        for raw in d["rows"]:
            cells = []
            for col, cell in zip(columns, raw):
                if col.kind is ColumnKind.NUMERIC:
                    cells.append(float(cell))
                else:
                    cells.append(cell)
            rows.append(tuple(cells))
        return cls(name=d["name"], columns=columns, rows=tuple(rows))


def make_table(
    name: str,
    columns: Sequence[tuple[str, ColumnKind | str]],
    rows: Iterable[Sequence[Any]],
) -> DataTable:
    """Convenience constructor used heavily in tests and generators."""
    cols = tuple(Column(n, ColumnKind(k)) for n, k in columns)
    return DataTable(name=name, columns=cols, rows=tuple(tuple(r) for r in rows))
