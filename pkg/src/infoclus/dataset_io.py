"""Loading and validating the attribute table and its 2-D embedding from CSV."""
from __future__ import annotations

import csv
import enum
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MixedDataError, ParseError, SizeError

_NUMBER = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")


class Kind(str, enum.Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


def is_number(token: str) -> bool:
    return bool(_NUMBER.match(token))


@dataclass(frozen=True, eq=False)
class Dataset:
    """An n x m attribute table of a single kind.

    For categorical data ``codes[i, j]`` indexes ``categories[j]``; category
    dictionaries are kept in order of first appearance.
    """

    names: tuple[str, ...]
    kind: Kind
    numeric_values: np.ndarray | None = None
    codes: np.ndarray | None = None
    categories: tuple[tuple[str, ...], ...] | None = None

    @property
    def n(self) -> int:
        values = self.numeric_values if self.kind is Kind.NUMERIC else self.codes
        return int(values.shape[0])

    @property
    def m(self) -> int:
        return len(self.names)

    @classmethod
    def from_numeric(cls, values, names=None) -> "Dataset":
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise SizeError("numeric values must form a 2-D table")
        if names is None:
            names = [f"a{j + 1}" for j in range(values.shape[1])]
        ds = cls(names=tuple(names), kind=Kind.NUMERIC, numeric_values=values)
        _validate(ds)
        return ds

    @classmethod
    def from_categorical(cls, rows, names=None) -> "Dataset":
        """Build from a table of string tokens, one row per point."""
        rows = [list(map(str, r)) for r in rows]
        m = len(rows[0]) if rows else 0
        if names is None:
            names = [f"a{j + 1}" for j in range(m)]
        codes, cats = _encode(rows, m)
        ds = cls(names=tuple(names), kind=Kind.CATEGORICAL, codes=codes, categories=cats)
        _validate(ds)
        return ds


@dataclass(frozen=True, eq=False)
class Embedding:
    coords: np.ndarray

    @property
    def n(self) -> int:
        return int(self.coords.shape[0])


def _validate(ds: Dataset) -> None:
    if ds.m < 1:
        raise SizeError("dataset needs at least one attribute")
    if ds.n < 2:
        raise SizeError(f"dataset needs at least 2 rows, got {ds.n}")
    if ds.kind is Kind.NUMERIC:
        if ds.numeric_values.shape[1] != ds.m:
            raise SizeError("column count does not match attribute names")
        if not np.all(np.isfinite(ds.numeric_values)):
            raise ParseError("numeric values must be finite")
    else:
        if ds.codes.shape[1] != ds.m:
            raise SizeError("column count does not match attribute names")
        for j, cats in enumerate(ds.categories):
            col = ds.codes[:, j]
            if col.min() < 0 or col.max() >= len(cats):
                raise ParseError(f"category code out of range in column {ds.names[j]!r}")


def _encode(rows: list[list[str]], m: int):
    codes = np.empty((len(rows), m), dtype=np.int64)
    cats = []
    for j in range(m):
        lookup: dict[str, int] = {}
        for i, row in enumerate(rows):
            codes[i, j] = lookup.setdefault(row[j], len(lookup))
        cats.append(tuple(lookup))
    return codes, tuple(cats)


def _read_rows(path) -> list[list[str]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [[cell.strip() for cell in row] for row in csv.reader(fh)]
    return [r for r in rows if r and any(r)]


def load_dataset(path, kind_override: Kind | str | None = None) -> Dataset:
    """Read a headed CSV table and infer whether it is numeric or categorical.

    A column is numeric when every cell parses as a number. All-numeric tables
    are numeric, tables whose every column holds some non-numeric token are
    categorical, anything in between raises MixedDataError. ``kind_override``
    skips inference.
    """
    rows = _read_rows(path)
    if not rows:
        raise ParseError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    m = len(header)
    for lineno, row in enumerate(body, start=2):
        if len(row) != m:
            raise ParseError(f"{path}: row {lineno} has {len(row)} fields, header has {m}")
    if len(body) < 2:
        raise SizeError(f"{path}: need at least 2 data rows, got {len(body)}")

    if kind_override is not None:
        kind = Kind(kind_override)
    else:
        numeric_cols = [all(is_number(row[j]) for row in body) for j in range(m)]
        if all(numeric_cols):
            kind = Kind.NUMERIC
        elif not any(numeric_cols):
            kind = Kind.CATEGORICAL
        else:
            num = [header[j] for j in range(m) if numeric_cols[j]]
            cat = [header[j] for j in range(m) if not numeric_cols[j]]
            raise MixedDataError(
                f"{path}: mixed data not supported (numeric columns {num}, categorical columns {cat})"
            )

    if kind is Kind.NUMERIC:
        for lineno, row in enumerate(body, start=2):
            bad = [c for c in row if not is_number(c)]
            if bad:
                raise ParseError(f"{path}: row {lineno}: non-numeric token {bad[0]!r}")
        values = np.array([[float(c) for c in row] for row in body], dtype=float)
        return Dataset.from_numeric(values, header)
    return Dataset.from_categorical(body, header)


def load_embedding(path, n_expected: int) -> Embedding:
    """Read an n x 2 coordinate table; a header row is detected by parse failure."""
    rows = _read_rows(path)
    if not rows:
        raise ParseError(f"{path}: empty file")
    if not all(is_number(c) for c in rows[0]):
        rows = rows[1:]
    for lineno, row in enumerate(rows, start=1):
        if len(row) != 2:
            raise ParseError(f"{path}: expected 2 columns, row {lineno} has {len(row)}")
        if not all(is_number(c) for c in row):
            raise ParseError(f"{path}: non-numeric coordinate in row {lineno}")
    if len(rows) != n_expected:
        raise SizeError(f"{path}: embedding has {len(rows)} rows, dataset has {n_expected}")
    coords = np.array([[float(a), float(b)] for a, b in rows], dtype=float)
    if not np.all(np.isfinite(coords)):
        raise ParseError(f"{path}: coordinates must be finite")
    return Embedding(coords)


def write_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(dataset.names)
        if dataset.kind is Kind.NUMERIC:
            for row in dataset.numeric_values:
                writer.writerow([repr(float(v)) for v in row])
        else:
            for row in dataset.codes:
                writer.writerow([dataset.categories[j][c] for j, c in enumerate(row)])


def write_embedding(embedding: Embedding, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y"])
        for x, y in embedding.coords:
            writer.writerow([repr(float(x)), repr(float(y))])
