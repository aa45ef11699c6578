"""Framingham CHD data ingestion and partitioning.

The study uses seven numeric risk factors plus a binary ten-year CHD label.
Rows missing any of those eight values are dropped (complete-case analysis).
Sex is carried along for the per-sex analyses but never affects the overall
row count.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

FEATURE_KEYS = ("age", "tot_chol", "sys_bp", "dia_bp", "bmi", "heart_rate", "cigs_per_day")

# Kaggle "framingham.csv" header names.
KAGGLE_COLUMNS = {
    "age": "age",
    "tot_chol": "totChol",
    "sys_bp": "sysBP",
    "dia_bp": "diaBP",
    "bmi": "BMI",
    "heart_rate": "heartRate",
    "cigs_per_day": "cigsPerDay",
    "chd": "TenYearCHD",
    "sex": "male",
}

MISSING_TOKENS = frozenset({"", "NA"})
SEXES = ("male", "female")


class DataError(Exception):
    """Raised when input data cannot be ingested."""


@dataclass(frozen=True)
class PatientRecord:
    age: float
    tot_chol: float
    sys_bp: float
    dia_bp: float
    bmi: float
    heart_rate: float
    cigs_per_day: float
    chd: int
    sex: str | None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Complete-case feature matrix with labels and sex tags.

    ``X`` has one column per entry of ``feature_names``; ``columns`` holds the
    original 1-based variable indices (X1..X7) those columns correspond to.
    """

    X: np.ndarray
    y: np.ndarray
    sex: tuple[str | None, ...]
    feature_names: tuple[str, ...] = FEATURE_KEYS
    columns: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7)
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float).reshape(-1, len(self.feature_names))
        y = np.asarray(self.y, dtype=np.int8).reshape(-1)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "sex", tuple(self.sex))
        if not (len(X) == len(y) == len(self.sex)):
            raise ValueError("X, y and sex must have the same number of rows")
        if len(self.columns) != len(self.feature_names):
            raise ValueError("columns and feature_names disagree")
        if len(y) and not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")

    def __len__(self) -> int:
        return len(self.y)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def n1(self) -> int:
        return int(self.y.sum())

    @property
    def n2(self) -> int:
        return self.n - self.n1

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def group1(self) -> np.ndarray:
        """Row indices with CHD (positive group)."""
        return np.flatnonzero(self.y == 1)

    @property
    def group2(self) -> np.ndarray:
        return np.flatnonzero(self.y == 0)

    @property
    def records(self) -> list[PatientRecord]:
        if self.columns != (1, 2, 3, 4, 5, 6, 7):
            raise ValueError("records are only available on the unprojected dataset")
        return [
            PatientRecord(*map(float, row), chd=int(label), sex=s)
            for row, label, s in zip(self.X, self.y, self.sex)
        ]

    def subset(self, rows: Sequence[int] | np.ndarray) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(
            self.X[rows],
            self.y[rows],
            tuple(self.sex[i] for i in rows),
            self.feature_names,
            self.columns,
            self.source,
        )

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X).tobytes())
        h.update(np.ascontiguousarray(self.y).tobytes())
        h.update(",".join(s or "" for s in self.sex).encode())
        h.update(repr(self.columns).encode())
        return h.hexdigest()

    def summary(self) -> dict:
        out = {"N": self.n, "N1": self.n1, "N2": self.n2}
        out["prevalence"] = prevalence(self) if self.n else None
        return out


def _parse_float(cell: str, column: str, lineno: int) -> float | None:
    cell = cell.strip()
    if cell in MISSING_TOKENS:
        return None
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"line {lineno}: non-numeric value {cell!r} in column {column!r}") from None
    return value if math.isfinite(value) else None


def _parse_sex(cell: str | None) -> str | None:
    if cell is None:
        return None
    cell = cell.strip()
    if cell in MISSING_TOKENS:
        return None
    lowered = cell.lower()
    if lowered in ("1", "1.0", "m", "male"):
        return "male"
    if lowered in ("0", "0.0", "f", "female"):
        return "female"
    return None


def ingest_csv(path: str | os.PathLike, column_map: Mapping[str, str] | None = None) -> Dataset:
    """Read a CSV and keep rows with all seven features and the label present.

    ``column_map`` maps the internal keys (``FEATURE_KEYS`` plus ``"chd"`` and
    ``"sex"``) to header names; missing keys fall back to the Kaggle schema.
    The sex column is optional.
    """
    cmap = dict(KAGGLE_COLUMNS)
    if column_map:
        unknown = set(column_map) - set(cmap)
        if unknown:
            raise DataError(f"unknown column map keys: {sorted(unknown)}")
        cmap.update(column_map)

    path = os.fspath(path)
    if not os.path.isfile(path):
        raise DataError(f"data file not found: {path}")

    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file (no header row)") from None
        index = {name: i for i, name in enumerate(header)}
        required = [*FEATURE_KEYS, "chd"]
        missing = [cmap[k] for k in required if cmap[k] not in index]
        if missing:
            raise DataError(f"{path}: missing column(s) {missing}")
        feat_idx = [index[cmap[k]] for k in FEATURE_KEYS]
        label_idx = index[cmap["chd"]]
        sex_idx = index.get(cmap["sex"])

        rows, labels, sexes = [], [], []
        for lineno, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) < len(header):
                cells = cells + [""] * (len(header) - len(cells))
            values = [_parse_float(cells[i], header[i], lineno) for i in feat_idx]
            label = _parse_float(cells[label_idx], header[label_idx], lineno)
            if label is None or any(v is None for v in values):
                continue
            if label not in (0.0, 1.0):
                raise DataError(f"line {lineno}: label must be 0 or 1, got {cells[label_idx]!r}")
            rows.append(values)
            labels.append(int(label))
            sexes.append(_parse_sex(cells[sex_idx]) if sex_idx is not None else None)

    X = np.array(rows, dtype=float).reshape(-1, len(FEATURE_KEYS))
    return Dataset(X, np.array(labels, dtype=np.int8), tuple(sexes), source=path)


def prevalence(d: Dataset) -> float:
    """Proportion of CHD cases, N1/N."""
    if d.n == 0:
        raise ValueError("prevalence of an empty dataset is undefined")
    return d.n1 / d.n


def filter_by_sex(d: Dataset, sex: str) -> Dataset:
    if sex not in SEXES:
        raise ValueError(f"sex must be one of {SEXES}, got {sex!r}")
    rows = [i for i, s in enumerate(d.sex) if s == sex]
    return d.subset(rows)


def select(d: Dataset, sex: str | None) -> Dataset:
    """Dataset selector used by the CLI and harness: None/'all', 'male', 'female'."""
    if sex in (None, "all"):
        return d
    return filter_by_sex(d, sex)


def project(d: Dataset, vars: Iterable[int]) -> Dataset:
    """Restrict to the given 1-based variable indices, in ascending order."""
    chosen = sorted(set(int(v) for v in vars))
    if not chosen:
        raise ValueError("variable subset must be nonempty")
    pos = {c: i for i, c in enumerate(d.columns)}
    bad = [v for v in chosen if v not in pos]
    if bad:
        raise ValueError(f"variable index out of range: {bad} (available {list(d.columns)})")
    idx = [pos[v] for v in chosen]
    return Dataset(
        d.X[:, idx],
        d.y,
        d.sex,
        tuple(d.feature_names[i] for i in idx),
        tuple(chosen),
        d.source,
    )
