"""CSV loading, column data-class inference, and column statistics."""

from __future__ import annotations

import csv
import io
import math
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Optional

from . import assets
from .errors import ClassifyError, CsvError, ProfileError

DATA_CLASSES = ("nominal", "ordinal", "discrete", "continuous")

_INT_RE = re.compile(r"[+-]?\d+$")
_ISO_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}$")


@dataclass(frozen=True)
class Column:
    name: str
    cells: tuple  # str or None before typing; int/float after classification
    data_class: Optional[str] = None
    entity_type: Optional[str] = None
    ordinal_pool: Optional[tuple] = None

    def non_null(self) -> list:
        return [c for c in self.cells if c is not None]


@dataclass(frozen=True)
class Dataset:
    name: str
    columns: tuple[Column, ...]
    row_count: int

    def column(self, name: str) -> Column:
        for col in self.columns:
            if col.name == name:
                return col
        raise KeyError(name)

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def rows(self) -> list[tuple]:
        return [tuple(c.cells[i] for c in self.columns) for i in range(self.row_count)]


@dataclass(frozen=True)
class ColumnProfile:
    null_count: int
    # numeric columns
    min: Optional[float] = None
    max: Optional[float] = None
    mean: Optional[float] = None
    median: Optional[float] = None
    p25: Optional[float] = None
    p75: Optional[float] = None
    # string columns
    unique_count: Optional[int] = None
    top_values: Optional[tuple] = None  # ((value, count), ...) length <= 5

    @property
    def is_numeric(self) -> bool:
        return self.min is not None


def load_csv(data: bytes, name: str) -> Dataset:
    """Parse an RFC-4180 CSV (UTF-8, header row) into a raw string Dataset.

    Empty cells become None. Ragged rows and unbalanced quotes are parse errors.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CsvError(f"not valid UTF-8: {exc}") from exc
    if not text.strip():
        raise CsvError("empty CSV file")

    reader = csv.reader(io.StringIO(text), strict=True)
    try:
        raw_rows = list(reader)
    except csv.Error as exc:
        raise CsvError(f"malformed CSV near line {reader.line_num}: {exc}", row=reader.line_num) from exc

    header = raw_rows[0]
    if any(not h.strip() for h in header):
        raise CsvError("header contains an empty column name", row=1)
    if len(set(header)) != len(header):
        dupe = next(h for h in header if header.count(h) > 1)
        raise CsvError(f"duplicate column name: {dupe!r}", row=1)

    # blank lines produce empty records; skip them like most CSV tooling does
    body = [r for r in raw_rows[1:] if r != []]
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise CsvError(
                f"ragged row at line {i}: expected {len(header)} cells, got {len(row)}",
                row=i,
                col=len(row),
            )

    cols = []
    for j, colname in enumerate(header):
        cells = tuple((row[j] if row[j] != "" else None) for row in body)
        cols.append(Column(name=colname, cells=cells))
    return Dataset(name=name, columns=tuple(cols), row_count=len(body))


def _parse_int(s: str) -> Optional[int]:
    return int(s) if _INT_RE.match(s.strip()) else None


def _parse_float(s: str) -> Optional[float]:
    try:
        v = float(s)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _match_scale(values: set[str]) -> Optional[tuple]:
    for scale in assets.known_scales().values():
        if values <= set(scale):
            return tuple(scale)
    return None


_NAME_HINTS = {
    "country": "country",
    "nation": "country",
    "city": "city",
    "town": "city",
}


def _infer_entity_type(name: str, values: list[str]) -> str:
    if values:
        for etype in assets.GAZETTEER_TYPES:
            pool = set(assets.gazetteer(etype))
            if set(values) <= pool:
                return etype
    lowered = name.lower()
    for hint, etype in _NAME_HINTS.items():
        if hint in lowered:
            return etype
    return "generic-token"


def _classify_one(col: Column) -> Column:
    values = col.non_null()
    if not values:
        return replace(col, data_class="nominal", entity_type="generic-token")

    ints = [_parse_int(v) for v in values]
    if all(v is not None for v in ints):
        cells = tuple(_parse_int(c) if c is not None else None for c in col.cells)
        return replace(col, cells=cells, data_class="discrete")

    floats = [_parse_float(v) for v in values]
    if all(v is not None for v in floats):
        cells = tuple(_parse_float(c) if c is not None else None for c in col.cells)
        return replace(col, cells=cells, data_class="continuous")

    if all(_ISO_DATE_RE.match(v) for v in values):
        pool = tuple(sorted(set(values)))
        return replace(col, data_class="ordinal", ordinal_pool=pool)

    scale = _match_scale(set(values))
    if scale is not None:
        return replace(col, data_class="ordinal", ordinal_pool=scale)

    return replace(col, data_class="nominal", entity_type=_infer_entity_type(col.name, values))


def classify_columns(ds: Dataset, overrides: Optional[dict] = None) -> Dataset:
    """Assign every column a data class; explicit overrides win over inference.

    Discrete cells are parsed to int and continuous cells to float. Idempotent.
    """
    overrides = overrides or {}
    unknown = set(overrides) - set(ds.column_names)
    if unknown:
        raise ClassifyError(f"override names missing columns: {sorted(unknown)}")
    for name, cls in overrides.items():
        if cls not in DATA_CLASSES:
            raise ClassifyError(f"unknown data class {cls!r} for column {name!r}")

    new_cols = []
    for col in ds.columns:
        wanted = overrides.get(col.name)
        if wanted is None:
            if col.data_class is not None:
                new_cols.append(col)
                continue
            new_cols.append(_classify_one(col))
            continue
        # forced class: coerce cells accordingly
        str_cells = tuple(None if c is None else str(c) for c in col.cells)
        base = Column(name=col.name, cells=str_cells)
        if wanted == "discrete":
            parsed = [_parse_int(v) for v in base.non_null()]
            if any(p is None for p in parsed):
                raise ClassifyError(f"column {col.name!r} has non-integer cells; cannot force discrete")
            cells = tuple(_parse_int(c) if c is not None else None for c in base.cells)
            new_cols.append(replace(base, cells=cells, data_class="discrete"))
        elif wanted == "continuous":
            parsed = [_parse_float(v) for v in base.non_null()]
            if any(p is None for p in parsed):
                raise ClassifyError(f"column {col.name!r} has non-numeric cells; cannot force continuous")
            cells = tuple(_parse_float(c) if c is not None else None for c in base.cells)
            new_cols.append(replace(base, cells=cells, data_class="continuous"))
        elif wanted == "ordinal":
            pool = _match_scale(set(base.non_null())) or tuple(sorted(set(base.non_null())))
            new_cols.append(replace(base, data_class="ordinal", ordinal_pool=pool))
        else:
            etype = _infer_entity_type(base.name, base.non_null())
            new_cols.append(replace(base, data_class="nominal", entity_type=etype))
    return replace(ds, columns=tuple(new_cols))


def _quantile(sorted_vals: list[float], q: float) -> float:
    # linear interpolation between closest ranks ("type 7")
    n = len(sorted_vals)
    if n == 1:
        return float(sorted_vals[0])
    h = (n - 1) * q
    lo = math.floor(h)
    hi = math.ceil(h)
    if lo == hi:
        return float(sorted_vals[lo])
    return sorted_vals[lo] + (h - lo) * (sorted_vals[hi] - sorted_vals[lo])


def profile_column(col: Column) -> ColumnProfile:
    """Compute the per-column statistics block; nulls excluded and counted."""
    if col.data_class is None:
        raise ProfileError(f"column {col.name!r} is not classified")
    values = col.non_null()
    null_count = len(col.cells) - len(values)
    if not values:
        raise ProfileError(f"column {col.name!r} is all null; cannot profile")

    if col.data_class in ("discrete", "continuous"):
        vals = sorted(float(v) for v in values)
        return ColumnProfile(
            null_count=null_count,
            min=vals[0],
            max=vals[-1],
            mean=sum(vals) / len(vals),
            median=_quantile(vals, 0.5),
            p25=_quantile(vals, 0.25),
            p75=_quantile(vals, 0.75),
        )

    counts = Counter(values)
    top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:5]
    return ColumnProfile(
        null_count=null_count,
        unique_count=len(counts),
        top_values=tuple(top),
    )
