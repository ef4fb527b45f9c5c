"""Prompt-ready dataset representation: DDL, column statistics, anonymized examples."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .anonymize import AnonymizationMap, anonymize_rows
from .errors import RepresentationError
from .ingest import ColumnProfile, Dataset, profile_column

DEFAULT_BUDGET_TOKENS = 2048

_SQL_TYPES = {
    "nominal": "TEXT",
    "ordinal": "TEXT",
    "discrete": "INTEGER",
    "continuous": "REAL",
}


@dataclass(frozen=True)
class DatasetRepresentation:
    ddl: str
    stats_block: str
    example_rows: tuple  # anonymized rows, dataset column order
    text: str  # full prompt block
    token_estimate: int
    schema: tuple  # ((name, data_class), ...)
    profiles: dict  # column name -> ColumnProfile
    dataset_name: str = ""
    row_count: int = 0


def _quote_ident(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def emit_ddl(ds: Dataset) -> str:
    cols = ", ".join(
        f"{_quote_ident(c.name)} {_SQL_TYPES[c.data_class]}" for c in ds.columns
    )
    return f"CREATE TABLE {_quote_ident(ds.name)} ({cols});"


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / 4)


def _fmt(v) -> str:
    if isinstance(v, float):
        if v == int(v) and abs(v) < 1e15:
            return str(int(v))
        return format(v, ".6g")
    return str(v)


def _stats_line(name: str, data_class: str, prof: ColumnProfile) -> str:
    if prof.is_numeric:
        stats = [
            ("min", prof.min),
            ("p25", prof.p25),
            ("median", prof.median),
            ("mean", prof.mean),
            ("p75", prof.p75),
            ("max", prof.max),
            ("nulls", prof.null_count),
        ]
        body = ", ".join(f"{k}={_fmt(v)}" for k, v in stats)
    else:
        top = "; ".join(f"{v} x{c}" for v, c in prof.top_values)
        body = f"unique={prof.unique_count}, top=[{top}], nulls={prof.null_count}"
    return f"{name} ({data_class}): {body}"


def stats_block(ds: Dataset, profiles: dict) -> str:
    return "\n".join(
        _stats_line(c.name, c.data_class, profiles[c.name]) for c in ds.columns
    )


def _csv_cell(v) -> str:
    if v is None:
        return ""
    s = _fmt(v)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def build_representation(
    ds: Dataset,
    amap: AnonymizationMap,
    budget_tokens: int = DEFAULT_BUDGET_TOKENS,
    seed: int = 0,
) -> DatasetRepresentation:
    """Assemble DDL + stats + greedily packed anonymized example rows.

    Rows are sampled uniformly without replacement under the seed and appended
    while the full text stays within the token budget.
    """
    profiles = {c.name: profile_column(c) for c in ds.columns}
    ddl = emit_ddl(ds)
    stats = stats_block(ds, profiles)
    base = ddl + "\n\n" + stats
    base_tokens = estimate_tokens(base)
    if budget_tokens < base_tokens:
        raise RepresentationError(
            f"budget {budget_tokens} tokens is below the minimum {base_tokens} "
            "needed for schema and statistics",
            min_budget=base_tokens,
        )

    rng = random.Random(f"{seed}:example-rows")
    order = list(range(ds.row_count))
    rng.shuffle(order)

    header = ",".join(_csv_cell(n) for n in ds.column_names)
    section_head = "Example rows (anonymized):\n" + header
    kept = []
    text = base
    for idx in order:
        row = anonymize_rows(ds, amap, [idx])[0]
        line = ",".join(_csv_cell(v) for v in row)
        if kept:
            candidate = text + "\n" + line
        else:
            candidate = base + "\n\n" + section_head + "\n" + line
        if estimate_tokens(candidate) > budget_tokens:
            break
        kept.append(row)
        text = candidate

    return DatasetRepresentation(
        ddl=ddl,
        stats_block=stats,
        example_rows=tuple(kept),
        text=text,
        token_estimate=estimate_tokens(text),
        schema=tuple((c.name, c.data_class) for c in ds.columns),
        profiles=profiles,
        dataset_name=ds.name,
        row_count=ds.row_count,
    )
