"""Format-preserving anonymization of sample rows, with a reverse map for SQL literals.

Per-class strategy:
  nominal    -- distinct substitute drawn from the column's entity gazetteer,
                falling back to a synthesized token with the same shape
  ordinal    -- strictly order-preserving injection into the column's level pool
  discrete   -- rank-preserving resampling onto distinct random integers in
                [min, max + (max - min)]
  continuous -- fresh uniform draws within [min, max], per cell (no bijection)
"""

from __future__ import annotations

import json
import random
import re
import string
from dataclasses import dataclass, field

from . import assets
from .errors import AnonymizeError
from .ingest import Column, Dataset


def _col_rng(seed: int, column: str, extra: str = "") -> random.Random:
    # string seeding is stable across platforms and processes
    return random.Random(f"{seed}:{column}:{extra}")


@dataclass(frozen=True)
class ColumnMap:
    data_class: str
    forward: dict  # original value -> anonymized value (empty for continuous)
    reverse: dict  # anonymized value -> original value
    value_range: tuple | None = None  # (min, max) for continuous columns


@dataclass(frozen=True)
class AnonymizationMap:
    seed: int
    per_column: dict  # column name -> ColumnMap

    def forward_cell(self, column: str, value, row_index: int):
        if value is None:
            return None
        cmap = self.per_column[column]
        if cmap.data_class == "continuous":
            lo, hi = cmap.value_range
            if lo == hi:
                return lo
            return _col_rng(self.seed, column, str(row_index)).uniform(lo, hi)
        return cmap.forward[value]

    def to_json(self) -> str:
        doc = {"seed": self.seed, "columns": {}}
        for name, cmap in self.per_column.items():
            doc["columns"][name] = {
                "data_class": cmap.data_class,
                "pairs": [[k, v] for k, v in cmap.forward.items()],
                "range": list(cmap.value_range) if cmap.value_range else None,
            }
        return json.dumps(doc, indent=2, default=str)


def _synth_token(rng: random.Random, original: str, taken: set) -> str:
    """Random token with the same length and per-character class as the original."""
    for _ in range(1000):
        out = []
        for ch in original:
            if ch.isdigit():
                out.append(rng.choice(string.digits))
            elif ch.isalpha() and ch.isupper():
                out.append(rng.choice(string.ascii_uppercase))
            elif ch.isalpha():
                out.append(rng.choice(string.ascii_lowercase))
            else:
                out.append(ch)
        token = "".join(out)
        if token != original and token not in taken:
            return token
    raise AnonymizeError(f"could not synthesize a fresh token for {original!r}")


def _map_nominal(col: Column, rng: random.Random) -> ColumnMap:
    observed = sorted(set(col.non_null()))
    pool = []
    if col.entity_type in assets.GAZETTEER_TYPES:
        pool = [v for v in assets.gazetteer(col.entity_type) if v not in set(observed)]
        rng.shuffle(pool)
    forward = {}
    taken = set(observed)
    for value in observed:
        if pool:
            sub = pool.pop()
        else:
            sub = _synth_token(rng, value, taken)
        forward[value] = sub
        taken.add(sub)
    return ColumnMap("nominal", forward, {v: k for k, v in forward.items()})


def _map_ordinal(col: Column, rng: random.Random) -> ColumnMap:
    pool = list(col.ordinal_pool)
    rank = {v: i for i, v in enumerate(pool)}
    observed = sorted(set(col.non_null()), key=lambda v: rank[v])
    if len(observed) > len(pool):
        raise AnonymizeError(
            f"column {col.name!r}: {len(observed)} observed levels exceed pool size {len(pool)}"
        )
    picks = sorted(rng.sample(range(len(pool)), len(observed)))
    forward = {v: pool[i] for v, i in zip(observed, picks)}
    return ColumnMap("ordinal", forward, {v: k for k, v in forward.items()})


def _map_discrete(col: Column, rng: random.Random) -> ColumnMap:
    observed = sorted(set(col.non_null()))
    lo, hi = observed[0], observed[-1]
    span = hi - lo
    targets = sorted(rng.sample(range(lo, hi + span + 1), len(observed)))
    forward = dict(zip(observed, targets))
    return ColumnMap("discrete", forward, {v: k for k, v in forward.items()})


def build_map(ds: Dataset, seed: int) -> AnonymizationMap:
    """Build the seeded, per-column substitution map for a classified dataset."""
    per_column = {}
    for col in ds.columns:
        if col.data_class is None:
            raise AnonymizeError(f"column {col.name!r} is not classified")
        rng = _col_rng(seed, col.name)
        if col.data_class == "nominal":
            per_column[col.name] = _map_nominal(col, rng)
        elif col.data_class == "ordinal":
            per_column[col.name] = _map_ordinal(col, rng)
        elif col.data_class == "discrete":
            per_column[col.name] = _map_discrete(col, rng)
        else:
            values = col.non_null()
            vrange = (min(values), max(values)) if values else (0.0, 0.0)
            per_column[col.name] = ColumnMap("continuous", {}, {}, value_range=vrange)
    return AnonymizationMap(seed=seed, per_column=per_column)


def anonymize_rows(ds: Dataset, amap: AnonymizationMap, row_indices: list[int]) -> list[tuple]:
    """Substitute every cell of the selected rows; nulls pass through."""
    for idx in row_indices:
        if not (0 <= idx < ds.row_count):
            raise AnonymizeError(f"row index {idx} out of range 0..{ds.row_count - 1}")
    out = []
    for idx in row_indices:
        row = tuple(
            amap.forward_cell(col.name, col.cells[idx], idx) for col in ds.columns
        )
        out.append(row)
    return out


_STRING_LIT_RE = re.compile(r"'(?:[^']|'')*'")
_NUMBER_LIT_RE = re.compile(r"(?<![\w.])-?\d+(?:\.\d+)?(?![\w.])")
_CMP_CONTEXT_RE = re.compile(r'"([^"]+)"\s*(?:==|=|<>|!=|<=|>=|<|>)\s*$')


def deanonymize_literals(sql_text: str, amap: AnonymizationMap) -> str:
    """Rewrite quoted string and numeric literals that match anonymized values
    back to their originals; everything else is untouched."""
    text_reverse = {}
    num_reverse = {}
    for cmap in amap.per_column.values():
        if cmap.data_class in ("nominal", "ordinal"):
            for anon, orig in cmap.reverse.items():
                text_reverse.setdefault(anon, orig)
        elif cmap.data_class == "discrete":
            for anon, orig in cmap.reverse.items():
                num_reverse.setdefault(anon, orig)

    def fix_string(m: re.Match) -> str:
        inner = m.group(0)[1:-1].replace("''", "'")
        if inner in text_reverse:
            return "'" + str(text_reverse[inner]).replace("'", "''") + "'"
        return m.group(0)

    # split on string literals so numeric rewriting never touches quoted text
    parts = []
    last = 0
    for m in _STRING_LIT_RE.finditer(sql_text):
        parts.append(("sql", sql_text[last:m.start()]))
        parts.append(("lit", m))
        last = m.end()
    parts.append(("sql", sql_text[last:]))

    def fix_number(m: re.Match) -> str:
        token = m.group(0)
        if "." in token:
            return token
        value = int(token)
        # a "col" op N comparison names the column, which disambiguates
        # values that several discrete maps happen to share
        ctx = _CMP_CONTEXT_RE.search(m.string[:m.start()])
        if ctx:
            cmap = amap.per_column.get(ctx.group(1))
            if cmap is not None and cmap.data_class == "discrete":
                return str(cmap.reverse.get(value, value))
        if value in num_reverse:
            return str(num_reverse[value])
        return token

    out = []
    for kind, part in parts:
        if kind == "lit":
            out.append(fix_string(part))
        else:
            out.append(_NUMBER_LIT_RE.sub(fix_number, part))
    return "".join(out)
