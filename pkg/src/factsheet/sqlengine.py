"""Single-table SQL subset: parser, evaluator, and result description.

Supported: SELECT projections (columns, COUNT/SUM/AVG/MIN/MAX, + - * /),
WHERE (comparisons, AND/OR/NOT, IN, BETWEEN, LIKE), GROUP BY, HAVING,
ORDER BY (multi-key ASC/DESC, ordinals, aliases), LIMIT.

Error messages carry stable `parse:` / `exec:` prefixes so the repair loop
and tests can match them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Optional

from .errors import FactsheetError
from .ingest import Dataset


class SqlError(FactsheetError):
    def __init__(self, kind: str, message: str, offset: Optional[int] = None):
        prefix = "parse" if kind in ("syntax", "unknown-column", "unknown-table", "unsupported") else "exec"
        full = f"{prefix}: {message}"
        if offset is not None:
            full += f" (at offset {offset})"
        super().__init__(full)
        self.kind = kind
        self.offset = offset


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class ColumnRef:
    name: str


@dataclass(frozen=True)
class Literal:
    value: Any  # int, float, str or None


@dataclass(frozen=True)
class Unary:
    op: str  # '-', 'NOT'
    operand: Any


@dataclass(frozen=True)
class Binary:
    op: str  # arithmetic, comparison, AND, OR
    left: Any
    right: Any


@dataclass(frozen=True)
class InList:
    expr: Any
    items: tuple
    negated: bool = False


@dataclass(frozen=True)
class Between:
    expr: Any
    low: Any
    high: Any
    negated: bool = False


@dataclass(frozen=True)
class Like:
    expr: Any
    pattern: str
    negated: bool = False


@dataclass(frozen=True)
class Aggregate:
    func: str  # COUNT, SUM, AVG, MIN, MAX
    arg: Any  # expression, or None for COUNT(*)


@dataclass(frozen=True)
class SelectItem:
    expr: Any
    alias: Optional[str] = None


@dataclass(frozen=True)
class OrderKey:
    expr: Any  # expression or int ordinal (1-based)
    descending: bool = False


@dataclass(frozen=True)
class SqlQuery:
    table: str
    items: tuple  # SelectItem, or the string '*'
    where: Any = None
    group_by: tuple = ()
    having: Any = None
    order_by: tuple = ()
    limit: Optional[int] = None
    distinct: bool = False


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<string>'(?:[^']|'')*')
  | (?P<qident>"(?:[^"]|"")*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_$]*)
  | (?P<op><>|!=|<=|>=|=|<|>|\+|-|\*|/|\(|\)|,|;)
    """,
    re.VERBOSE,
)

KEYWORDS = {
    "SELECT", "FROM", "WHERE", "GROUP", "BY", "HAVING", "ORDER", "LIMIT",
    "AND", "OR", "NOT", "IN", "BETWEEN", "LIKE", "AS", "ASC", "DESC",
    "COUNT", "SUM", "AVG", "MIN", "MAX", "NULL", "DISTINCT",
}

UNSUPPORTED = {
    "JOIN", "INNER", "LEFT", "RIGHT", "OUTER", "CROSS", "UNION", "INTERSECT",
    "EXCEPT", "INSERT", "UPDATE", "DELETE", "CREATE", "DROP", "ALTER",
    "WITH", "OVER", "CASE",
}


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER, STRING, IDENT, KEYWORD, OP, EOF
    value: Any
    offset: int


def _tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise SqlError("syntax", f"unexpected character {text[pos]!r}", offset=pos)
        if m.lastgroup == "ws":
            pos = m.end()
            continue
        raw = m.group(0)
        if m.lastgroup == "number":
            value = float(raw) if ("." in raw or "e" in raw or "E" in raw) else int(raw)
            tokens.append(Token("NUMBER", value, pos))
        elif m.lastgroup == "string":
            tokens.append(Token("STRING", raw[1:-1].replace("''", "'"), pos))
        elif m.lastgroup == "qident":
            tokens.append(Token("IDENT", raw[1:-1].replace('""', '"'), pos))
        elif m.lastgroup == "ident":
            upper = raw.upper()
            if upper in KEYWORDS or upper in UNSUPPORTED:
                tokens.append(Token("KEYWORD", upper, pos))
            else:
                tokens.append(Token("IDENT", raw, pos))
        else:
            tokens.append(Token("OP", raw, pos))
        pos = m.end()
    tokens.append(Token("EOF", None, len(text)))
    return tokens


# ---------------------------------------------------------------------------
# Parser

class _Parser:
    def __init__(self, tokens: list[Token], schema_cols: list[str], table: str):
        self.tokens = tokens
        self.i = 0
        self.schema_cols = schema_cols
        self.by_lower = {c.lower(): c for c in schema_cols}
        self.table = table
        self.aliases: set[str] = set()

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, expected: Optional[str] = None):
        tok = self.peek()
        hint = f"; expected {expected}" if expected else ""
        raise SqlError("syntax", f"{message}{hint}", offset=tok.offset)

    def expect_kw(self, word: str) -> Token:
        tok = self.peek()
        if tok.kind != "KEYWORD" or tok.value != word:
            self.error(f"got {tok.value!r}", expected=word)
        return self.next()

    def at_kw(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "KEYWORD" and tok.value in words

    def accept_kw(self, *words: str) -> Optional[str]:
        if self.at_kw(*words):
            return self.next().value
        return None

    def accept_op(self, *ops: str) -> Optional[str]:
        tok = self.peek()
        if tok.kind == "OP" and tok.value in ops:
            self.next()
            return tok.value
        return None

    def expect_op(self, op: str):
        tok = self.peek()
        if tok.kind != "OP" or tok.value != op:
            self.error(f"got {tok.value!r}", expected=repr(op))
        self.next()

    def check_unsupported(self):
        tok = self.peek()
        if tok.kind == "KEYWORD" and tok.value in UNSUPPORTED:
            raise SqlError(
                "unsupported",
                f"{tok.value} is not supported; only single-table SELECT queries "
                "with WHERE/GROUP BY/HAVING/ORDER BY/LIMIT are allowed",
                offset=tok.offset,
            )

    def resolve_column(self, name: str, offset: int) -> str:
        if name in self.schema_cols:
            return name
        if name.lower() in self.by_lower:
            return self.by_lower[name.lower()]
        if name in self.aliases:
            return name
        raise SqlError(
            "unknown-column",
            f"unknown column {name!r}; table {self.table!r} has columns "
            + ", ".join(self.schema_cols),
            offset=offset,
        )

    # expression grammar -----------------------------------------------------

    def parse_expr(self):
        return self.parse_or()

    def parse_or(self):
        left = self.parse_and()
        while self.accept_kw("OR"):
            left = Binary("OR", left, self.parse_and())
        return left

    def parse_and(self):
        left = self.parse_not()
        while self.accept_kw("AND"):
            left = Binary("AND", left, self.parse_not())
        return left

    def parse_not(self):
        if self.accept_kw("NOT"):
            return Unary("NOT", self.parse_not())
        return self.parse_predicate()

    def parse_predicate(self):
        left = self.parse_additive()
        op = self.accept_op("=", "!=", "<>", "<", "<=", ">", ">=")
        if op:
            if op == "<>":
                op = "!="
            return Binary(op, left, self.parse_additive())
        negated = bool(self.accept_kw("NOT"))
        if self.accept_kw("IN"):
            self.expect_op("(")
            items = [self.parse_additive()]
            while self.accept_op(","):
                items.append(self.parse_additive())
            self.expect_op(")")
            return InList(left, tuple(items), negated)
        if self.accept_kw("BETWEEN"):
            low = self.parse_additive()
            self.expect_kw("AND")
            high = self.parse_additive()
            return Between(left, low, high, negated)
        if self.accept_kw("LIKE"):
            tok = self.peek()
            if tok.kind != "STRING":
                self.error("LIKE pattern must be a string literal", expected="string")
            self.next()
            return Like(left, tok.value, negated)
        if negated:
            self.error("dangling NOT", expected="IN, BETWEEN or LIKE")
        return left

    def parse_additive(self):
        left = self.parse_multiplicative()
        while True:
            op = self.accept_op("+", "-")
            if not op:
                return left
            left = Binary(op, left, self.parse_multiplicative())

    def parse_multiplicative(self):
        left = self.parse_unary()
        while True:
            op = self.accept_op("*", "/")
            if not op:
                return left
            left = Binary(op, left, self.parse_unary())

    def parse_unary(self):
        if self.accept_op("-"):
            return Unary("-", self.parse_unary())
        return self.parse_primary()

    def parse_primary(self):
        self.check_unsupported()
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.next()
            return Literal(tok.value)
        if tok.kind == "STRING":
            self.next()
            return Literal(tok.value)
        if tok.kind == "KEYWORD" and tok.value == "NULL":
            self.next()
            return Literal(None)
        if tok.kind == "KEYWORD" and tok.value in ("COUNT", "SUM", "AVG", "MIN", "MAX"):
            func = self.next().value
            self.expect_op("(")
            if func == "COUNT" and self.accept_op("*"):
                self.expect_op(")")
                return Aggregate("COUNT", None)
            if self.accept_kw("DISTINCT"):
                self.error("DISTINCT aggregates are not supported")
            arg = self.parse_expr()
            self.expect_op(")")
            return Aggregate(func, arg)
        if tok.kind == "IDENT":
            self.next()
            return ColumnRef(self.resolve_column(tok.value, tok.offset))
        if self.accept_op("("):
            inner = self.parse_expr()
            self.expect_op(")")
            return inner
        self.error(f"unexpected token {tok.value!r}", expected="expression")

    # statement --------------------------------------------------------------

    def parse_query(self) -> SqlQuery:
        self.check_unsupported()
        self.expect_kw("SELECT")
        distinct = bool(self.accept_kw("DISTINCT"))
        items = []
        star = False
        if self.accept_op("*"):
            star = True
        else:
            while True:
                self.check_unsupported()
                expr = self.parse_expr()
                alias = None
                if self.accept_kw("AS"):
                    tok = self.peek()
                    if tok.kind != "IDENT":
                        self.error("alias must be an identifier", expected="identifier")
                    alias = self.next().value
                elif self.peek().kind == "IDENT":
                    alias = self.next().value
                if alias:
                    self.aliases.add(alias)
                items.append(SelectItem(expr, alias))
                if not self.accept_op(","):
                    break
        self.expect_kw("FROM")
        self.check_unsupported()
        tok = self.peek()
        if tok.kind != "IDENT":
            self.error("expected table name", expected="identifier")
        table = self.next().value
        if table != self.table and table.lower() != self.table.lower():
            raise SqlError(
                "unknown-table",
                f"unknown table {table!r}; the only table is {self.table!r}",
                offset=tok.offset,
            )
        self.check_unsupported()

        where = None
        if self.accept_kw("WHERE"):
            where = self.parse_expr()
        group_by = ()
        if self.at_kw("GROUP"):
            self.next()
            self.expect_kw("BY")
            keys = [self.parse_expr()]
            while self.accept_op(","):
                keys.append(self.parse_expr())
            group_by = tuple(keys)
        having = None
        if self.accept_kw("HAVING"):
            having = self.parse_expr()
        order_by = ()
        if self.at_kw("ORDER"):
            self.next()
            self.expect_kw("BY")
            keys = []
            while True:
                tok = self.peek()
                if tok.kind == "NUMBER" and isinstance(tok.value, int):
                    self.next()
                    expr = tok.value  # 1-based select ordinal
                else:
                    expr = self.parse_expr()
                desc = False
                if self.accept_kw("DESC"):
                    desc = True
                else:
                    self.accept_kw("ASC")
                keys.append(OrderKey(expr, desc))
                if not self.accept_op(","):
                    break
            order_by = tuple(keys)
        limit = None
        if self.accept_kw("LIMIT"):
            tok = self.peek()
            if tok.kind != "NUMBER" or not isinstance(tok.value, int):
                self.error("LIMIT requires an integer", expected="integer")
            limit = self.next().value
        self.accept_op(";")
        self.check_unsupported()
        if self.peek().kind != "EOF":
            self.error(f"trailing input {self.peek().value!r}", expected="end of query")
        return SqlQuery(
            table=self.table,
            items="*" if star else tuple(items),
            where=where,
            group_by=group_by,
            having=having,
            order_by=order_by,
            limit=limit,
            distinct=distinct,
        )


def parse(sql_text: str, schema_cols: list[str], table: str) -> SqlQuery:
    """Parse a query against a single-table schema; raises ``SqlError``."""
    tokens = _tokenize(sql_text)
    return _Parser(tokens, list(schema_cols), table).parse_query()


# ---------------------------------------------------------------------------
# Printer (round-trip support)

def _print_expr(e) -> str:
    if isinstance(e, Literal):
        if e.value is None:
            return "NULL"
        if isinstance(e.value, str):
            return "'" + e.value.replace("'", "''") + "'"
        return repr(e.value)
    if isinstance(e, ColumnRef):
        return '"' + e.name.replace('"', '""') + '"'
    if isinstance(e, Unary):
        if e.op == "NOT":
            return f"NOT ({_print_expr(e.operand)})"
        return f"-({_print_expr(e.operand)})"
    if isinstance(e, Binary):
        return f"({_print_expr(e.left)} {e.op} {_print_expr(e.right)})"
    if isinstance(e, InList):
        inner = ", ".join(_print_expr(x) for x in e.items)
        neg = "NOT " if e.negated else ""
        return f"({_print_expr(e.expr)} {neg}IN ({inner}))"
    if isinstance(e, Between):
        neg = "NOT " if e.negated else ""
        return f"({_print_expr(e.expr)} {neg}BETWEEN {_print_expr(e.low)} AND {_print_expr(e.high)})"
    if isinstance(e, Like):
        neg = "NOT " if e.negated else ""
        return f"({_print_expr(e.expr)} {neg}LIKE '" + e.pattern.replace("'", "''") + "')"
    if isinstance(e, Aggregate):
        arg = "*" if e.arg is None else _print_expr(e.arg)
        return f"{e.func}({arg})"
    raise TypeError(f"unknown expression node {e!r}")


def to_sql(q: SqlQuery) -> str:
    if q.items == "*":
        sel = "*"
    else:
        parts = []
        for item in q.items:
            s = _print_expr(item.expr)
            if item.alias:
                s += f' AS "{item.alias}"'
            parts.append(s)
        sel = ", ".join(parts)
    out = f'SELECT {"DISTINCT " if q.distinct else ""}{sel} FROM "{q.table}"'
    if q.where is not None:
        out += f" WHERE {_print_expr(q.where)}"
    if q.group_by:
        out += " GROUP BY " + ", ".join(_print_expr(e) for e in q.group_by)
    if q.having is not None:
        out += f" HAVING {_print_expr(q.having)}"
    if q.order_by:
        keys = []
        for k in q.order_by:
            s = str(k.expr) if isinstance(k.expr, int) else _print_expr(k.expr)
            keys.append(s + (" DESC" if k.descending else ""))
        out += " ORDER BY " + ", ".join(keys)
    if q.limit is not None:
        out += f" LIMIT {q.limit}"
    return out


# ---------------------------------------------------------------------------
# Evaluator

@dataclass(frozen=True)
class ResultTable:
    columns: tuple  # names
    types: tuple  # INTEGER / REAL / TEXT / NULL per column
    rows: tuple  # tuples of values

    @property
    def row_count(self) -> int:
        return len(self.rows)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_comparable(a, b):
    if a is None or b is None:
        return
    if _is_number(a) != _is_number(b):
        raise SqlError(
            "type-mismatch",
            f"cannot compare {type(a).__name__} value {a!r} with {type(b).__name__} value {b!r}",
        )


def _like_match(value: str, pattern: str) -> bool:
    regex = "".join(
        ".*" if ch == "%" else "." if ch == "_" else re.escape(ch) for ch in pattern
    )
    return re.fullmatch(regex, value, flags=re.DOTALL) is not None


class _Evaluator:
    def __init__(self, ds: Dataset):
        self.ds = ds
        self.col_index = {c.name: i for i, c in enumerate(ds.columns)}

    def scalar(self, e, row):
        """Evaluate a non-aggregate expression on one row."""
        if isinstance(e, Literal):
            return e.value
        if isinstance(e, ColumnRef):
            if e.name not in self.col_index:
                raise SqlError("syntax", f"alias {e.name!r} cannot be used here")
            return row[self.col_index[e.name]]
        if isinstance(e, Unary):
            v = self.scalar(e.operand, row)
            if v is None:
                return None
            if e.op == "-":
                if not _is_number(v):
                    raise SqlError("type-mismatch", f"cannot negate {v!r}")
                return -v
            return not self.truthy_value(v)
        if isinstance(e, Binary):
            return self.binary(e, lambda x: self.scalar(x, row))
        if isinstance(e, InList):
            return self.in_list(e, lambda x: self.scalar(x, row))
        if isinstance(e, Between):
            return self.between(e, lambda x: self.scalar(x, row))
        if isinstance(e, Like):
            return self.like(e, lambda x: self.scalar(x, row))
        if isinstance(e, Aggregate):
            raise SqlError("aggregate-misuse", f"{e.func} is not allowed here")
        raise TypeError(f"unknown node {e!r}")

    def truthy_value(self, v) -> bool:
        if v is None:
            return False
        if isinstance(v, str):
            raise SqlError("type-mismatch", f"string {v!r} used as a boolean condition")
        return bool(v)

    def binary(self, e: Binary, ev):
        if e.op == "AND":
            return self.truthy_value(ev(e.left)) and self.truthy_value(ev(e.right))
        if e.op == "OR":
            return self.truthy_value(ev(e.left)) or self.truthy_value(ev(e.right))
        a = ev(e.left)
        b = ev(e.right)
        if e.op in ("=", "!=", "<", "<=", ">", ">="):
            if a is None or b is None:
                return None
            _check_comparable(a, b)
            return {
                "=": a == b, "!=": a != b, "<": a < b,
                "<=": a <= b, ">": a > b, ">=": a >= b,
            }[e.op]
        # arithmetic
        if a is None or b is None:
            return None
        if not (_is_number(a) and _is_number(b)):
            raise SqlError("type-mismatch", f"arithmetic on non-numeric values {a!r}, {b!r}")
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0:
            return None  # division by zero yields NULL
        if isinstance(a, int) and isinstance(b, int):
            # SQL integer division truncates toward zero
            q = abs(a) // abs(b)
            return q if (a >= 0) == (b >= 0) else -q
        return a / b

    def in_list(self, e: InList, ev):
        v = ev(e.expr)
        if v is None:
            return None
        hit = False
        saw_null = False
        for item in e.items:
            w = ev(item)
            if w is None:
                saw_null = True
                continue
            _check_comparable(v, w)
            if v == w:
                hit = True
        if hit:
            return not e.negated
        if saw_null:
            return None
        return e.negated

    def between(self, e: Between, ev):
        v, lo, hi = ev(e.expr), ev(e.low), ev(e.high)
        if v is None or lo is None or hi is None:
            return None
        _check_comparable(v, lo)
        _check_comparable(v, hi)
        result = lo <= v <= hi
        return result != e.negated

    def like(self, e: Like, ev):
        v = ev(e.expr)
        if v is None:
            return None
        if not isinstance(v, str):
            raise SqlError("type-mismatch", f"LIKE requires a string value, got {v!r}")
        result = _like_match(v, e.pattern)
        return result != e.negated

    def aggregate(self, agg: Aggregate, rows):
        if agg.func == "COUNT" and agg.arg is None:
            return len(rows)
        values = [self.scalar(agg.arg, r) for r in rows]
        values = [v for v in values if v is not None]
        if agg.func == "COUNT":
            return len(values)
        if not values:
            return None
        if agg.func in ("SUM", "AVG"):
            if not all(_is_number(v) for v in values):
                raise SqlError("type-mismatch", f"{agg.func} over non-numeric values")
            total = sum(values)
            if agg.func == "SUM":
                return total
            return total / len(values)
        # MIN / MAX: values must be mutually comparable
        for v in values[1:]:
            _check_comparable(values[0], v)
        return min(values) if agg.func == "MIN" else max(values)

    def grouped(self, e, rows):
        """Evaluate an expression in aggregate context over a group of rows."""
        if isinstance(e, Aggregate):
            return self.aggregate(e, rows)
        if isinstance(e, Literal):
            return e.value
        if isinstance(e, ColumnRef):
            raise SqlError(
                "aggregate-misuse",
                f"column {e.name!r} must appear in GROUP BY or inside an aggregate",
            )
        if isinstance(e, Unary):
            v = self.grouped(e.operand, rows)
            if e.op == "-":
                return None if v is None else -v
            return not self.truthy_value(v)
        if isinstance(e, Binary):
            return self.binary(e, lambda x: self.grouped(x, rows))
        if isinstance(e, InList):
            return self.in_list(e, lambda x: self.grouped(x, rows))
        if isinstance(e, Between):
            return self.between(e, lambda x: self.grouped(x, rows))
        if isinstance(e, Like):
            return self.like(e, lambda x: self.grouped(x, rows))
        raise TypeError(f"unknown node {e!r}")


def _contains_aggregate(e) -> bool:
    if isinstance(e, Aggregate):
        return True
    if isinstance(e, Unary):
        return _contains_aggregate(e.operand)
    if isinstance(e, Binary):
        return _contains_aggregate(e.left) or _contains_aggregate(e.right)
    if isinstance(e, InList):
        return _contains_aggregate(e.expr) or any(_contains_aggregate(i) for i in e.items)
    if isinstance(e, Between):
        return any(_contains_aggregate(x) for x in (e.expr, e.low, e.high))
    if isinstance(e, Like):
        return _contains_aggregate(e.expr)
    return False


def _substitute(e, mapping):
    """Replace sub-expressions found in `mapping` (keyed by node) with literals."""
    if e in mapping:
        return Literal(mapping[e])
    if isinstance(e, Unary):
        return Unary(e.op, _substitute(e.operand, mapping))
    if isinstance(e, Binary):
        return Binary(e.op, _substitute(e.left, mapping), _substitute(e.right, mapping))
    if isinstance(e, InList):
        return InList(_substitute(e.expr, mapping), tuple(_substitute(i, mapping) for i in e.items), e.negated)
    if isinstance(e, Between):
        return Between(_substitute(e.expr, mapping), _substitute(e.low, mapping), _substitute(e.high, mapping), e.negated)
    if isinstance(e, Like):
        return Like(_substitute(e.expr, mapping), e.pattern, e.negated)
    return e


def _replace_aliases(e, alias_map: dict, real_cols: set):
    if isinstance(e, ColumnRef) and e.name in alias_map and e.name not in real_cols:
        return alias_map[e.name]
    if isinstance(e, Unary):
        return Unary(e.op, _replace_aliases(e.operand, alias_map, real_cols))
    if isinstance(e, Binary):
        return Binary(
            e.op,
            _replace_aliases(e.left, alias_map, real_cols),
            _replace_aliases(e.right, alias_map, real_cols),
        )
    if isinstance(e, InList):
        return InList(
            _replace_aliases(e.expr, alias_map, real_cols),
            tuple(_replace_aliases(i, alias_map, real_cols) for i in e.items),
            e.negated,
        )
    if isinstance(e, Between):
        return Between(
            _replace_aliases(e.expr, alias_map, real_cols),
            _replace_aliases(e.low, alias_map, real_cols),
            _replace_aliases(e.high, alias_map, real_cols),
            e.negated,
        )
    if isinstance(e, Like):
        return Like(_replace_aliases(e.expr, alias_map, real_cols), e.pattern, e.negated)
    if isinstance(e, Aggregate) and e.arg is not None:
        return Aggregate(e.func, _replace_aliases(e.arg, alias_map, real_cols))
    return e


def _default_name(e, position: int) -> str:
    if isinstance(e, ColumnRef):
        return e.name
    if isinstance(e, Aggregate):
        arg = "*" if e.arg is None else _print_expr(e.arg)
        return f"{e.func}({arg})"
    return f"expr_{position}"


def _infer_type(values) -> str:
    kinds = set()
    for v in values:
        if v is None:
            continue
        if isinstance(v, bool):
            kinds.add("INTEGER")
        elif isinstance(v, int):
            kinds.add("INTEGER")
        elif isinstance(v, float):
            kinds.add("REAL")
        else:
            kinds.add("TEXT")
    if not kinds:
        return "NULL"
    if kinds == {"INTEGER"}:
        return "INTEGER"
    if kinds <= {"INTEGER", "REAL"}:
        return "REAL"
    if kinds == {"TEXT"}:
        return "TEXT"
    return "TEXT"


def _sort_key_tuple(value, descending: bool):
    # NULLs sort first ascending (and therefore last descending)
    if value is None:
        rank = 0
    else:
        rank = 1
    return rank, value


def execute(q: SqlQuery, ds: Dataset) -> ResultTable:
    """Run a parsed query against the dataset with standard SQL semantics."""
    ev = _Evaluator(ds)
    rows = ds.rows()

    if q.where is not None:
        if _contains_aggregate(q.where):
            raise SqlError("aggregate-misuse", "aggregates are not allowed in WHERE")
        rows = [r for r in rows if ev.truthy_value(ev.scalar(q.where, r))]

    if q.items == "*":
        items = tuple(SelectItem(ColumnRef(c.name)) for c in ds.columns)
    else:
        items = q.items

    alias_map = {item.alias: item.expr for item in items if item.alias}

    def resolve_alias(e):
        # a bare name in GROUP BY may refer to a select alias, unless it
        # shadows a real column
        if isinstance(e, ColumnRef) and e.name in alias_map and e.name not in ev.col_index:
            return alias_map[e.name]
        return e

    group_exprs = tuple(resolve_alias(g) for g in q.group_by)
    having = (
        _replace_aliases(q.having, alias_map, set(ev.col_index))
        if q.having is not None
        else None
    )

    item_names = tuple(
        item.alias or _default_name(item.expr, i + 1) for i, item in enumerate(items)
    )

    has_agg = any(_contains_aggregate(item.expr) for item in items) or (
        q.having is not None
    ) or bool(group_exprs)

    if not has_agg:
        out_rows = [tuple(ev.scalar(item.expr, r) for item in items) for r in rows]
        keyed = list(zip(out_rows, rows))
    else:
        # group rows
        if group_exprs:
            groups: dict = {}
            order: list = []
            for r in rows:
                key = tuple(ev.scalar(g, r) for g in group_exprs)
                if key not in groups:
                    groups[key] = []
                    order.append(key)
                groups[key].append(r)
            group_list = [(k, groups[k]) for k in order]
        else:
            group_list = [((), rows)]

        keyed = []
        for key, grows in group_list:
            # group-key expressions may be used bare in SELECT/HAVING/ORDER
            mapping = dict(zip(group_exprs, key))
            if having is not None:
                hv = ev.grouped(_substitute(having, mapping), grows)
                if not ev.truthy_value(hv):
                    continue
            out = tuple(
                ev.grouped(_substitute(item.expr, mapping), grows) for item in items
            )
            keyed.append((out, grows))

    # ORDER BY (stable)
    if q.order_by:
        def order_value(entry, key: OrderKey):
            out, source = entry
            expr = key.expr
            if isinstance(expr, int):
                if not (1 <= expr <= len(items)):
                    raise SqlError(
                        "syntax", f"ORDER BY ordinal {expr} out of range 1..{len(items)}"
                    )
                return out[expr - 1]
            if isinstance(expr, ColumnRef) and expr.name in item_names:
                return out[item_names.index(expr.name)]
            if isinstance(expr, ColumnRef) and expr.name in (alias_map or {}):
                expr = alias_map[expr.name]
            if has_agg:
                mapping = dict(zip(group_exprs, [ev.scalar(g, source[0]) for g in group_exprs])) if source else {}
                return ev.grouped(_substitute(expr, mapping), source)
            return ev.scalar(expr, source)

        entries = keyed
        for key in reversed(q.order_by):
            vals = [order_value(entry, key) for entry in entries]
            present = [v for v in vals if v is not None]
            for v in present[1:]:
                _check_comparable(present[0], v)
            decorated = list(zip(vals, range(len(entries)), entries))
            decorated.sort(
                key=lambda t: _sort_key_tuple(t[0], key.descending),
                reverse=key.descending,
            )
            entries = [e for _, _, e in decorated]
        keyed = entries

    if q.distinct:
        seen: set = set()
        deduped = []
        for entry in keyed:
            marker = tuple(entry[0])
            if marker not in seen:
                seen.add(marker)
                deduped.append(entry)
        keyed = deduped

    out_rows = [o for o, _ in keyed]
    if q.limit is not None:
        out_rows = out_rows[: q.limit]

    types = tuple(_infer_type([r[i] for r in out_rows]) for i in range(len(items)))
    return ResultTable(columns=item_names, types=types, rows=tuple(out_rows))


def run(sql_text: str, ds: Dataset) -> ResultTable:
    q = parse(sql_text, ds.column_names, ds.name)
    return execute(q, ds)


def describe_result(rt: ResultTable, max_rows: int = 5) -> str:
    """Compact text rendering used in repair prompts."""
    header = ", ".join(f"{n} ({t})" for n, t in zip(rt.columns, rt.types))
    lines = [f"columns: {header}", f"{rt.row_count} rows"]
    for row in rt.rows[:max_rows]:
        lines.append(" | ".join("NULL" if v is None else str(v) for v in row))
    if rt.row_count > max_rows:
        lines.append(f"... {rt.row_count - max_rows} more")
    return "\n".join(lines)
