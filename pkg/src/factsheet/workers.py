"""The five specialized agents and the deterministic orchestration around them."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import Optional

from .agent import RunLog, Transport, invoke
from .anonymize import AnonymizationMap, deanonymize_literals
from .charts import ChartParams, validate_params
from .errors import ChartError, ExtractionError, FactsheetError, WorkerError
from .ingest import Dataset
from .profiles import load_profile
from .representation import DatasetRepresentation
from .sqlengine import ResultTable, SqlError, describe_result, run as run_sql

FACT_TYPES = (
    "value", "difference", "proportion", "trend", "categorization",
    "distribution", "rank", "aggregation", "extreme", "outlier", "association",
)

MAX_SQL_ATTEMPTS = 3
DEFAULT_CONSISTENCY_K = 3
DEFAULT_MAX_FACTS = 12
STATEMENT_WORD_LIMIT = 60
ANSWER_WORD_LIMIT = 50
MAX_CAUSAL_QAS = 2


@dataclass(frozen=True)
class FactIdea:
    id: str
    fact_type: str
    content: str
    significance: float

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "fact_type": self.fact_type,
            "content": self.content,
            "significance": self.significance,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FactIdea":
        return cls(d["id"], d["fact_type"], d["content"], d["significance"])


@dataclass(frozen=True)
class FactCard:
    idea: FactIdea
    sql: str
    table: ResultTable
    chart: ChartParams
    chart_ref: str  # block-store digest of the rendered SVG
    statement: str
    causal_qas: tuple  # ((question, answer), ...)

    def to_json_dict(self) -> dict:
        return {
            "idea": self.idea.to_json_dict(),
            "sql": self.sql,
            "table": {
                "columns": list(self.table.columns),
                "types": list(self.table.types),
                "rows": [list(r) for r in self.table.rows],
            },
            "chart": self.chart.to_json_dict(),
            "chart_ref": self.chart_ref,
            "statement": self.statement,
            "causal_qas": [list(qa) for qa in self.causal_qas],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FactCard":
        t = d["table"]
        return cls(
            idea=FactIdea.from_json_dict(d["idea"]),
            sql=d["sql"],
            table=ResultTable(
                columns=tuple(t["columns"]),
                types=tuple(t["types"]),
                rows=tuple(tuple(r) for r in t["rows"]),
            ),
            chart=ChartParams.from_json_dict(d["chart"]),
            chart_ref=d["chart_ref"],
            statement=d["statement"],
            causal_qas=tuple(tuple(qa) for qa in d["causal_qas"]),
        )


@dataclass(frozen=True)
class Section:
    topic: str
    fact_ids: tuple

    def to_json_dict(self) -> dict:
        return {"topic": self.topic, "fact_ids": list(self.fact_ids)}


@dataclass(frozen=True)
class SheetStructure:
    title: str
    intro_text: str
    sections: tuple  # Section, first is Introduction

    def to_json_dict(self) -> dict:
        return {
            "title": self.title,
            "intro_text": self.intro_text,
            "sections": [s.to_json_dict() for s in self.sections],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SheetStructure":
        return cls(
            title=d["title"],
            intro_text=d["intro_text"],
            sections=tuple(Section(s["topic"], tuple(s["fact_ids"])) for s in d["sections"]),
        )

    def all_fact_ids(self) -> list[str]:
        return [fid for s in self.sections for fid in s.fact_ids]


def validate_structure(structure: SheetStructure, fact_ids: set[str]) -> list[str]:
    problems = []
    if not structure.sections or structure.sections[0].topic != "Introduction":
        problems.append("first section must be the Introduction")
    for s in structure.sections:
        if not s.topic.strip():
            problems.append("empty section topic")
    seen = structure.all_fact_ids()
    if len(seen) != len(set(seen)):
        problems.append("a fact id appears in more than one section")
    assigned = set(structure.all_fact_ids())
    if assigned != fact_ids:
        missing = fact_ids - assigned
        extra = assigned - fact_ids
        if missing:
            problems.append(f"unassigned fact ids: {sorted(missing)}")
        if extra:
            problems.append(f"unknown fact ids: {sorted(extra)}")
    return problems


# fact idea composition ------------------------------------------------------

_WORD_RE = re.compile(r"[a-z0-9$]+")


def _signature(fact_type: str, content: str) -> str:
    words = sorted(set(_WORD_RE.findall(content.lower())))
    return fact_type + "|" + " ".join(words)


def _columns_payload(rep: DatasetRepresentation) -> list[dict]:
    return [{"name": n, "data_class": c} for n, c in rep.schema]


def compose_fact_ideas(
    rep: DatasetRepresentation,
    user_request: Optional[str],
    transport: Transport,
    k: int = DEFAULT_CONSISTENCY_K,
    n_max: int = DEFAULT_MAX_FACTS,
    run_log: Optional[RunLog] = None,
) -> list[FactIdea]:
    """Sample the composer k times and keep facts agreed by a majority."""
    profile = load_profile("fact-idea-composer")
    by_sig: dict[str, dict] = {}
    for sample in range(1, k + 1):
        payload = {
            "representation": rep.text,
            "columns": _columns_payload(rep),
            "sample": sample,
            "max_facts": n_max,
        }
        if user_request:
            payload["user_request"] = user_request
        doc = invoke(profile, payload, transport, run_log)
        seen_this_sample = set()
        for raw in doc.get("facts", []):
            if not isinstance(raw, dict):
                continue
            ftype = raw.get("fact_type")
            content = (raw.get("content") or "").strip()
            if ftype not in FACT_TYPES or not content:
                continue
            try:
                sig_score = float(raw.get("significance", 0.5))
            except (TypeError, ValueError):
                sig_score = 0.5
            sig_score = min(1.0, max(0.0, sig_score))
            sig = _signature(ftype, content)
            if sig in seen_this_sample:
                continue
            seen_this_sample.add(sig)
            entry = by_sig.setdefault(
                sig, {"fact_type": ftype, "content": content, "scores": [], "votes": 0}
            )
            entry["scores"].append(sig_score)
            entry["votes"] += 1

    threshold = math.ceil(k / 2)
    survivors = [e for e in by_sig.values() if e["votes"] >= threshold]
    if not survivors:
        raise WorkerError(
            "no fact idea survived self-consistency filtering; "
            "try a broader or different request"
        )
    survivors.sort(
        key=lambda e: (-(sum(e["scores"]) / len(e["scores"])), e["content"].lower())
    )
    survivors = survivors[:n_max]
    return [
        FactIdea(
            id=f"f{i + 1}",
            fact_type=e["fact_type"],
            content=e["content"],
            significance=round(sum(e["scores"]) / len(e["scores"]), 4),
        )
        for i, e in enumerate(survivors)
    ]


def compose_single_fact(
    request: str,
    rep: DatasetRepresentation,
    transport: Transport,
    fact_id: str,
    run_log: Optional[RunLog] = None,
) -> FactIdea:
    """Wrap one natural-language request as a single typed fact idea."""
    profile = load_profile("fact-idea-composer")
    payload = {
        "representation": rep.text,
        "columns": _columns_payload(rep),
        "user_request": request,
        "sample": 1,
        "max_facts": 1,
        "mode": "single",
    }
    doc = invoke(profile, payload, transport, run_log)
    facts = [f for f in doc.get("facts", []) if isinstance(f, dict)]
    if not facts:
        raise WorkerError("composer returned no fact for the request")
    raw = facts[0]
    ftype = raw.get("fact_type")
    if ftype not in FACT_TYPES:
        ftype = "value"
    content = (raw.get("content") or request).strip()
    return FactIdea(id=fact_id, fact_type=ftype, content=content, significance=1.0)


# data extraction ------------------------------------------------------------

def extract_data(
    idea: FactIdea,
    rep: DatasetRepresentation,
    user_request: Optional[str],
    ds: Dataset,
    amap: AnonymizationMap,
    transport: Transport,
    run_log: Optional[RunLog] = None,
) -> tuple[str, ResultTable]:
    """Advise, generate, validate: bounded SQL loop against the local engine."""
    adviser = load_profile("data-extractor-adviser")
    extractor = load_profile("data-extractor")

    advise_payload = {
        "representation": rep.text,
        "fact_type": idea.fact_type,
        "content": idea.content,
    }
    if user_request:
        advise_payload["user_request"] = user_request
    try:
        recommendations = invoke(adviser, advise_payload, transport, run_log).get(
            "recommendations", []
        )
        recommendations = [str(r) for r in recommendations]
    except WorkerError:
        recommendations = []

    feedback = None
    last_sql = None
    last_error = None
    for _attempt in range(MAX_SQL_ATTEMPTS):
        payload = {
            "representation": rep.text,
            "fact_type": idea.fact_type,
            "content": idea.content,
            "recommendations": recommendations,
        }
        if user_request:
            payload["user_request"] = user_request
        if feedback:
            payload["feedback"] = feedback
        try:
            sql = str(invoke(extractor, payload, transport, run_log)["sql"])
        except WorkerError as exc:
            last_error = str(exc)
            feedback = f"previous response was not usable: {exc}"
            continue
        sql = deanonymize_literals(sql, amap)
        last_sql = sql
        try:
            table = run_sql(sql, ds)
        except SqlError as exc:
            last_error = str(exc)
            feedback = f"the query failed: {exc}"
            continue
        if table.row_count == 0:
            last_error = "query returned no rows"
            feedback = (
                "the query executed but returned no rows; adjust the filters.\n"
                + describe_result(table)
            )
            continue
        return sql, table
    raise ExtractionError(
        f"no usable SQL for fact {idea.id!r} after {MAX_SQL_ATTEMPTS} attempts: {last_error}",
        last_sql=last_sql,
        last_error=last_error,
    )


# chart selection ------------------------------------------------------------

_KNOWN_PROPOSAL_KEYS = {
    "chart_type", "x_field", "y_field", "color_field",
    "x_label", "y_label", "title", "color_scheme",
}

_ORDERED_NAME_RE = re.compile(r"year|date|month|day|week|quarter", re.IGNORECASE)


def _params_from_proposal(doc: dict, idea: FactIdea) -> ChartParams:
    extra = tuple(
        sorted(
            k for k, v in doc.items()
            if k not in _KNOWN_PROPOSAL_KEYS and k.endswith("_field") and v
        )
    )
    return ChartParams(
        chart_type=str(doc.get("chart_type", "")),
        x_field=str(doc.get("x_field", "")),
        y_field=str(doc.get("y_field", "")),
        color_field=doc.get("color_field") or None,
        x_label=str(doc.get("x_label") or doc.get("x_field", "")),
        y_label=str(doc.get("y_label") or doc.get("y_field", "")),
        title=str(doc.get("title") or idea.content),
        color_scheme=str(doc.get("color_scheme") or "categorical"),
        extra_encodings=extra,
    )


def fallback_chart(idea: FactIdea, table: ResultTable) -> ChartParams:
    """Deterministic chart choice when the model proposal cannot be repaired."""
    numeric = [c for c, t in zip(table.columns, table.types) if t in ("INTEGER", "REAL")]
    categorical = [c for c, t in zip(table.columns, table.types) if t not in ("INTEGER", "REAL")]
    if categorical and numeric:
        x, y, ctype = categorical[0], numeric[0], "bar"
    elif len(numeric) >= 2 and _ORDERED_NAME_RE.search(numeric[0]):
        x, y, ctype = numeric[0], numeric[1], "line"
    elif len(numeric) >= 2:
        x, y, ctype = numeric[0], numeric[1], "scatter"
    else:
        x, y, ctype = table.columns[0], table.columns[1], "bar"
    return ChartParams(
        chart_type=ctype, x_field=x, y_field=y,
        x_label=x, y_label=y, title=idea.content,
    )


def choose_chart(
    idea: FactIdea,
    table: ResultTable,
    transport: Transport,
    run_log: Optional[RunLog] = None,
) -> ChartParams:
    if table.row_count == 0:
        raise ChartError("cannot chart an empty result table")
    if len(table.columns) < 2:
        raise ChartError(
            "result table has a single column; nothing to encode an axis pair from"
        )
    profile = load_profile("data-visualizer")
    payload = {
        "fact_type": idea.fact_type,
        "content": idea.content,
        "columns": [{"name": n, "type": t} for n, t in zip(table.columns, table.types)],
        "sample_rows": [list(r) for r in table.rows[:5]],
    }
    params = None
    for attempt in range(2):  # proposal, then one repair
        try:
            doc = invoke(profile, payload, transport, run_log)
        except WorkerError:
            break
        params = _params_from_proposal(doc, idea)
        violations = validate_params(params, table)
        if not violations:
            return params
        payload = dict(payload, feedback="; ".join(violations))
    fb = fallback_chart(idea, table)
    violations = validate_params(fb, table)
    if violations:
        raise ChartError("no valid chart for this table: " + "; ".join(violations))
    return fb


# fact writing ---------------------------------------------------------------

_NUMBER_IN_TEXT_RE = re.compile(r"\d[\d,]*(?:\.\d+)?")


def _table_number_forms(table: ResultTable) -> set[str]:
    """All number strings a grounded statement may legally contain."""
    forms: set[str] = set()

    def add_number(v):
        if isinstance(v, bool):
            return
        if isinstance(v, int):
            forms.add(str(v))
            forms.add(f"{v:,}")
        elif isinstance(v, float):
            forms.add(str(v))
            if v == int(v):
                forms.add(str(int(v)))
                forms.add(f"{int(v):,}")
            for nd in (0, 1, 2, 3):
                forms.add(f"{round(v, nd):.{nd}f}")
                forms.add(f"{round(v, nd):,.{nd}f}")

    for row in table.rows:
        for v in row:
            if v is None:
                continue
            if isinstance(v, (int, float)):
                add_number(v)
            else:
                for m in _NUMBER_IN_TEXT_RE.finditer(str(v)):
                    forms.add(m.group(0))
    return forms


def statement_grounded(statement: str, table: ResultTable) -> list[str]:
    """Numbers in the statement that do not appear in the table."""
    allowed = _table_number_forms(table)
    missing = []
    for m in _NUMBER_IN_TEXT_RE.finditer(statement):
        token = m.group(0)
        bare = token.replace(",", "")
        if token in allowed or bare in allowed or "-" + bare in allowed:
            continue
        missing.append(token)
    return missing


def _word_count(text: str) -> int:
    return len(text.split())


def _clean_causal_qas(raw) -> tuple:
    qas = []
    if not isinstance(raw, list):
        return ()
    for item in raw:
        if not isinstance(item, dict):
            continue
        q = str(item.get("question", "")).strip()
        a = str(item.get("answer", "")).strip()
        if not q.endswith("?") or not a:
            continue
        if _word_count(a) > ANSWER_WORD_LIMIT:
            continue
        qas.append((q, a))
        if len(qas) == MAX_CAUSAL_QAS:
            break
    return tuple(qas)


def template_statement(chart: ChartParams) -> str:
    return f"{chart.y_label or chart.y_field} by {chart.x_label or chart.x_field}"


def write_fact(
    idea: FactIdea,
    table: ResultTable,
    chart: ChartParams,
    transport: Transport,
    run_log: Optional[RunLog] = None,
) -> tuple[str, tuple]:
    """One grounded statement plus up to two causal question/answer pairs."""
    profile = load_profile("fact-writer")
    payload = {
        "fact_type": idea.fact_type,
        "content": idea.content,
        "chart": chart.to_json_dict(),
        "table_text": describe_result(table, max_rows=10),
    }
    for attempt in range(2):  # first try, then one grounding repair
        try:
            doc = invoke(profile, payload, transport, run_log)
        except WorkerError:
            break
        statement = str(doc.get("statement", "")).strip()
        ungrounded = statement_grounded(statement, table) if statement else ["<empty>"]
        too_long = _word_count(statement) > STATEMENT_WORD_LIMIT
        if statement and not ungrounded and not too_long:
            return statement, _clean_causal_qas(doc.get("causal_qas"))
        problems = []
        if ungrounded:
            problems.append(
                "these numbers are not present in the table: " + ", ".join(ungrounded)
            )
        if too_long:
            problems.append(f"statement exceeds {STATEMENT_WORD_LIMIT} words")
        payload = dict(payload, feedback="; ".join(problems))
    return template_statement(chart), ()


# sheet organization ---------------------------------------------------------

def _dataset_summary(rep: DatasetRepresentation) -> str:
    cols = ", ".join(n for n, _ in rep.schema)
    return (
        f"{rep.dataset_name}: {rep.row_count} rows, "
        f"{len(rep.schema)} columns ({cols})"
    )


def build_intro_text(rep: DatasetRepresentation, user_request: Optional[str]) -> str:
    cols = ", ".join(n for n, _ in rep.schema)
    text = (
        f"This fact sheet summarizes the {rep.dataset_name} dataset: "
        f"{rep.row_count} rows across {len(rep.schema)} columns ({cols})."
    )
    if user_request:
        text += f" Focus: {user_request}"
    return text


def _structure_from_doc(doc: dict, rep, user_request) -> SheetStructure:
    sections = [Section("Introduction", ())]
    for raw in doc.get("sections", []):
        if not isinstance(raw, dict):
            continue
        topic = str(raw.get("topic", "")).strip()
        ids = tuple(str(i) for i in raw.get("fact_ids", []))
        sections.append(Section(topic, ids))
    return SheetStructure(
        title=str(doc.get("title", "")).strip() or f"Fact Sheet: {rep.dataset_name}",
        intro_text=build_intro_text(rep, user_request),
        sections=tuple(sections),
    )


def fallback_structure(
    fact_ids: list[str], rep: DatasetRepresentation, user_request: Optional[str]
) -> SheetStructure:
    return SheetStructure(
        title=f"Fact Sheet: {rep.dataset_name}",
        intro_text=build_intro_text(rep, user_request),
        sections=(
            Section("Introduction", ()),
            Section("Findings", tuple(fact_ids)),
        ),
    )


def organize_sheet(
    facts: list[FactCard],
    rep: DatasetRepresentation,
    user_request: Optional[str],
    transport: Transport,
    run_log: Optional[RunLog] = None,
) -> SheetStructure:
    """Group facts into 2-5 topics; verified partition with one repair."""
    if not facts:
        raise WorkerError("cannot organize a sheet with no facts")
    profile = load_profile("factsheet-organizer")
    fact_ids = [c.idea.id for c in facts]
    payload = {
        "facts": [
            {"id": c.idea.id, "fact_type": c.idea.fact_type, "content": c.idea.content}
            for c in facts
        ],
        "dataset_summary": _dataset_summary(rep),
    }
    if user_request:
        payload["user_request"] = user_request
    for attempt in range(2):  # proposal, then one repair
        try:
            doc = invoke(profile, payload, transport, run_log)
        except WorkerError:
            break
        structure = _structure_from_doc(doc, rep, user_request)
        problems = validate_structure(structure, set(fact_ids))
        topical = len(structure.sections) - 1
        if not (2 <= topical <= 5) and len(fact_ids) > 1:
            problems.append(f"expected 2-5 topical sections, got {topical}")
        elif len(fact_ids) == 1 and topical != 1:
            problems.append("a single fact belongs in exactly one topical section")
        if not problems:
            return structure
        payload = dict(payload, feedback="; ".join(problems))
    return fallback_structure(fact_ids, rep, user_request)


def place_fact(
    card: FactCard,
    structure: SheetStructure,
    rep: DatasetRepresentation,
    transport: Transport,
    run_log: Optional[RunLog] = None,
) -> str:
    """Pick the existing section topic where a freshly added fact belongs."""
    existing = [s.topic for s in structure.sections[1:]]
    if not existing:
        return "Findings"
    profile = load_profile("factsheet-organizer")
    payload = {
        "facts": [
            {"id": card.idea.id, "fact_type": card.idea.fact_type, "content": card.idea.content}
        ],
        "dataset_summary": _dataset_summary(rep),
        "mode": "place",
        "existing_sections": existing,
    }
    try:
        doc = invoke(profile, payload, transport, run_log)
        for raw in doc.get("sections", []):
            if isinstance(raw, dict) and str(raw.get("topic", "")) in existing:
                ids = [str(i) for i in raw.get("fact_ids", [])]
                if card.idea.id in ids:
                    return str(raw["topic"])
    except WorkerError:
        pass
    return existing[-1]
