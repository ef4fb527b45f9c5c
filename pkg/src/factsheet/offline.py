"""Rule-based stand-in for a language model.

Parses the worker prompts produced by :mod:`factsheet.agent` and answers
them deterministically from the structured input block.  Used to record
replayable fixtures and to run the whole pipeline without network access.
The heuristics are intentionally simple; they only need to produce output
that survives the same validation the real model output goes through.
"""

from __future__ import annotations

import json
import re

from .agent import Transport

_ROLE_RE = re.compile(r"^# Your role: (.+)$", re.MULTILINE)
_INPUT_RE = re.compile(r"^# Input\n```json\n(.*?)\n```", re.MULTILINE | re.DOTALL)
_DDL_RE = re.compile(r'CREATE TABLE "((?:[^"]|"")*)" \((.*?)\);', re.DOTALL)
_DDL_COL_RE = re.compile(r'"((?:[^"]|"")*)" (TEXT|INTEGER|REAL)')
_YEARISH_RE = re.compile(r"year|date|month|quarter", re.IGNORECASE)
_TOP_N_RE = re.compile(r"\btop\s+(\d+)\b", re.IGNORECASE)


def _q(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def _parse_schema(representation: str) -> tuple[str, list[tuple[str, str]]]:
    m = _DDL_RE.search(representation)
    if not m:
        return "data", []
    table = m.group(1).replace('""', '"')
    cols = [
        (c.replace('""', '"'), t) for c, t in _DDL_COL_RE.findall(m.group(2))
    ]
    return table, cols


def _pick_columns(cols, content):
    """Categorical / numeric / time columns, preferring ones named in the text."""
    lowered = content.lower()
    text_cols = [c for c, t in cols if t == "TEXT"]
    num_cols = [c for c, t in cols if t in ("INTEGER", "REAL")]
    time_cols = [c for c, t in cols if t == "INTEGER" and _YEARISH_RE.search(c)]
    measure = [c for c in num_cols if c not in time_cols] or num_cols

    def prefer(pool):
        for c in pool:
            if c.lower() in lowered:
                return c
        return pool[0] if pool else None

    return prefer(text_cols), prefer(measure), time_cols[0] if time_cols else None


class OfflineTransport(Transport):
    """Deterministic responder keyed off the role header in each prompt."""

    def complete(self, prompt: str) -> str:
        role_m = _ROLE_RE.search(prompt)
        input_m = _INPUT_RE.search(prompt)
        if not role_m or not input_m:
            return json.dumps({"error": "unrecognized prompt"})
        role = role_m.group(1).strip()
        payload = json.loads(input_m.group(1))
        handler = {
            "fact-idea-composer": self._compose,
            "data-extractor-adviser": self._advise,
            "data-extractor": self._extract,
            "data-visualizer": self._visualize,
            "fact-writer": self._write,
            "factsheet-organizer": self._organize,
        }.get(role)
        if handler is None:
            return json.dumps({"error": f"unknown role {role}"})
        return json.dumps(handler(payload), sort_keys=True)

    # composer ---------------------------------------------------------

    def _compose(self, payload: dict) -> dict:
        request = payload.get("user_request")
        if payload.get("mode") == "single":
            return {"facts": [self._idea_for_request(request or "")]}

        columns = payload.get("columns", [])
        text_cols = [c["name"] for c in columns if c["data_class"] in ("nominal", "ordinal")]
        num_cols = [c["name"] for c in columns if c["data_class"] in ("discrete", "continuous")]
        time_cols = [c for c in num_cols if _YEARISH_RE.search(c)]
        measures = [c for c in num_cols if c not in time_cols] or num_cols

        facts = []
        if request:
            facts.append(self._idea_for_request(request))
        if text_cols and measures:
            cat, num = text_cols[0], measures[0]
            facts.append({
                "fact_type": "aggregation",
                "content": f"Total {num} for each {cat}",
                "significance": 0.9,
            })
            facts.append({
                "fact_type": "rank",
                "content": f"Top {cat} values ranked by {num}",
                "significance": 0.85,
            })
            facts.append({
                "fact_type": "extreme",
                "content": f"The {cat} with the highest {num}",
                "significance": 0.8,
            })
        if text_cols:
            facts.append({
                "fact_type": "proportion",
                "content": f"Share of records for each {text_cols[-1]}",
                "significance": 0.75,
            })
        if time_cols and measures:
            facts.append({
                "fact_type": "trend",
                "content": f"How {measures[0]} changed across {time_cols[0]}",
                "significance": 0.88,
            })
        if len(text_cols) >= 2 and measures:
            facts.append({
                "fact_type": "categorization",
                "content": f"{measures[0]} broken down by {text_cols[1]}",
                "significance": 0.7,
            })
        if len(measures) >= 2:
            facts.append({
                "fact_type": "association",
                "content": f"Relationship between {measures[0]} and {measures[1]}",
                "significance": 0.65,
            })
        # one-off idea per sample; majority voting is expected to drop it
        facts.append({
            "fact_type": "value",
            "content": f"Scratch observation number {payload.get('sample', 0)}",
            "significance": 0.1,
        })
        return {"facts": facts[: payload.get("max_facts", 12) + 1]}

    def _idea_for_request(self, request: str) -> dict:
        lowered = request.lower()
        if _TOP_N_RE.search(lowered) or "highest" in lowered or "largest" in lowered:
            ftype = "rank"
        elif "proportion" in lowered or "share" in lowered or "percentage" in lowered:
            ftype = "proportion"
        elif "trend" in lowered or "over time" in lowered or "change" in lowered:
            ftype = "trend"
        elif "average" in lowered or "total" in lowered or "sum" in lowered:
            ftype = "aggregation"
        elif "relationship" in lowered or "correlat" in lowered:
            ftype = "association"
        else:
            ftype = "value"
        return {"fact_type": ftype, "content": request.strip(), "significance": 1.0}

    # extraction -------------------------------------------------------

    def _advise(self, payload: dict) -> dict:
        return {
            "recommendations": [
                "quote identifiers that contain spaces or symbols",
                "order results deterministically and limit category counts",
            ]
        }

    def _extract(self, payload: dict) -> dict:
        table, cols = _parse_schema(payload.get("representation", ""))
        content = payload.get("content", "")
        request = payload.get("user_request", "")
        cat, num, time_col = _pick_columns(cols, content + " " + request)

        if payload.get("feedback") and cat:
            # retreat to the safest possible shape after a failed attempt
            return {"sql": (
                f"SELECT {_q(cat)}, COUNT(*) AS n FROM {_q(table)} "
                f"GROUP BY {_q(cat)} ORDER BY n DESC, {_q(cat)} LIMIT 12"
            )}

        where = ""
        if "this century" in (content + request).lower() and time_col:
            where = f" WHERE {_q(time_col)} >= 2000"

        ftype = payload.get("fact_type", "value")
        top_m = _TOP_N_RE.search(content) or _TOP_N_RE.search(request)
        limit_n = int(top_m.group(1)) if top_m else 10

        if ftype in ("rank", "extreme", "value") and cat and num:
            n = 1 if ftype == "extreme" else limit_n
            sql = (
                f"SELECT {_q(cat)}, MAX({_q(num)}) AS {_q(num)} FROM {_q(table)}{where} "
                f"GROUP BY {_q(cat)} ORDER BY {_q(num)} DESC, {_q(cat)} LIMIT {n}"
            )
        elif ftype == "trend" and time_col and num:
            sql = (
                f"SELECT {_q(time_col)}, SUM({_q(num)}) AS total FROM {_q(table)}{where} "
                f"GROUP BY {_q(time_col)} ORDER BY {_q(time_col)}"
            )
        elif ftype in ("aggregation", "categorization", "difference") and cat and num:
            sql = (
                f"SELECT {_q(cat)}, SUM({_q(num)}) AS total FROM {_q(table)}{where} "
                f"GROUP BY {_q(cat)} ORDER BY total DESC, {_q(cat)} LIMIT 12"
            )
        elif ftype == "association" and num:
            nums = [c for c, t in cols if t in ("INTEGER", "REAL")]
            other = next((c for c in nums if c != num), num)
            sql = f"SELECT {_q(num)}, {_q(other)} FROM {_q(table)}{where} LIMIT 60"
        elif cat:
            sql = (
                f"SELECT {_q(cat)}, COUNT(*) AS n FROM {_q(table)}{where} "
                f"GROUP BY {_q(cat)} ORDER BY n DESC, {_q(cat)} LIMIT 12"
            )
        elif num:
            sql = f"SELECT {_q(num)}, COUNT(*) AS n FROM {_q(table)} GROUP BY {_q(num)} ORDER BY {_q(num)}"
        else:
            sql = f"SELECT * FROM {_q(table)} LIMIT 10"
        return {"sql": sql}

    # visualization ----------------------------------------------------

    def _visualize(self, payload: dict) -> dict:
        columns = payload.get("columns", [])
        rows = payload.get("sample_rows", [])
        names = [c["name"] for c in columns]
        numeric = [c["name"] for c in columns if c["type"] in ("INTEGER", "REAL")]
        text = [c["name"] for c in columns if c["type"] not in ("INTEGER", "REAL")]
        ftype = payload.get("fact_type", "value")

        if text and numeric:
            x, y = text[0], numeric[0]
            chart = "bar"
            if ftype in ("proportion", "distribution"):
                y_idx = names.index(y)
                vals = [r[y_idx] for r in rows if isinstance(r[y_idx], (int, float))]
                if all(v >= 0 for v in vals):
                    chart = "pie"
        elif len(numeric) >= 2:
            x, y = numeric[0], numeric[1]
            if ftype == "trend" or _YEARISH_RE.search(x):
                chart = "line"
            elif ftype == "association":
                chart = "scatter"
            else:
                chart = "line"
        elif numeric:
            x, y = names[0], numeric[0]
            chart = "bar"
        else:
            x, y, chart = names[0], names[-1], "bar"
        title = payload.get("content", "").strip() or f"{y} by {x}"
        return {
            "chart_type": chart,
            "x_field": x,
            "y_field": y,
            "color_field": None,
            "x_label": x,
            "y_label": y,
            "title": title[:80],
            "color_scheme": "sequential" if chart == "pie" else "categorical",
        }

    # writing ----------------------------------------------------------

    def _write(self, payload: dict) -> dict:
        chart = payload.get("chart", {})
        lines = payload.get("table_text", "").split("\n")
        data_lines = [l for l in lines[2:] if not l.startswith("...")]
        x_label = chart.get("x_label") or chart.get("x_field", "category")
        y_label = chart.get("y_label") or chart.get("y_field", "value")
        if not data_lines:
            return {"statement": f"{y_label} by {x_label}", "causal_qas": []}
        first = [v.strip() for v in data_lines[0].split(" | ")]
        lead, lead_val = first[0], (first[1] if len(first) > 1 else first[0])
        statement = (
            f"Across {len(data_lines)} listed results, {lead} leads on "
            f"{y_label} at {lead_val}."
        )
        qas = [{
            "question": f"Why does {lead} stand out on {y_label}?",
            "answer": (
                f"The chart compares {y_label} across {x_label}; {lead} tops "
                "the listed results, which often reflects scale or focus in "
                "that segment of the data."
            ),
        }]
        if len(data_lines) > 1:
            tail = [v.strip() for v in data_lines[-1].split(" | ")][0]
            qas.append({
                "question": f"What separates {lead} from {tail}?",
                "answer": (
                    f"Both appear in the same comparison of {y_label}, but "
                    f"{tail} sits at the lower end of the listed values."
                ),
            })
        return {"statement": statement, "causal_qas": qas}

    # organization -----------------------------------------------------

    _FAMILIES = (
        ("Leaders and Outliers", {"rank", "extreme", "outlier"}),
        ("Trends Over Time", {"trend"}),
        ("Composition", {"proportion", "distribution", "categorization"}),
        ("Key Measures", {"aggregation", "value", "difference", "association"}),
    )

    def _topic_for(self, fact_type: str) -> str:
        for topic, types in self._FAMILIES:
            if fact_type in types:
                return topic
        return "Key Measures"

    def _organize(self, payload: dict) -> dict:
        facts = payload.get("facts", [])
        summary = payload.get("dataset_summary", "data")
        name = summary.split(":", 1)[0].strip() or "data"

        if payload.get("mode") == "place":
            existing = payload.get("existing_sections", [])
            fact = facts[0] if facts else {}
            wanted = self._topic_for(fact.get("fact_type", "value"))
            topic = wanted if wanted in existing else (existing[-1] if existing else "Findings")
            return {
                "title": f"Fact Sheet: {name}",
                "sections": [{"topic": topic, "fact_ids": [fact.get("id", "")]}],
            }

        groups: dict[str, list[str]] = {}
        for f in facts:
            groups.setdefault(self._topic_for(f.get("fact_type", "value")), []).append(f["id"])
        sections = [
            {"topic": topic, "fact_ids": groups[topic]}
            for topic, _types in self._FAMILIES
            if topic in groups
        ]
        if len(sections) == 1 and len(sections[0]["fact_ids"]) > 1:
            ids = sections[0]["fact_ids"]
            half = (len(ids) + 1) // 2
            sections = [
                {"topic": sections[0]["topic"], "fact_ids": ids[:half]},
                {"topic": "Further Findings", "fact_ids": ids[half:]},
            ]
        return {"title": f"Fact Sheet: {name}", "sections": sections}
