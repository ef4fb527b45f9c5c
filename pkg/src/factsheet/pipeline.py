"""End-to-end orchestration: dataset in, organized fact sheet out."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Optional

from . import workers
from .agent import BlockStore, RunLog, Transport
from .anonymize import AnonymizationMap, build_map
from .charts import render
from .errors import (
    ChartError,
    EditValidationError,
    FactsheetError,
    GenerationError,
    UnsupportedRequestError,
)
from .ingest import Dataset, classify_columns, load_csv
from .representation import DatasetRepresentation, build_representation
from .sheet import FactSheet, Section
from .workers import FactCard, SheetStructure

DEFAULT_TOKEN_BUDGET = 2048

_FORECAST_RE = re.compile(
    r"\b(predict|forecast|projection|extrapolate)\b|"
    r"\bfuture\s+(trend|value|sale|revenue|growth)",
    re.IGNORECASE,
)


def check_request_supported(request: str) -> None:
    if _FORECAST_RE.search(request):
        raise UnsupportedRequestError(
            "this request asks for prediction or forecasting, which is not "
            "supported; facts are derived only from the data as it stands"
        )


@dataclass
class PreparedDataset:
    """Ingested dataset plus everything derived from it once per run."""

    dataset: Dataset
    amap: AnonymizationMap
    representation: DatasetRepresentation


def prepare_dataset(
    csv_bytes: bytes,
    name: str,
    seed: int,
    token_budget: int = DEFAULT_TOKEN_BUDGET,
    overrides: Optional[dict] = None,
) -> PreparedDataset:
    ds = load_csv(csv_bytes, name)
    ds = classify_columns(ds, overrides or {})
    amap = build_map(ds, seed)
    rep = build_representation(ds, amap, token_budget, seed)
    return PreparedDataset(dataset=ds, amap=amap, representation=rep)


def _sheet_id(dataset_name: str, seed: int, user_request: Optional[str]) -> str:
    key = f"{dataset_name}|{seed}|{user_request or ''}"
    return hashlib.sha256(key.encode()).hexdigest()[:12]


def build_fact_card(
    idea: workers.FactIdea,
    prepared: PreparedDataset,
    user_request: Optional[str],
    transport: Transport,
    blocks: BlockStore,
    run_log: Optional[RunLog] = None,
) -> FactCard:
    sql, table = workers.extract_data(
        idea, prepared.representation, user_request,
        prepared.dataset, prepared.amap, transport, run_log,
    )
    chart = workers.choose_chart(idea, table, transport, run_log)
    rendered = render(chart, table)
    chart_ref = blocks.put(rendered.svg_text.encode())
    statement, qas = workers.write_fact(idea, table, chart, transport, run_log)
    return FactCard(
        idea=idea, sql=sql, table=table, chart=chart,
        chart_ref=chart_ref, statement=statement, causal_qas=qas,
    )


def generate_sheet(
    prepared: PreparedDataset,
    seed: int,
    transport: Transport,
    blocks: BlockStore,
    user_request: Optional[str] = None,
    run_log: Optional[RunLog] = None,
    max_facts: int = workers.DEFAULT_MAX_FACTS,
) -> FactSheet:
    if user_request:
        check_request_supported(user_request)
    ideas = workers.compose_fact_ideas(
        prepared.representation, user_request, transport,
        n_max=max_facts, run_log=run_log,
    )
    cards: dict[str, FactCard] = {}
    failures = []
    for idea in ideas:
        try:
            cards[idea.id] = build_fact_card(
                idea, prepared, user_request, transport, blocks, run_log
            )
        except (ChartError, FactsheetError) as exc:
            failures.append({"fact_id": idea.id, "content": idea.content,
                             "error": str(exc)})
    if not cards:
        raise GenerationError(
            "every candidate fact failed extraction or charting", failures
        )
    structure = workers.organize_sheet(
        list(cards.values()), prepared.representation, user_request,
        transport, run_log,
    )
    return FactSheet(
        id=_sheet_id(prepared.dataset.name, seed, user_request),
        dataset_name=prepared.dataset.name,
        seed=seed,
        revision=0,
        structure=structure,
        facts=cards,
        user_request=user_request,
    )


def _next_fact_id(sheet: FactSheet) -> str:
    n = 1
    while f"f{n}" in sheet.facts:
        n += 1
    return f"f{n}"


def add_fact_from_request(
    sheet: FactSheet,
    request: str,
    prepared: PreparedDataset,
    transport: Transport,
    blocks: BlockStore,
    run_log: Optional[RunLog] = None,
) -> str:
    """Add one natural-language-requested fact to an existing sheet."""
    if not request or not request.strip():
        raise EditValidationError("fact request must be non-empty")
    check_request_supported(request)
    fact_id = _next_fact_id(sheet)
    idea = workers.compose_single_fact(
        request, prepared.representation, transport, fact_id, run_log
    )
    card = build_fact_card(idea, prepared, request, transport, blocks, run_log)
    topic = workers.place_fact(
        card, sheet.structure, prepared.representation, transport, run_log
    )
    sections = list(sheet.structure.sections)
    for i, s in enumerate(sections):
        if s.topic == topic and i > 0:
            sections[i] = Section(s.topic, s.fact_ids + (fact_id,))
            break
    else:
        sections.append(Section(topic if topic != "Introduction" else "Findings",
                                (fact_id,)))
    sheet.facts[fact_id] = card
    sheet.structure = SheetStructure(
        title=sheet.structure.title,
        intro_text=sheet.structure.intro_text,
        sections=tuple(sections),
    )
    sheet.revision += 1
    return fact_id
