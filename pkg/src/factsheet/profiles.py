"""Load worker profiles from the bundled asset files."""

from __future__ import annotations

import json
from functools import lru_cache

from . import assets
from .agent import FieldSpec, WorkerProfile

PROFILE_FILES = {
    "fact-idea-composer": "profiles/fact_idea_composer.json",
    "data-extractor-adviser": "profiles/data_extractor_adviser.json",
    "data-extractor": "profiles/data_extractor.json",
    "data-visualizer": "profiles/data_visualizer.json",
    "fact-writer": "profiles/fact_writer.json",
    "factsheet-organizer": "profiles/factsheet_organizer.json",
}


def _fields(specs: list[dict]) -> tuple:
    return tuple(
        FieldSpec(
            name=s["name"],
            type=s["type"],
            description=s.get("description", ""),
            required=s.get("required", True),
        )
        for s in specs
    )


@lru_cache(maxsize=None)
def load_profile(name: str) -> WorkerProfile:
    doc = json.loads(assets.read_text(PROFILE_FILES[name]))
    knowledge = tuple(
        (ref.rsplit("/", 1)[-1].rsplit(".", 1)[0].replace("_", " "), assets.read_text(ref))
        for ref in doc.get("knowledge_refs", [])
    )
    return WorkerProfile(
        name=doc["name"],
        overall_goal=doc["overall_goal"],
        specific_role=doc["specific_role"],
        persona=doc["persona"],
        input_schema=_fields(doc["input_schema"]),
        output_schema=_fields(doc["output_schema"]),
        few_shot_examples=tuple((inp, out) for inp, out in doc.get("few_shot_examples", [])),
        knowledge=knowledge,
        instructions=tuple(doc.get("instructions", [])),
    )
