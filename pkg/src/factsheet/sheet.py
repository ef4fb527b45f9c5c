"""Fact-sheet document model, edit operations, and on-disk store."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

from .errors import EditValidationError, RevisionConflictError, SheetNotFoundError
from .workers import FactCard, Section, SheetStructure

EDIT_OPS = (
    "add_section", "delete_section", "move_section", "rename_section",
    "delete_fact", "move_fact", "reorder_fact", "edit_text",
)


@dataclass
class FactSheet:
    id: str
    dataset_name: str
    seed: int
    revision: int
    structure: SheetStructure
    facts: dict = field(default_factory=dict)  # fact id -> FactCard
    user_request: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "dataset_name": self.dataset_name,
            "seed": self.seed,
            "revision": self.revision,
            "structure": self.structure.to_json_dict(),
            "facts": {fid: c.to_json_dict() for fid, c in self.facts.items()},
            "user_request": self.user_request,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FactSheet":
        return cls(
            id=d["id"],
            dataset_name=d["dataset_name"],
            seed=d["seed"],
            revision=d["revision"],
            structure=SheetStructure.from_json_dict(d["structure"]),
            facts={fid: FactCard.from_json_dict(c) for fid, c in d["facts"].items()},
            user_request=d.get("user_request"),
        )


# edit operations ------------------------------------------------------------

def _require(cond: bool, message: str) -> None:
    if not cond:
        raise EditValidationError(message)


def _section_index(sections: list[Section], topic: str) -> int:
    for i, s in enumerate(sections):
        if s.topic == topic:
            return i
    raise EditValidationError(f"no section named {topic!r}")


def _fact_location(sections: list[Section], fact_id: str) -> tuple[int, int]:
    for i, s in enumerate(sections):
        if fact_id in s.fact_ids:
            return i, s.fact_ids.index(fact_id)
    raise EditValidationError(f"no fact with id {fact_id!r}")


class _Draft:
    """Mutable working copy; committed only if every op validates."""

    def __init__(self, sheet: FactSheet):
        self.title = sheet.structure.title
        self.intro_text = sheet.structure.intro_text
        self.sections = [Section(s.topic, s.fact_ids) for s in sheet.structure.sections]
        self.facts = dict(sheet.facts)

    def apply(self, op: dict) -> None:
        name = op.get("op")
        _require(name in EDIT_OPS, f"unknown edit operation {name!r}")
        getattr(self, "_" + name)(op)

    def _add_section(self, op):
        topic = str(op.get("topic", "")).strip()
        _require(bool(topic), "section topic must be non-empty")
        _require(
            all(s.topic != topic for s in self.sections),
            f"section {topic!r} already exists",
        )
        index = op.get("index", len(self.sections))
        _require(isinstance(index, int) and 1 <= index <= len(self.sections),
                 "section index must be at least 1 (Introduction stays first)")
        self.sections.insert(index, Section(topic, ()))

    def _delete_section(self, op):
        i = _section_index(self.sections, str(op.get("topic", "")))
        _require(i != 0, "the Introduction section cannot be deleted")
        for fid in self.sections[i].fact_ids:
            self.facts.pop(fid, None)
        del self.sections[i]

    def _move_section(self, op):
        i = _section_index(self.sections, str(op.get("topic", "")))
        _require(i != 0, "the Introduction section cannot be moved")
        index = op.get("index")
        _require(isinstance(index, int) and 1 <= index < len(self.sections),
                 "target index must keep the Introduction first")
        self.sections.insert(index, self.sections.pop(i))

    def _rename_section(self, op):
        i = _section_index(self.sections, str(op.get("topic", "")))
        _require(i != 0, "the Introduction section cannot be renamed")
        new = str(op.get("new_topic", "")).strip()
        _require(bool(new), "new topic must be non-empty")
        _require(all(s.topic != new for s in self.sections),
                 f"section {new!r} already exists")
        self.sections[i] = Section(new, self.sections[i].fact_ids)

    def _delete_fact(self, op):
        fid = str(op.get("fact_id", ""))
        si, fi = _fact_location(self.sections, fid)
        ids = list(self.sections[si].fact_ids)
        del ids[fi]
        self.sections[si] = Section(self.sections[si].topic, tuple(ids))
        self.facts.pop(fid, None)

    def _move_fact(self, op):
        fid = str(op.get("fact_id", ""))
        si, fi = _fact_location(self.sections, fid)
        ti = _section_index(self.sections, str(op.get("topic", "")))
        _require(ti != 0, "facts cannot be placed in the Introduction")
        src = list(self.sections[si].fact_ids)
        del src[fi]
        self.sections[si] = Section(self.sections[si].topic, tuple(src))
        dst = list(self.sections[ti].fact_ids)
        index = op.get("index", len(dst))
        _require(isinstance(index, int) and 0 <= index <= len(dst),
                 "fact index out of range")
        dst.insert(index, fid)
        self.sections[ti] = Section(self.sections[ti].topic, tuple(dst))

    def _reorder_fact(self, op):
        fid = str(op.get("fact_id", ""))
        si, fi = _fact_location(self.sections, fid)
        ids = list(self.sections[si].fact_ids)
        index = op.get("index")
        _require(isinstance(index, int) and 0 <= index < len(ids),
                 "fact index out of range")
        ids.insert(index, ids.pop(fi))
        self.sections[si] = Section(self.sections[si].topic, tuple(ids))

    def _edit_text(self, op):
        target = op.get("target")
        text = op.get("text")
        _require(isinstance(text, str) and bool(text.strip()),
                 "replacement text must be non-empty")
        if target == "title":
            self.title = text.strip()
        elif target == "intro":
            self.intro_text = text.strip()
        elif target == "statement":
            fid = str(op.get("fact_id", ""))
            _require(fid in self.facts, f"no fact with id {fid!r}")
            card = self.facts[fid]
            self.facts[fid] = FactCard(
                idea=card.idea, sql=card.sql, table=card.table, chart=card.chart,
                chart_ref=card.chart_ref, statement=text.strip(),
                causal_qas=card.causal_qas,
            )
        else:
            raise EditValidationError(
                "edit_text target must be 'title', 'intro', or 'statement'"
            )


def apply_edit_ops(sheet: FactSheet, base_revision: int, ops: list) -> FactSheet:
    """Validate and apply a batch atomically; bumps the revision by one."""
    if base_revision != sheet.revision:
        raise RevisionConflictError(base_revision, sheet.revision)
    if not ops:
        raise EditValidationError("empty edit batch")
    draft = _Draft(sheet)
    for op in ops:
        if not isinstance(op, dict):
            raise EditValidationError("each edit operation must be an object")
        draft.apply(op)
    sheet.structure = SheetStructure(
        title=draft.title,
        intro_text=draft.intro_text,
        sections=tuple(draft.sections),
    )
    sheet.facts = draft.facts
    sheet.revision += 1
    return sheet


# persistence ----------------------------------------------------------------

class SheetStore:
    def __init__(self, root: str):
        self.root = os.path.join(root, "sheets")
        os.makedirs(self.root, exist_ok=True)

    def _path(self, sheet_id: str) -> str:
        return os.path.join(self.root, f"{sheet_id}.json")

    def save(self, sheet: FactSheet) -> str:
        path = self._path(sheet.id)
        payload = json.dumps(sheet.to_json_dict(), sort_keys=True, indent=2)
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        return path

    def load(self, sheet_id: str) -> FactSheet:
        path = self._path(sheet_id)
        if not os.path.exists(path):
            raise SheetNotFoundError(f"no sheet with id {sheet_id!r}")
        with open(path) as fh:
            return FactSheet.from_json_dict(json.load(fh))

    def list_ids(self) -> list[str]:
        return sorted(
            f[:-5] for f in os.listdir(self.root) if f.endswith(".json")
        )
