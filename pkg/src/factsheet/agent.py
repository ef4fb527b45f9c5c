"""Worker abstraction: profiles, prompt rendering, transports, block store.

A worker is described by six attributes (goal, role, persona, input/output
schemas with few-shot examples, knowledge base, instructions). Invocations
go through a pluggable transport: live HTTP, record (wrap + persist),
replay (fixtures only, no network), or scripted (tests).
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import (
    BlockStoreError,
    FixtureMissingError,
    SchemaValidationError,
    TransportError,
    WorkerError,
)

REPAIR_BUDGET = 2  # re-prompts per invocation after a schema failure

_TYPE_CHECKS = {
    "string": lambda v: isinstance(v, str),
    "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "boolean": lambda v: isinstance(v, bool),
    "array": lambda v: isinstance(v, list),
    "object": lambda v: isinstance(v, dict),
}


@dataclass(frozen=True)
class FieldSpec:
    name: str
    type: str  # string | number | integer | boolean | array | object
    description: str = ""
    required: bool = True


def validate_payload(payload: dict, schema: tuple[FieldSpec, ...]) -> list[str]:
    """Return validation problems (empty list means the payload conforms)."""
    problems = []
    if not isinstance(payload, dict):
        return [f"payload must be a JSON object, got {type(payload).__name__}"]
    for spec in schema:
        if spec.name not in payload or payload[spec.name] is None:
            if spec.required:
                problems.append(f"missing required field {spec.name!r} ({spec.type})")
            continue
        if not _TYPE_CHECKS[spec.type](payload[spec.name]):
            problems.append(
                f"field {spec.name!r} must be {spec.type}, got "
                f"{type(payload[spec.name]).__name__}"
            )
    return problems


@dataclass(frozen=True)
class WorkerProfile:
    name: str
    overall_goal: str
    specific_role: str
    persona: str
    input_schema: tuple  # FieldSpec...
    output_schema: tuple
    few_shot_examples: tuple = ()  # ((input dict, output dict), ...)
    knowledge: tuple = ()  # (title, text) excerpts
    instructions: tuple = ()

    def __post_init__(self):
        if not self.input_schema or not self.output_schema:
            raise SchemaValidationError(f"worker {self.name!r} needs non-empty schemas")
        for inp, out in self.few_shot_examples:
            bad = validate_payload(inp, self.input_schema) + validate_payload(out, self.output_schema)
            if bad:
                raise SchemaValidationError(
                    f"few-shot example for worker {self.name!r} violates its schemas: "
                    + "; ".join(bad)
                )


def _schema_lines(schema) -> str:
    return "\n".join(
        f"- {s.name} ({s.type}{'' if s.required else ', optional'}): {s.description}"
        for s in schema
    )


def render_prompt(profile: WorkerProfile, payload: dict) -> str:
    """Deterministic prompt assembly; byte-identical for identical inputs."""
    problems = validate_payload(payload, profile.input_schema)
    if problems:
        raise SchemaValidationError(
            f"payload for worker {profile.name!r} is invalid: " + "; ".join(problems),
            fields=problems,
        )
    parts = [
        f"# Overall goal\n{profile.overall_goal}",
        f"# Your role: {profile.name}\n{profile.specific_role}",
        f"# Persona\n{profile.persona}",
    ]
    if profile.knowledge:
        kb = "\n\n".join(f"## {title}\n{text}" for title, text in profile.knowledge)
        parts.append(f"# Knowledge base\n{kb}")
    if profile.instructions:
        steps = "\n".join(f"{i + 1}. {s}" for i, s in enumerate(profile.instructions))
        parts.append(f"# Instructions\n{steps}")
    if profile.few_shot_examples:
        shots = []
        for inp, out in profile.few_shot_examples:
            shots.append(
                "Input:\n```json\n" + _dumps(inp) + "\n```\nOutput:\n```json\n" + _dumps(out) + "\n```"
            )
        parts.append("# Examples\n" + "\n\n".join(shots))
    parts.append(
        "# Output format\nRespond with a single JSON object with these fields:\n"
        + _schema_lines(profile.output_schema)
    )
    parts.append("# Input\n```json\n" + _dumps(payload) + "\n```")
    return "\n\n".join(parts)


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False)


def request_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


# transports -----------------------------------------------------------------

class Transport:
    """Contract: complete(prompt) -> response text."""

    mode = "abstract"

    def complete(self, prompt: str) -> str:
        raise NotImplementedError


class LiveTransport(Transport):
    """OpenAI-style chat completions over HTTP; credentials from the environment."""

    mode = "live"

    def __init__(
        self,
        endpoint: Optional[str] = None,
        model: Optional[str] = None,
        timeout: float = 60.0,
        max_retries: int = 2,
    ):
        self.endpoint = endpoint or os.environ.get(
            "FACTSHEET_LLM_ENDPOINT", "https://api.openai.com/v1/chat/completions"
        )
        self.model = model or os.environ.get("FACTSHEET_LLM_MODEL", "gpt-4")
        self.timeout = timeout
        self.max_retries = max_retries

    def complete(self, prompt: str) -> str:
        import requests

        key = os.environ.get("FACTSHEET_API_KEY") or os.environ.get("OPENAI_API_KEY")
        if not key:
            raise TransportError(
                "no API key: set FACTSHEET_API_KEY or OPENAI_API_KEY in the environment"
            )
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0.7,
        }
        last = None
        for _ in range(self.max_retries + 1):
            try:
                resp = requests.post(
                    self.endpoint,
                    json=body,
                    headers={"Authorization": f"Bearer {key}"},
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except Exception as exc:  # noqa: BLE001 - retried, then surfaced
                last = exc
        raise TransportError(f"transport failed after {self.max_retries + 1} attempts: {last}")


class ReplayTransport(Transport):
    """Answers from recorded fixtures keyed by request digest; no network."""

    mode = "replay"

    def __init__(self, fixtures_dir: str | Path):
        self.fixtures_dir = Path(fixtures_dir)

    def complete(self, prompt: str) -> str:
        digest = request_digest(prompt)
        path = self.fixtures_dir / f"{digest}.txt"
        if not path.exists():
            raise FixtureMissingError(digest)
        return path.read_text(encoding="utf-8")


class RecordTransport(Transport):
    """Wraps another transport and persists every (request, response) pair."""

    mode = "record"

    def __init__(self, inner: Transport, fixtures_dir: str | Path):
        self.inner = inner
        self.fixtures_dir = Path(fixtures_dir)
        self.fixtures_dir.mkdir(parents=True, exist_ok=True)

    def complete(self, prompt: str) -> str:
        digest = request_digest(prompt)
        path = self.fixtures_dir / f"{digest}.txt"
        if path.exists():
            return path.read_text(encoding="utf-8")
        response = self.inner.complete(prompt)
        (self.fixtures_dir / f"{digest}.request.txt").write_text(prompt, encoding="utf-8")
        path.write_text(response, encoding="utf-8")
        return response


class ScriptedTransport(Transport):
    """Returns queued responses in order; for tests."""

    mode = "scripted"

    def __init__(self, responses):
        self.responses = list(responses)
        self.prompts: list[str] = []

    def complete(self, prompt: str) -> str:
        self.prompts.append(prompt)
        if not self.responses:
            raise TransportError("scripted transport exhausted")
        nxt = self.responses.pop(0)
        if callable(nxt):
            return nxt(prompt)
        return nxt


# invocation -----------------------------------------------------------------

_FENCE_RE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)


def extract_json(text: str):
    """Parse the model response: fenced block first, then whole text."""
    m = _FENCE_RE.search(text)
    candidates = []
    if m:
        candidates.append(m.group(1))
    candidates.append(text)
    last_err = None
    for cand in candidates:
        try:
            return json.loads(cand.strip())
        except json.JSONDecodeError as exc:
            last_err = exc
    raise WorkerError(f"response is not valid JSON: {last_err}", raw_text=text)


class RunLog:
    """JSON-lines audit of every worker invocation."""

    def __init__(self, path: Optional[str | Path] = None):
        self.path = Path(path) if path else None
        self.entries: list[dict] = []

    def record(self, worker: str, digest: str, repair_count: int, latency: float):
        entry = {
            "worker": worker,
            "digest": digest,
            "repair_count": repair_count,
            "latency_s": round(latency, 6),
        }
        self.entries.append(entry)
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry) + "\n")


def invoke(
    profile: WorkerProfile,
    payload: dict,
    transport: Transport,
    run_log: Optional[RunLog] = None,
) -> dict:
    """One worker call with JSON repair: up to REPAIR_BUDGET re-prompts."""
    prompt = render_prompt(profile, payload)
    digest = request_digest(prompt)
    started = time.monotonic()
    attempt_prompt = prompt
    last_text = None
    for attempt in range(REPAIR_BUDGET + 1):
        text = transport.complete(attempt_prompt)
        last_text = text
        try:
            doc = extract_json(text)
            problems = validate_payload(doc, profile.output_schema)
        except WorkerError as exc:
            doc = None
            problems = [str(exc)]
        if doc is not None and not problems:
            if run_log:
                run_log.record(profile.name, digest, attempt, time.monotonic() - started)
            return doc
        attempt_prompt = (
            prompt
            + "\n\n# Repair\nYour previous response was invalid:\n"
            + "\n".join(f"- {p}" for p in problems)
            + "\nRespond again with a single valid JSON object."
        )
    raise WorkerError(
        f"worker {profile.name!r} output failed schema validation after "
        f"{REPAIR_BUDGET} repair attempts",
        raw_text=last_text,
    )


# envelopes ------------------------------------------------------------------

@dataclass(frozen=True)
class Envelope:
    id: str
    sender: str
    recipient: str
    created_at: str
    payload: dict
    block_refs: tuple = ()

    @classmethod
    def create(cls, sender: str, recipient: str, payload: dict, block_refs=()) -> "Envelope":
        return cls(
            id=str(uuid.uuid4()),
            sender=sender,
            recipient=recipient,
            created_at=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            payload=payload,
            block_refs=tuple(block_refs),
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "sender": self.sender,
                "recipient": self.recipient,
                "created_at": self.created_at,
                "payload": self.payload,
                "block_refs": list(self.block_refs),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Envelope":
        d = json.loads(text)
        return cls(
            id=d["id"],
            sender=d["sender"],
            recipient=d["recipient"],
            created_at=d["created_at"],
            payload=d["payload"],
            block_refs=tuple(d["block_refs"]),
        )


# block store ----------------------------------------------------------------

class BlockStore:
    """Content-addressed file storage under the workspace directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def put(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        path = self.root / digest
        if not path.exists():
            tmp = self.root / f".{digest}.{os.getpid()}.tmp"
            tmp.write_bytes(data)
            tmp.replace(path)  # atomic; concurrent identical puts are idempotent
        return digest

    def get(self, ref: str) -> bytes:
        path = self.root / ref
        if not path.exists():
            raise BlockStoreError(f"no block {ref!r} in store at {self.root}")
        return path.read_bytes()

    def path_of(self, ref: str) -> Path:
        return self.root / ref
