import hashlib
import json

import pytest

from factsheet.agent import (
    BlockStore,
    Envelope,
    FieldSpec,
    RecordTransport,
    ReplayTransport,
    RunLog,
    ScriptedTransport,
    WorkerProfile,
    extract_json,
    invoke,
    render_prompt,
    request_digest,
    validate_payload,
)
from factsheet.errors import (
    BlockStoreError,
    FixtureMissingError,
    SchemaValidationError,
    WorkerError,
)
from factsheet.profiles import load_profile


def tiny_profile():
    return WorkerProfile(
        name="echo-tester",
        overall_goal="answer test prompts",
        specific_role="repeat structured input",
        persona="terse test harness",
        input_schema=(FieldSpec("text", "string", "the words", True),),
        output_schema=(FieldSpec("reply", "string", "the answer", True),),
        few_shot_examples=(({"text": "hi"}, {"reply": "hi"}),),
        knowledge=(),
        instructions=("Reply with JSON.",),
    )


class TestValidatePayload:
    schema = (
        FieldSpec("a", "string", "", True),
        FieldSpec("b", "number", "", True),
        FieldSpec("c", "array", "", False),
    )

    def test_ok(self):
        assert validate_payload({"a": "x", "b": 1.5, "c": []}, self.schema) == []

    def test_missing_required(self):
        assert validate_payload({"b": 2}, self.schema)

    def test_wrong_type(self):
        assert validate_payload({"a": 3, "b": 2}, self.schema)

    def test_optional_absent_ok(self):
        assert validate_payload({"a": "x", "b": 0}, self.schema) == []

    def test_none_counts_as_absent(self):
        assert validate_payload({"a": None, "b": 1}, self.schema)
        assert validate_payload({"a": "x", "b": 1, "c": None}, self.schema) == []

    def test_extra_fields_allowed(self):
        assert validate_payload({"a": "x", "b": 1, "zz": 9}, self.schema) == []


class TestPrompt:
    def test_sections_present(self):
        prompt = render_prompt(tiny_profile(), {"text": "hello"})
        for header in ("# Overall goal", "# Your role: echo-tester", "# Persona",
                       "# Instructions", "# Examples", "# Output format", "# Input"):
            assert header in prompt
        assert '"text": "hello"' in prompt

    def test_deterministic_under_key_order(self):
        a = render_prompt(tiny_profile(), {"text": "x", "extra": 1})
        b = render_prompt(tiny_profile(), {"extra": 1, "text": "x"})
        assert a == b

    def test_digest_is_sha256(self):
        prompt = "abc"
        assert request_digest(prompt) == hashlib.sha256(b"abc").hexdigest()

    def test_real_profiles_render(self):
        fillers = {"string": "x", "integer": 1, "number": 1.0,
                   "boolean": True, "array": [], "object": {}}
        for name in ("fact-idea-composer", "data-extractor-adviser",
                     "data-extractor", "data-visualizer", "fact-writer",
                     "factsheet-organizer"):
            profile = load_profile(name)
            payload = {f.name: fillers[f.type] for f in profile.input_schema
                       if f.required}
            prompt = render_prompt(profile, payload)
            assert f"# Your role: {name}" in prompt


class TestExtractJson:
    def test_fenced_block(self):
        assert extract_json('before\n```json\n{"a": 1}\n```\nafter') == {"a": 1}

    def test_bare_json(self):
        assert extract_json('  {"a": [1, 2]} ') == {"a": [1, 2]}

    def test_garbage_raises(self):
        with pytest.raises(WorkerError):
            extract_json("no json here")


class TestInvoke:
    def test_happy_path(self):
        t = ScriptedTransport(['{"reply": "ok"}'])
        assert invoke(tiny_profile(), {"text": "x"}, t) == {"reply": "ok"}

    def test_repairs_bad_json_once(self):
        t = ScriptedTransport(["not json at all", '{"reply": "fixed"}'])
        out = invoke(tiny_profile(), {"text": "x"}, t)
        assert out == {"reply": "fixed"}
        assert "# Repair" in t.prompts[1]

    def test_repairs_schema_violation(self):
        t = ScriptedTransport(['{"wrong": 1}', '{"reply": "r"}'])
        assert invoke(tiny_profile(), {"text": "x"}, t)["reply"] == "r"

    def test_gives_up_after_budget(self):
        t = ScriptedTransport(["junk", "junk", "junk", "junk"])
        with pytest.raises(WorkerError) as ei:
            invoke(tiny_profile(), {"text": "x"}, t)
        assert ei.value.raw_text == "junk"
        assert len(t.prompts) == 3  # first try + 2 repairs

    def test_invalid_payload_rejected_before_any_call(self):
        t = ScriptedTransport([])
        with pytest.raises(SchemaValidationError):
            invoke(tiny_profile(), {"nope": 1}, t)
        assert t.prompts == []

    def test_run_log_records(self, tmp_path):
        log_path = tmp_path / "runs.jsonl"
        log = RunLog(log_path)
        t = ScriptedTransport(["junk", '{"reply": "r"}'])
        invoke(tiny_profile(), {"text": "x"}, t, log)
        entries = [json.loads(l) for l in log_path.read_text().splitlines()]
        assert entries[0]["worker"] == "echo-tester"
        assert entries[0]["repair_count"] == 1


class TestFixtures:
    def test_record_then_replay(self, tmp_path):
        rec = RecordTransport(ScriptedTransport(['{"reply": "a"}']), tmp_path)
        prompt = render_prompt(tiny_profile(), {"text": "q"})
        first = rec.complete(prompt)
        replay = ReplayTransport(tmp_path)
        assert replay.complete(prompt) == first

    def test_record_reuses_existing_fixture(self, tmp_path):
        inner = ScriptedTransport(['{"reply": "a"}'])
        rec = RecordTransport(inner, tmp_path)
        assert rec.complete("same prompt") == rec.complete("same prompt")
        assert len(inner.prompts) == 1

    def test_missing_fixture_names_digest(self, tmp_path):
        replay = ReplayTransport(tmp_path)
        with pytest.raises(FixtureMissingError) as ei:
            replay.complete("never recorded")
        assert request_digest("never recorded") in str(ei.value)


class TestBlockStore:
    def test_put_get_roundtrip(self, tmp_path):
        store = BlockStore(tmp_path)
        ref = store.put(b"payload")
        assert store.get(ref) == b"payload"
        assert ref == hashlib.sha256(b"payload").hexdigest()

    def test_put_is_idempotent(self, tmp_path):
        store = BlockStore(tmp_path)
        assert store.put(b"x") == store.put(b"x")

    def test_get_unknown_raises(self, tmp_path):
        with pytest.raises(BlockStoreError):
            BlockStore(tmp_path).get("0" * 64)


class TestEnvelope:
    def test_roundtrip(self):
        env = Envelope.create("composer", "extractor", {"k": 1}, ("ref1",))
        again = Envelope.from_json(env.to_json())
        assert again == env

    def test_unique_ids(self):
        a = Envelope.create("x", "y", {})
        b = Envelope.create("x", "y", {})
        assert a.id != b.id
