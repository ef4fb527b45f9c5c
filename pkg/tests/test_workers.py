import json

import pytest

from factsheet.agent import ScriptedTransport
from factsheet.anonymize import build_map
from factsheet.charts import ChartParams
from factsheet.errors import ChartError, ExtractionError, WorkerError
from factsheet.ingest import classify_columns, load_csv
from factsheet.representation import build_representation
from factsheet.sqlengine import ResultTable
from factsheet.workers import (
    FACT_TYPES,
    MAX_SQL_ATTEMPTS,
    FactCard,
    FactIdea,
    Section,
    SheetStructure,
    choose_chart,
    compose_fact_ideas,
    compose_single_fact,
    extract_data,
    fallback_chart,
    organize_sheet,
    statement_grounded,
    template_statement,
    validate_structure,
    write_fact,
)


def small_rep(seed=1):
    csv_text = "Brand,Sale\nAcme,10\nBolt,20\nCore,30\n"
    ds = classify_columns(load_csv(csv_text.encode(), "cars"))
    amap = build_map(ds, seed)
    return ds, amap, build_representation(ds, amap, 2048, seed)


def composer_response(facts):
    return json.dumps({"facts": facts})


def fact(ftype="rank", content="Top brands by sale", sig=0.8):
    return {"fact_type": ftype, "content": content, "significance": sig}


TABLE = ResultTable(("Brand", "total"), ("TEXT", "INTEGER"),
                    (("Acme", 10), ("Bolt", 20)))


class TestComposeIdeas:
    def test_majority_vote_filters_singletons(self):
        _, _, rep = small_rep()
        agreed = fact(content="Total sale by brand")
        responses = [
            composer_response([agreed, fact("value", "only in sample one")]),
            composer_response([agreed]),
            composer_response([agreed, fact("trend", "only in sample three")]),
        ]
        ideas = compose_fact_ideas(rep, None, ScriptedTransport(responses), k=3)
        assert [i.content for i in ideas] == ["Total sale by brand"]

    def test_word_order_does_not_split_votes(self):
        _, _, rep = small_rep()
        responses = [
            composer_response([fact(content="sale by brand total")]),
            composer_response([fact(content="Total sale by brand")]),
            composer_response([fact(content="brand, by total... SALE")]),
        ]
        ideas = compose_fact_ideas(rep, None, ScriptedTransport(responses), k=3)
        assert len(ideas) == 1 and ideas[0].significance == pytest.approx(0.8)

    def test_ids_ordered_by_significance(self):
        _, _, rep = small_rep()
        strong = fact("extreme", "the biggest one", 0.95)
        weak = fact("value", "some small note", 0.2)
        responses = [composer_response([weak, strong])] * 3
        ideas = compose_fact_ideas(rep, None, ScriptedTransport(responses), k=3)
        assert ideas[0].id == "f1" and ideas[0].fact_type == "extreme"
        assert ideas[1].id == "f2"

    def test_unknown_fact_type_dropped(self):
        _, _, rep = small_rep()
        responses = [composer_response([fact("hunch", "not a real type")])] * 3
        with pytest.raises(WorkerError, match="broader or different"):
            compose_fact_ideas(rep, None, ScriptedTransport(responses), k=3)

    def test_n_max_truncates(self):
        _, _, rep = small_rep()
        many = [fact("value", f"note number {i}", 0.5) for i in range(20)]
        responses = [composer_response(many)] * 3
        ideas = compose_fact_ideas(rep, None, ScriptedTransport(responses),
                                   k=3, n_max=5)
        assert len(ideas) == 5

    def test_single_mode_wraps_request(self):
        _, _, rep = small_rep()
        t = ScriptedTransport([composer_response([fact("rank", "top 2 brands")])])
        idea = compose_single_fact("top 2 brands", rep, t, "f9")
        assert idea.id == "f9" and idea.fact_type == "rank"

    def test_single_mode_bad_type_falls_back_to_value(self):
        _, _, rep = small_rep()
        t = ScriptedTransport([composer_response([fact("hunch", "whatever")])])
        assert compose_single_fact("x", rep, t, "f1").fact_type == "value"


class TestExtractData:
    def idea(self):
        return FactIdea("f1", "aggregation", "Total sale by brand", 0.9)

    def run(self, sql_responses):
        ds, amap, rep = small_rep()
        responses = ['{"recommendations": ["keep it simple"]}'] + sql_responses
        t = ScriptedTransport(responses)
        return extract_data(self.idea(), rep, None, ds, amap, t), t

    def test_good_sql_first_try(self):
        (sql, table), _ = self.run(
            ['{"sql": "SELECT Brand, SUM(Sale) AS s FROM cars GROUP BY Brand ORDER BY Brand"}']
        )
        assert table.row_count == 3
        assert "SUM" in sql

    def test_error_feedback_then_success(self):
        (sql, table), t = self.run([
            '{"sql": "SELECT nope FROM cars"}',
            '{"sql": "SELECT Brand, Sale FROM cars ORDER BY Brand"}',
        ])
        assert table.row_count == 3
        assert "the query failed" in t.prompts[2]

    def test_empty_result_triggers_retry(self):
        (sql, table), t = self.run([
            '{"sql": "SELECT Brand, Sale FROM cars WHERE Sale > 99999"}',
            '{"sql": "SELECT Brand, Sale FROM cars ORDER BY Brand"}',
        ])
        assert table.row_count == 3
        assert "returned no rows" in t.prompts[2]

    def test_attempt_bound_enforced(self):
        bad = '{"sql": "SELECT nope FROM cars"}'
        with pytest.raises(ExtractionError) as ei:
            self.run([bad] * MAX_SQL_ATTEMPTS)
        assert f"{MAX_SQL_ATTEMPTS} attempts" in str(ei.value)
        assert ei.value.last_sql is not None

    def test_adviser_failure_is_tolerated(self):
        ds, amap, rep = small_rep()
        t = ScriptedTransport([
            "garbage", "garbage", "garbage",  # adviser burns its repair budget
            '{"sql": "SELECT Brand, Sale FROM cars ORDER BY Brand"}',
        ])
        (sql, table) = extract_data(self.idea(), rep, None, ds, amap, t)
        assert table.row_count == 3


class TestChooseChart:
    def idea(self):
        return FactIdea("f1", "rank", "Top brands", 0.9)

    def test_valid_proposal_accepted(self):
        proposal = json.dumps({
            "chart_type": "bar", "x_field": "Brand", "y_field": "total",
            "x_label": "Brand", "y_label": "Total", "title": "t",
            "color_scheme": "categorical",
        })
        p = choose_chart(self.idea(), TABLE, ScriptedTransport([proposal]))
        assert p.chart_type == "bar" and p.y_field == "total"

    def test_invalid_proposal_repaired_once(self):
        bad = json.dumps({"chart_type": "scatter", "x_field": "Brand",
                          "y_field": "total"})
        good = json.dumps({"chart_type": "bar", "x_field": "Brand",
                           "y_field": "total"})
        t = ScriptedTransport([bad, good])
        p = choose_chart(self.idea(), TABLE, t)
        assert p.chart_type == "bar"
        assert "feedback" in t.prompts[1]

    def test_fallback_on_persistent_bad_proposals(self):
        bad = json.dumps({"chart_type": "mosaic", "x_field": "?", "y_field": "?"})
        p = choose_chart(self.idea(), TABLE, ScriptedTransport([bad, bad]))
        assert p == fallback_chart(self.idea(), TABLE)

    def test_single_column_table_rejected(self):
        one = ResultTable(("n",), ("INTEGER",), ((1,),))
        with pytest.raises(ChartError, match="single column"):
            choose_chart(self.idea(), one, ScriptedTransport([]))

    def test_fallback_prefers_time_axis_line(self):
        t = ResultTable(("Year", "total"), ("INTEGER", "INTEGER"),
                        ((2000, 5), (2001, 6)))
        assert fallback_chart(self.idea(), t).chart_type == "line"


class TestWriteFact:
    def chart(self):
        return ChartParams(chart_type="bar", x_field="Brand", y_field="total",
                           x_label="Brand", y_label="Total", title="t")

    def idea(self):
        return FactIdea("f1", "rank", "Top brands", 0.9)

    def test_grounded_statement_accepted(self):
        doc = json.dumps({"statement": "Bolt leads with 20.",
                          "causal_qas": [{"question": "Why?", "answer": "Scale."}]})
        stmt, qas = write_fact(self.idea(), TABLE, self.chart(),
                               ScriptedTransport([doc]))
        assert stmt == "Bolt leads with 20."
        assert qas == (("Why?", "Scale."),)

    def test_ungrounded_number_repaired(self):
        bad = json.dumps({"statement": "Bolt leads with 9999.", "causal_qas": []})
        good = json.dumps({"statement": "Bolt leads with 20.", "causal_qas": []})
        t = ScriptedTransport([bad, good])
        stmt, _ = write_fact(self.idea(), TABLE, self.chart(), t)
        assert stmt == "Bolt leads with 20."
        assert "9999" in t.prompts[1]

    def test_template_fallback_when_repair_fails(self):
        bad = json.dumps({"statement": "Magic number 12345.", "causal_qas": []})
        stmt, qas = write_fact(self.idea(), TABLE, self.chart(),
                               ScriptedTransport([bad, bad]))
        assert stmt == template_statement(self.chart())
        assert qas == ()

    def test_qa_filtering(self):
        doc = json.dumps({"statement": "Bolt leads with 20.", "causal_qas": [
            {"question": "No question mark", "answer": "x"},
            {"question": "Ok?", "answer": "y " * 80},
            {"question": "Good one?", "answer": "short"},
            {"question": "Second good?", "answer": "also short"},
            {"question": "Third good?", "answer": "dropped by the cap"},
        ]})
        _, qas = write_fact(self.idea(), TABLE, self.chart(),
                            ScriptedTransport([doc]))
        assert [q for q, _ in qas] == ["Good one?", "Second good?"]

    def test_grounding_accepts_rounded_and_comma_forms(self):
        t = ResultTable(("k", "v"), ("TEXT", "REAL"), (("a", 1234.5678),))
        assert statement_grounded("value is 1234.57", t) == []
        assert statement_grounded("value is 1,234.57", t) == []
        assert statement_grounded("value is 1235", t) == []
        assert statement_grounded("value is 1240", t) == ["1240"]


def card(fid, ftype="rank"):
    return FactCard(
        idea=FactIdea(fid, ftype, f"fact {fid}", 0.5),
        sql="SELECT 1", table=TABLE,
        chart=ChartParams("bar", "Brand", "total", None, "b", "t", "t"),
        chart_ref="0" * 64, statement="s 10", causal_qas=(),
    )


class TestValidateStructure:
    def good(self):
        return SheetStructure("T", "intro", (
            Section("Introduction", ()),
            Section("A", ("f1",)),
            Section("B", ("f2",)),
        ))

    def test_good_passes(self):
        assert validate_structure(self.good(), {"f1", "f2"}) == []

    def test_intro_must_be_first(self):
        s = SheetStructure("T", "i", (Section("A", ("f1",)),))
        assert validate_structure(s, {"f1"})

    def test_duplicate_fact_flagged(self):
        s = SheetStructure("T", "i", (
            Section("Introduction", ()), Section("A", ("f1", "f1")),
        ))
        assert any("more than one" in p for p in validate_structure(s, {"f1"}))

    def test_partition_must_be_exact(self):
        assert any("unassigned" in p
                   for p in validate_structure(self.good(), {"f1", "f2", "f3"}))
        assert any("unknown" in p
                   for p in validate_structure(self.good(), {"f1"}))


class TestOrganize:
    def rep(self):
        return small_rep()[2]

    def test_valid_grouping_accepted(self):
        doc = json.dumps({"title": "Cars", "sections": [
            {"topic": "Tops", "fact_ids": ["f1"]},
            {"topic": "Mixes", "fact_ids": ["f2"]},
        ]})
        s = organize_sheet([card("f1"), card("f2")], self.rep(), None,
                           ScriptedTransport([doc]))
        assert [x.topic for x in s.sections] == ["Introduction", "Tops", "Mixes"]
        assert s.intro_text  # synthesized deterministically, not model text

    def test_bad_partition_repaired(self):
        bad = json.dumps({"title": "t", "sections": [
            {"topic": "Tops", "fact_ids": ["f1", "f9"]},
        ]})
        good = json.dumps({"title": "t", "sections": [
            {"topic": "Tops", "fact_ids": ["f1"]},
            {"topic": "Rest", "fact_ids": ["f2"]},
        ]})
        t = ScriptedTransport([bad, good])
        s = organize_sheet([card("f1"), card("f2")], self.rep(), None, t)
        assert len(s.sections) == 3
        assert "feedback" in t.prompts[1]

    def test_fallback_single_findings_section(self):
        bad = json.dumps({"title": "t", "sections": []})
        s = organize_sheet([card("f1"), card("f2")], self.rep(), None,
                           ScriptedTransport([bad, bad]))
        assert [x.topic for x in s.sections] == ["Introduction", "Findings"]
        assert set(s.all_fact_ids()) == {"f1", "f2"}

    def test_no_facts_rejected(self):
        with pytest.raises(WorkerError):
            organize_sheet([], self.rep(), None, ScriptedTransport([]))
