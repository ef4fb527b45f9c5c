"""End-to-end acceptance checks: one test class per contract the package makes.

Each derived value is compared against an oracle computed independently of the
implementation (exhaustive enumeration, sqlite, or sort-and-interpolate math).
"""

import itertools
import json
import math
import random
import statistics
import time

import pytest

from factsheet import layout as layout_mod
from factsheet.agent import (
    BlockStore,
    FixtureMissingError,
    RecordTransport,
    ReplayTransport,
    ScriptedTransport,
    request_digest,
)
from factsheet.anonymize import anonymize_rows, build_map, deanonymize_literals
from factsheet.charts import CHART_TYPES, ChartParams, Wedge, render, validate_params
from factsheet.errors import (
    ExtractionError,
    RevisionConflictError,
    SheetNotFoundError,
    UnsupportedRequestError,
)
from factsheet.ingest import classify_columns, load_csv, profile_column
from factsheet.layout import SectionBlock, split_columns
from factsheet.offline import OfflineTransport
from factsheet.pipeline import (
    add_fact_from_request,
    check_request_supported,
    generate_sheet,
    prepare_dataset,
)
from factsheet.sheet import SheetStore, apply_edit_ops
from factsheet.sqlengine import run as run_sql
from factsheet.workers import MAX_SQL_ATTEMPTS, validate_structure
from factsheet.export import sheet_to_pdf, sheet_to_svg

from test_ingest import brute_quantile
from test_sqlengine import GOLDEN_QUERIES, check_against_sqlite, sqlite_conn


# --- column layout -----------------------------------------------------------

def partition_oracle(scores):
    """Minimum two-way height difference by checking every subset."""
    total = sum(scores)
    return min(abs(2 * sum(c) - total)
               for k in range(len(scores) + 1)
               for c in itertools.combinations(scores, k))


class TestLayoutOptimality:
    def test_best_diff_matches_oracle_on_4000_score_lists(self, monkeypatch):
        # score == fact_count under a unit geometry, so arbitrary score
        # values in 40..1000 can be fed straight through
        monkeypatch.setattr(layout_mod, "SECTION_HEADER_HEIGHT", 0)
        monkeypatch.setattr(layout_mod, "FACT_HEIGHT", 1)
        rng = random.Random(20240817)
        start = time.monotonic()
        for _ in range(4000):
            scores = [rng.randint(40, 1000) for _ in range(rng.randint(1, 6))]
            blocks = [SectionBlock(f"s{i}", s) for i, s in enumerate(scores)]
            plan = split_columns(blocks)
            assert plan.best_diff == partition_oracle(scores)
            assert plan.column_flags[0] is True
        assert time.monotonic() - start < 60

    def test_single_section_is_pinned_left(self):
        plan = split_columns([SectionBlock("only", 2)])
        assert plan.column_flags == (True,)


class TestLayoutDeterminism:
    def test_100_repeated_runs_byte_identical(self):
        blocks = [SectionBlock(f"s{i}", c)
                  for i, c in enumerate([3, 1, 4, 1, 5, 2])]
        first = json.dumps(split_columns(blocks).to_json_dict(),
                           sort_keys=True).encode()
        for _ in range(99):
            again = json.dumps(split_columns(blocks).to_json_dict(),
                               sort_keys=True).encode()
            assert again == first


# --- anonymization -----------------------------------------------------------

def column_ds(values, data_class):
    body = "\n".join(str(v) for v in values)
    ds = load_csv(f"c\n{body}\n".encode(), "t")
    return classify_columns(ds, {"c": data_class})


class TestAnonymizationProperties:
    N_TABLES = 1000

    def test_1000_random_tables(self):
        rng = random.Random(7)
        scale = ("Low", "Medium", "High", "Very High")
        for case in range(self.N_TABLES):
            n = rng.randint(2, 100)
            seed = rng.randrange(2**16)
            kind = case % 4
            if kind == 0:  # discrete: bijective, seeded, order-preserving
                values = [rng.randint(-400, 400) for _ in range(n)]
                ds = column_ds(values, "discrete")
                cmap = build_map(ds, seed).per_column["c"]
                assert cmap == build_map(ds, seed).per_column["c"]
                observed = sorted(set(values))
                mapped = [cmap.forward[v] for v in observed]
                assert len(set(mapped)) == len(mapped)
                assert all(a < b for a, b in
                           itertools.combinations(mapped, 2))
                assert all(cmap.reverse[m] == v
                           for v, m in zip(observed, mapped))
            elif kind == 1:  # nominal: bijective, seeded, fresh tokens
                values = ["".join(rng.choices("abcxyz129", k=rng.randint(1, 8)))
                          for _ in range(n)]
                ds = column_ds(values, "nominal")
                cmap = build_map(ds, seed).per_column["c"]
                assert cmap == build_map(ds, seed).per_column["c"]
                subs = list(cmap.forward.values())
                assert len(set(subs)) == len(subs)
                assert all(cmap.reverse[s] == o
                           for o, s in cmap.forward.items())
            elif kind == 2:  # continuous: every cell stays inside the range
                values = [round(rng.uniform(-1e4, 1e4), 3) for _ in range(n)]
                ds = column_ds(values, "continuous")
                amap = build_map(ds, seed)
                lo, hi = min(values), max(values)
                for (cell,) in anonymize_rows(ds, amap, list(range(n))):
                    assert lo <= cell <= hi
            else:  # ordinal: all pairs keep rank order within the scale
                values = [scale[rng.randrange(len(scale))] for _ in range(n)]
                ds = column_ds(values, "ordinal")
                pool = ds.column("c").ordinal_pool
                rank = {v: i for i, v in enumerate(pool)}
                cmap = build_map(ds, seed).per_column["c"]
                assert cmap == build_map(ds, seed).per_column["c"]
                observed = sorted(set(values), key=rank.get)
                ranks = [rank[cmap.forward[v]] for v in observed]
                assert all(a < b for a, b in itertools.combinations(ranks, 2))
                if set(observed) == set(pool):
                    assert all(k == v for k, v in cmap.forward.items())

    def test_ordinal_pool_equality_forces_identity(self):
        # when every level is observed there is nowhere to move any of them
        ds = column_ds(["A", "B", "C", "D", "F"], "ordinal")
        assert tuple(sorted(ds.column("c").ordinal_pool)) == \
            ("A", "B", "C", "D", "F")
        for seed in range(25):
            cmap = build_map(ds, seed).per_column["c"]
            assert all(k == v for k, v in cmap.forward.items())


# --- column statistics -------------------------------------------------------

class TestColumnStatistics:
    def test_1000_numeric_columns_match_reference(self):
        rng = random.Random(31)
        for _ in range(1000):
            n = rng.randint(1, 60)
            values = [round(rng.uniform(-1e6, 1e6), 6) for _ in range(n)]
            ds = column_ds([repr(v) for v in values], "continuous")
            p = profile_column(ds.column("c"))
            for got, q in ((p.p25, 0.25), (p.median, 0.5), (p.p75, 0.75)):
                want = brute_quantile(values, q)
                assert got == pytest.approx(want, rel=1e-9, abs=1e-9)
            assert p.mean == pytest.approx(statistics.fmean(values),
                                           rel=1e-9, abs=1e-9)
            assert p.min == min(values) and p.max == max(values)

    def test_string_profiles_match_exact_counting(self):
        rng = random.Random(32)
        for _ in range(100):
            values = [rng.choice("abcde") * rng.randint(1, 3)
                      for _ in range(rng.randint(1, 50))]
            ds = column_ds(values, "nominal")
            p = profile_column(ds.column("c"))
            counts = {}
            for v in values:
                counts[v] = counts.get(v, 0) + 1
            assert p.unique_count == len(counts)
            top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:5]
            assert list(p.top_values) == top


# --- SQL engine --------------------------------------------------------------

class TestSqlGoldenSuite:
    def test_has_exactly_50_queries(self):
        assert len(GOLDEN_QUERIES) == 50

    def test_all_queries_match_precomputed_tables(self, movies_prepared):
        ds = movies_prepared.dataset
        conn = sqlite_conn(ds)
        try:
            for sql in GOLDEN_QUERIES:
                check_against_sqlite(sql, ds, conn)
        finally:
            conn.close()


class TestDeanonymizeLiterals:
    def test_rewrite_then_execute_equals_original_200_predicates(
            self, carsales_prepared):
        ds = carsales_prepared.dataset
        amap = carsales_prepared.amap
        rng = random.Random(55)
        brands = sorted(set(ds.column("Brand").non_null()))
        for _ in range(200):
            if rng.random() < 0.5:
                orig = rng.choice(brands)
                sub = amap.per_column["Brand"].forward[orig]
                masked = f"SELECT COUNT(*) AS n FROM CarSales WHERE \"Brand\" = '{sub}'"
                plain = f"SELECT COUNT(*) AS n FROM CarSales WHERE \"Brand\" = '{orig}'"
            else:
                col = rng.choice(["Sale", "Year"])
                orig = rng.choice(sorted(set(ds.column(col).non_null())))
                sub = amap.per_column[col].forward[orig]
                op = rng.choice(["<", "<=", ">", ">=", "="])
                masked = (f'SELECT COUNT(*) AS n FROM CarSales '
                          f'WHERE "{col}" {op} {sub}')
                plain = (f'SELECT COUNT(*) AS n FROM CarSales '
                         f'WHERE "{col}" {op} {orig}')
            rewritten = deanonymize_literals(masked, amap)
            assert run_sql(rewritten, ds).rows == run_sql(plain, ds).rows


# --- chart rendering ---------------------------------------------------------

class TestRendererContracts:
    @pytest.mark.parametrize("chart_type", CHART_TYPES)
    def test_dimension_cap_for_every_type(self, chart_type):
        from factsheet.sqlengine import ResultTable
        table = ResultTable(("a", "b", "c", "d"),
                            ("TEXT", "INTEGER", "TEXT", "TEXT"),
                            (("x", 1, "u", "p"), ("y", 2, "v", "q")))
        params = ChartParams(chart_type, "a", "b", "c", "a", "b", "t",
                             extra_encodings=("d",))
        problems = validate_params(params, table)
        assert any("dimension" in p for p in problems)

    def test_pie_angles_sum_to_full_turn(self):
        from factsheet.sqlengine import ResultTable
        table = ResultTable(("k", "v"), ("TEXT", "REAL"),
                            (("a", 1.25), ("b", 7.5), ("c", 0.125),
                             ("d", 3.875)))
        params = ChartParams("pie", "k", "v", "k", "k", "v", "t")
        chart = render(params, table)
        span = sum(w.a1 - w.a0 for w in chart.ops if isinstance(w, Wedge))
        assert abs(span - 2 * math.pi) < 1e-9

    def test_identical_inputs_identical_svg(self):
        from factsheet.sqlengine import ResultTable
        table = ResultTable(("k", "v"), ("TEXT", "INTEGER"),
                            (("a", 3), ("b", 9)))
        params = ChartParams("bar", "k", "v", None, "k", "v", "t")
        assert render(params, table).svg_text == render(params, table).svg_text


# --- end-to-end replay -------------------------------------------------------

ADD_FACT_REQUEST = "Which brand has the highest total sales?"


def build_edit_steps(sheet):
    """19 deterministic edit operations tailored to a freshly generated sheet."""
    fact_ids = sorted(sheet.facts)
    sections = [s.topic for s in sheet.structure.sections[1:]]
    return [
        {"op": "add_section", "topic": "Scratch"},
        {"op": "rename_section", "topic": "Scratch", "new_topic": "Notes"},
        {"op": "move_section", "topic": "Notes", "index": 1},
        {"op": "edit_text", "target": "title", "text": "Replayed Cars"},
        {"op": "edit_text", "target": "intro", "text": "A tour of the data."},
        {"op": "move_fact", "fact_id": fact_ids[0], "topic": "Notes"},
        {"op": "reorder_fact", "fact_id": fact_ids[0], "index": 0},
        {"op": "move_fact", "fact_id": fact_ids[1], "topic": "Notes"},
        {"op": "edit_text", "target": "statement", "fact_id": fact_ids[0],
         "text": sheet.facts[fact_ids[0]].statement + " Indeed."},
        {"op": "delete_fact", "fact_id": fact_ids[2]},
        {"op": "rename_section", "topic": sections[0],
         "new_topic": f"{sections[0]} (old)"},
        {"op": "move_section", "topic": "Notes",
         "index": len(sheet.structure.sections) - 1},
        {"op": "add_section", "topic": "Parking"},
        {"op": "move_fact", "fact_id": fact_ids[1], "topic": "Parking"},
        {"op": "delete_section", "topic": "Parking"},
        {"op": "add_section", "topic": "Tail", "index": 2},
        {"op": "delete_section", "topic": "Tail"},
        {"op": "reorder_fact", "fact_id": fact_ids[0], "index": 0},
        {"op": "edit_text", "target": "title", "text": "Final Title"},
    ]


@pytest.fixture(scope="module")
def fixtures_dir(carsales_bytes, tmp_path_factory):
    """Record every worker exchange once, so later runs need no generation."""
    fdir = tmp_path_factory.mktemp("fixtures")
    blocks = BlockStore(str(tmp_path_factory.mktemp("rec-blocks")))
    transport = RecordTransport(OfflineTransport(), str(fdir))
    prep = prepare_dataset(carsales_bytes, "CarSales", seed=7)
    sheet = generate_sheet(prep, 7, transport, blocks)
    # placement prompts embed the sheet's current sections, so record the
    # request both on the pristine sheet and after the scripted edits
    add_fact_from_request(sheet, ADD_FACT_REQUEST, prep, transport, blocks)
    edited = generate_sheet(prep, 7, transport, blocks)
    for step in build_edit_steps(edited):
        apply_edit_ops(edited, edited.revision, [step])
    add_fact_from_request(edited, ADD_FACT_REQUEST, prep, transport, blocks)
    return str(fdir)


@pytest.fixture(scope="module")
def replayed(carsales_bytes, fixtures_dir, tmp_path_factory):
    blocks = BlockStore(str(tmp_path_factory.mktemp("rep-blocks")))
    prep = prepare_dataset(carsales_bytes, "CarSales", seed=7)
    start = time.monotonic()
    sheet = generate_sheet(prep, 7, ReplayTransport(fixtures_dir), blocks)
    elapsed = time.monotonic() - start
    return {"sheet": sheet, "blocks": blocks, "prep": prep,
            "elapsed": elapsed}


class TestEndToEndReplay:
    def test_dataset_shape(self, carsales_prepared):
        ds = carsales_prepared.dataset
        assert list(ds.column_names) == ["Brand", "Type", "Sale", "Year"]
        assert ds.row_count == 275

    def test_sheet_has_sections_and_facts(self, replayed):
        sheet = replayed["sheet"]
        topical = [s for s in sheet.structure.sections[1:] if s.fact_ids]
        assert len(topical) >= 2
        assert len(sheet.facts) >= 4

    def test_every_fact_has_chart_block_and_grounded_statement(self, replayed):
        from factsheet.workers import statement_grounded
        for card in replayed["sheet"].facts.values():
            svg = replayed["blocks"].get(card.chart_ref)
            assert svg.lstrip().startswith(b"<svg")
            assert card.statement.strip()
            assert statement_grounded(card.statement, card.table) == []

    def test_exports_byte_stable(self, replayed):
        sheet = replayed["sheet"]
        assert sheet_to_svg(sheet) == sheet_to_svg(sheet)
        assert sheet_to_pdf(sheet) == sheet_to_pdf(sheet)

    def test_runs_under_ten_seconds_with_no_network(self, replayed):
        # ReplayTransport raises on any unrecorded exchange, so a completed
        # run proves nothing left the fixture directory
        assert replayed["elapsed"] < 10


# --- edit-loop integrity -----------------------------------------------------

class TestEditLoopIntegrity:
    def test_20_step_script_preserves_invariants(
            self, carsales_bytes, fixtures_dir, tmp_path):
        blocks = BlockStore(str(tmp_path / "blocks"))
        store = SheetStore(str(tmp_path / "sheets"))
        prep = prepare_dataset(carsales_bytes, "CarSales", seed=7)
        transport = ReplayTransport(fixtures_dir)
        sheet = generate_sheet(prep, 7, transport, blocks)

        steps = build_edit_steps(sheet)
        assert len(steps) == 19

        def check(s):
            assert s.structure.sections[0].topic == "Introduction"
            assert validate_structure(s.structure, set(s.facts)) == []
            store.save(s)
            assert store.load(s.id).to_json_dict() == s.to_json_dict()

        for step in steps:
            apply_edit_ops(sheet, sheet.revision, [step])
            check(sheet)
        # step 20: a natural-language fact request served from fixtures
        before = set(sheet.facts)
        new_id = add_fact_from_request(sheet, ADD_FACT_REQUEST, prep,
                                       transport, blocks)
        assert new_id not in before
        check(sheet)
        assert sheet.revision == 20 + 0  # one bump per step, none skipped


# --- error paths -------------------------------------------------------------

class TestErrorPaths:
    def test_extraction_stops_after_three_attempts(self):
        from test_workers import small_rep
        from factsheet.workers import FactIdea, extract_data
        ds, amap, rep = small_rep()
        bad = '{"sql": "SELECT nope FROM cars"}'
        t = ScriptedTransport(['{"recommendations": []}'] +
                              [bad] * (MAX_SQL_ATTEMPTS + 2))
        idea = FactIdea("f1", "value", "anything", 0.5)
        with pytest.raises(ExtractionError):
            extract_data(idea, rep, None, ds, amap, t)
        assert len(t.prompts) == 1 + MAX_SQL_ATTEMPTS

    def test_missing_fixture_reports_digest(self, tmp_path):
        transport = ReplayTransport(str(tmp_path))
        with pytest.raises(FixtureMissingError) as ei:
            transport.complete("never recorded")
        assert request_digest("never recorded") in str(ei.value)

    def test_unknown_sheet(self, tmp_path):
        with pytest.raises(SheetNotFoundError):
            SheetStore(str(tmp_path)).load("nope")

    def test_revision_conflict(self, replayed):
        sheet = replayed["sheet"]
        with pytest.raises(RevisionConflictError):
            apply_edit_ops(sheet, sheet.revision + 5,
                           [{"op": "add_section", "topic": "X"}])

    def test_forecasting_request_rejected(self):
        with pytest.raises(UnsupportedRequestError):
            check_request_supported("Predict the future sales for 2031")
