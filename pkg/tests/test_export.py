import xml.etree.ElementTree as ET

import pytest
from hypothesis import given
from hypothesis import strategies as st

from factsheet.charts import Circle, Rect, Text, Wedge, text_width
from factsheet.export import (
    layout_plan,
    sheet_to_pdf,
    sheet_to_svg,
    transform_op,
    wrap_text,
)
from factsheet.pdf import render_pdf
from factsheet.pipeline import generate_sheet, prepare_dataset


@pytest.fixture(scope="module")
def sheet(carsales_bytes, tmp_path_factory):
    from factsheet.agent import BlockStore
    from factsheet.offline import OfflineTransport

    blocks = BlockStore(str(tmp_path_factory.mktemp("blocks")))
    prep = prepare_dataset(carsales_bytes, "CarSales", seed=7)
    return generate_sheet(prep, 7, OfflineTransport(), blocks)


class TestTransformOp:
    def test_rect_scales_and_shifts(self):
        r = transform_op(Rect(10, 20, 30, 40, "#fff"), dx=5, dy=7, s=2)
        assert (r.x, r.y, r.w, r.h) == (25, 47, 60, 80)

    def test_circle(self):
        c = transform_op(Circle(10, 10, 4, "#000"), dx=1, dy=2, s=0.5)
        assert (c.cx, c.cy, c.r) == (6, 7, 2)

    def test_wedge_keeps_angles(self):
        w = Wedge(50, 50, 20, 0.3, 1.1, "#000")
        t = transform_op(w, dx=0, dy=0, s=2)
        assert (t.a0, t.a1) == (0.3, 1.1) and t.r == 40

    def test_text_scales_font(self):
        t = transform_op(Text(0, 0, "hi", 10), dx=3, dy=4, s=0.5)
        assert (t.x, t.y, t.size) == (3, 4, 5)

    def test_unknown_type_raises(self):
        with pytest.raises(TypeError):
            transform_op(object(), 0, 0, 1)


class TestWrapText:
    def test_short_text_single_line(self):
        assert wrap_text("hello world", 10, 400) == ["hello world"]

    def test_empty(self):
        assert wrap_text("", 10, 100) == []

    @given(st.lists(st.text(alphabet="abcdef", min_size=1, max_size=8),
                    min_size=1, max_size=30))
    def test_lines_fit_and_preserve_words(self, words):
        text = " ".join(words)
        lines = wrap_text(text, 9, 120)
        assert " ".join(lines).split() == text.split()
        for line in lines:
            # a line may hold one oversized word, but never an avoidable overflow
            if len(line.split()) > 1:
                assert text_width(line, 9) <= 120 + text_width(line.split()[-1], 9)


class TestSheetSvg:
    def test_parses_with_single_root(self, sheet):
        root = ET.fromstring(sheet_to_svg(sheet))
        assert root.tag.endswith("svg")

    def test_contains_title_and_topics(self, sheet):
        svg = sheet_to_svg(sheet)
        assert sheet.structure.title in svg
        for section in sheet.structure.sections:
            assert section.topic in svg

    def test_byte_stable(self, sheet):
        assert sheet_to_svg(sheet) == sheet_to_svg(sheet)

    def test_plan_covers_every_fact_slot(self, sheet):
        plan = layout_plan(sheet)
        placed = sum(b.fact_count for b in plan.ordered_sections)
        # Introduction contributes one text slot; other sections one per fact
        assert placed == 1 + len(sheet.facts)


class TestSheetPdf:
    def test_magic_and_single_page(self, sheet):
        pdf = sheet_to_pdf(sheet)
        assert pdf.startswith(b"%PDF-1.4")
        assert pdf.count(b"/Type /Page\b") in (0, 1)
        assert pdf.count(b"/Type /Page ") + pdf.count(b"/Type /Page\n") == 1
        assert pdf.rstrip().endswith(b"%%EOF")

    def test_byte_stable(self, sheet):
        assert sheet_to_pdf(sheet) == sheet_to_pdf(sheet)

    def test_no_timestamp_metadata(self, sheet):
        pdf = sheet_to_pdf(sheet)
        assert b"/CreationDate" not in pdf and b"/ID" not in pdf


class TestPdfWriter:
    def test_minimal_ops(self):
        pdf = render_pdf([Rect(0, 0, 10, 10, "#ff0000"),
                          Text(5, 5, "x (y) \\ z", 9)], 100, 50)
        assert b"1 0 0 re" in pdf or b"re" in pdf
        assert b"x \\(y\\) \\\\ z" in pdf

    def test_xref_offsets_valid(self):
        pdf = render_pdf([Circle(10, 10, 5, "#000000")], 40, 40)
        lines = pdf.split(b"\n")
        start = int(lines[lines.index(b"startxref") + 1])
        assert pdf[start:start + 4] == b"xref"
