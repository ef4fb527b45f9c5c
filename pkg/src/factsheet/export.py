"""Sheet rendering: layout geometry plus chart ops, out to SVG or PDF."""

from __future__ import annotations

import dataclasses

from .charts import (
    CHART_HEIGHT,
    CHART_WIDTH,
    Circle,
    Line,
    Polygon,
    Polyline,
    Rect,
    Text,
    Wedge,
    ops_to_svg,
    render,
    text_width,
    truncate_to_width,
)
from .layout import (
    FACT_HEIGHT,
    SECTION_HEADER_HEIGHT,
    LayoutPlan,
    SectionBlock,
    compose_page,
    split_columns,
)
from .pdf import render_pdf
from .sheet import FactSheet

TITLE_BAND = 48
CARD_PAD = 8
CHART_SCALE = 0.5  # 360x180 chart becomes 180x90 inside the 400x180 card


def transform_op(op, dx: float, dy: float, s: float):
    """Uniform scale then translate, applied to one draw op."""
    if isinstance(op, Rect):
        return dataclasses.replace(op, x=op.x * s + dx, y=op.y * s + dy,
                                   w=op.w * s, h=op.h * s)
    if isinstance(op, Line):
        return dataclasses.replace(op, x1=op.x1 * s + dx, y1=op.y1 * s + dy,
                                   x2=op.x2 * s + dx, y2=op.y2 * s + dy,
                                   width=op.width * s)
    if isinstance(op, (Polyline, Polygon)):
        pts = tuple((x * s + dx, y * s + dy) for x, y in op.points)
        if isinstance(op, Polyline):
            return dataclasses.replace(op, points=pts, width=op.width * s)
        return dataclasses.replace(op, points=pts)
    if isinstance(op, Circle):
        return dataclasses.replace(op, cx=op.cx * s + dx, cy=op.cy * s + dy,
                                   r=op.r * s)
    if isinstance(op, Wedge):
        return dataclasses.replace(op, cx=op.cx * s + dx, cy=op.cy * s + dy,
                                   r=op.r * s)
    if isinstance(op, Text):
        return dataclasses.replace(op, x=op.x * s + dx, y=op.y * s + dy,
                                   size=op.size * s)
    raise TypeError(f"unknown draw op {type(op).__name__}")


def wrap_text(s: str, size: float, max_width: float) -> list[str]:
    lines, current = [], ""
    for word in s.split():
        candidate = f"{current} {word}".strip()
        if current and text_width(candidate, size) > max_width:
            lines.append(current)
            current = word
        else:
            current = candidate
    if current:
        lines.append(current)
    return lines


def layout_plan(sheet: FactSheet, mode: str = "exhaustive") -> LayoutPlan:
    blocks = []
    for i, section in enumerate(sheet.structure.sections):
        # the Introduction carries one text slot instead of fact cards
        count = 1 if i == 0 else len(section.fact_ids)
        blocks.append(SectionBlock(section_ref=section.topic, fact_count=count))
    return split_columns(blocks, mode=mode)


def _intro_ops(rect, text):
    ops = []
    width = rect.w - 2 * CARD_PAD
    for i, line in enumerate(wrap_text(text, 10, width)[:9]):
        ops.append(Text(rect.x + CARD_PAD, rect.y + 16 + i * 13, line, size=10,
                        fill="#222222"))
    return ops


def _card_ops(rect, card):
    ops = [Rect(rect.x + 2, rect.y + 2, rect.w - 4, rect.h - 4,
                fill="#ffffff", stroke="#cccccc")]
    rendered = render(card.chart, card.table)
    cdx = rect.x + CARD_PAD
    cdy = rect.y + 6
    for op in rendered.ops:
        ops.append(transform_op(op, cdx, cdy, CHART_SCALE))
    text_top = rect.y + 6 + CHART_HEIGHT * CHART_SCALE + 14
    width = rect.w - 2 * CARD_PAD
    available = int((rect.y + rect.h - 8 - text_top) // 12) + 1
    lines = wrap_text(card.statement, 9, width)
    if len(lines) > available:
        lines = lines[:available]
        lines[-1] = truncate_to_width(lines[-1] + "...", 9, width)
    for i, line in enumerate(lines):
        ops.append(Text(rect.x + CARD_PAD, text_top + i * 12, line, size=9,
                        fill="#222222"))
    return ops


def sheet_ops(sheet: FactSheet, mode: str = "exhaustive"):
    """Draw ops for the whole page; returns (ops, width, height)."""
    plan = layout_plan(sheet, mode)
    geom = compose_page(plan)
    height = TITLE_BAND + geom.height
    ops = [
        Rect(0, 0, geom.width, height, fill="#ffffff"),
        Text(geom.width / 2, 30, sheet.structure.title, size=18,
             fill="#111111", anchor="middle"),
    ]
    facts_by_id = sheet.facts
    for section in sheet.structure.sections:
        rect = geom.sections[section.topic]
        y = rect.y + TITLE_BAND
        ops.append(Rect(rect.x + 2, y + 4, rect.w - 4,
                        SECTION_HEADER_HEIGHT - 8, fill="#eef2f7"))
        ops.append(Text(rect.x + CARD_PAD, y + SECTION_HEADER_HEIGHT - 14,
                        truncate_to_width(section.topic, 12, rect.w - 2 * CARD_PAD),
                        size=12, fill="#111111"))
    for (topic, idx), rect in geom.facts.items():
        shifted = dataclasses.replace(rect, y=rect.y + TITLE_BAND)
        if topic == sheet.structure.sections[0].topic:
            ops.extend(_intro_ops(shifted, sheet.structure.intro_text))
            continue
        section = next(s for s in sheet.structure.sections if s.topic == topic)
        ops.extend(_card_ops(shifted, facts_by_id[section.fact_ids[idx]]))
    return ops, geom.width, height


def sheet_to_svg(sheet: FactSheet, mode: str = "exhaustive") -> str:
    ops, width, height = sheet_ops(sheet, mode)
    return ops_to_svg(ops, width, height)


def sheet_to_pdf(sheet: FactSheet, mode: str = "exhaustive") -> bytes:
    ops, width, height = sheet_ops(sheet, mode)
    return render_pdf(ops, width, height)
