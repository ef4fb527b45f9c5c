"""Parameter-driven rendering of the five chart types to deterministic SVG.

Charts are first lowered to a list of drawing primitives; the SVG backend
lives here and a PDF backend reuses the same primitives at export time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import ChartError
from .sqlengine import ResultTable

CHART_TYPES = ("line", "bar", "scatter", "pie", "area")

CHART_WIDTH = 360
CHART_HEIGHT = 180
MAX_ENCODED_DIMENSIONS = 3
CATEGORY_CAP = 12

PALETTES = {
    "categorical": (
        "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
        "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#1f77b4", "#8c564b",
    ),
    "sequential": (
        "#deebf7", "#c6dbef", "#9ecae1", "#6baed6", "#4292c6", "#2171b5",
        "#08519c", "#08306b",
    ),
}

_NUMERIC = ("INTEGER", "REAL")


@dataclass(frozen=True)
class ChartParams:
    chart_type: str
    x_field: str
    y_field: str
    color_field: Optional[str] = None
    x_label: str = ""
    y_label: str = ""
    title: str = ""
    color_scheme: str = "categorical"
    extra_encodings: tuple = ()  # any further proposed channels; always rejected

    def to_json_dict(self) -> dict:
        return {
            "chart_type": self.chart_type,
            "x_field": self.x_field,
            "y_field": self.y_field,
            "color_field": self.color_field,
            "x_label": self.x_label,
            "y_label": self.y_label,
            "title": self.title,
            "color_scheme": self.color_scheme,
            "extra_encodings": list(self.extra_encodings),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ChartParams":
        return cls(
            chart_type=d["chart_type"],
            x_field=d["x_field"],
            y_field=d["y_field"],
            color_field=d.get("color_field"),
            x_label=d.get("x_label", ""),
            y_label=d.get("y_label", ""),
            title=d.get("title", ""),
            color_scheme=d.get("color_scheme", "categorical"),
            extra_encodings=tuple(d.get("extra_encodings", ())),
        )


# drawing primitives ---------------------------------------------------------

@dataclass(frozen=True)
class Rect:
    x: float; y: float; w: float; h: float
    fill: str
    stroke: Optional[str] = None
    mark: bool = False


@dataclass(frozen=True)
class Line:
    x1: float; y1: float; x2: float; y2: float
    stroke: str
    width: float = 1.0


@dataclass(frozen=True)
class Polyline:
    points: tuple  # ((x, y), ...)
    stroke: str
    width: float = 1.5
    mark: bool = False


@dataclass(frozen=True)
class Polygon:
    points: tuple
    fill: str
    mark: bool = False


@dataclass(frozen=True)
class Circle:
    cx: float; cy: float; r: float
    fill: str
    mark: bool = False


@dataclass(frozen=True)
class Wedge:
    cx: float; cy: float; r: float
    a0: float; a1: float  # radians clockwise from 12 o'clock
    fill: str
    mark: bool = False


@dataclass(frozen=True)
class Text:
    x: float; y: float
    s: str
    size: float = 9.0
    fill: str = "#333333"
    anchor: str = "start"  # start | middle | end
    rotate: float = 0.0


@dataclass(frozen=True)
class RenderedChart:
    svg_text: str
    width: int
    height: int
    params: ChartParams
    ops: tuple


# text metrics: fixed per-size approximation, no font rasterization
CHAR_WIDTH_FACTOR = 0.55


def text_width(s: str, size: float) -> float:
    return len(s) * size * CHAR_WIDTH_FACTOR


def truncate_to_width(s: str, size: float, max_width: float) -> str:
    if text_width(s, size) <= max_width:
        return s
    keep = max(1, int(max_width / (size * CHAR_WIDTH_FACTOR)) - 1)
    return s[:keep] + "…"


# ---------------------------------------------------------------------------

def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    """Tick positions on a 1/2/5 x 10^k grid covering [lo, hi], 4-7 ticks."""
    if lo > hi:
        lo, hi = hi, lo
    if lo == hi:
        if lo == 0:
            return [0.0, 1.0]
        pad = abs(lo) / 2
        lo, hi = lo - pad, lo + pad
    span = hi - lo
    raw_step = span / max(1, target - 1)
    mag = 10 ** math.floor(math.log10(raw_step))
    for mult in (1, 2, 5, 10):
        step = mult * mag
        if span / step <= target + 1:
            break
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t < hi + step / 2:
        # snap near-zero float noise
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


def fmt_num(v: float) -> str:
    if isinstance(v, float) and v == int(v) and abs(v) < 1e15:
        return str(int(v))
    if isinstance(v, float):
        return format(v, ".4g")
    return str(v)


def validate_params(params: ChartParams, table: ResultTable) -> list[str]:
    """Return the full list of compatibility violations (empty means ok)."""
    violations = []
    if params.chart_type not in CHART_TYPES:
        violations.append(
            f"unknown chart type {params.chart_type!r}; supported: {', '.join(CHART_TYPES)}"
        )
        return violations

    cols = {n: t for n, t in zip(table.columns, table.types)}
    dims = 2 + (1 if params.color_field else 0) + len(params.extra_encodings)
    if dims > MAX_ENCODED_DIMENSIONS:
        violations.append(
            f"{dims} encoded dimensions proposed; at most {MAX_ENCODED_DIMENSIONS} are allowed"
        )

    for label, fname in (("x", params.x_field), ("y", params.y_field)):
        if fname not in cols:
            violations.append(f"{label}_field {fname!r} is not a column of the result table")
    if params.color_field and params.color_field not in cols:
        violations.append(f"color_field {params.color_field!r} is not a column of the result table")
    if violations:
        return violations

    xt = cols[params.x_field]
    yt = cols[params.y_field]
    ct = params.chart_type

    if ct in ("line", "area"):
        if xt not in _NUMERIC:
            violations.append(f"{ct} chart needs an ordered numeric x axis; {params.x_field!r} is {xt}")
        if yt not in _NUMERIC:
            violations.append(f"{ct} chart needs a numeric y axis; {params.y_field!r} is {yt}")
    elif ct == "bar":
        if yt not in _NUMERIC:
            violations.append(f"bar chart needs a numeric y axis; {params.y_field!r} is {yt}")
    elif ct == "scatter":
        if xt not in _NUMERIC:
            violations.append(f"scatter needs numeric x; {params.x_field!r} is {xt}")
        if yt not in _NUMERIC:
            violations.append(f"scatter needs numeric y; {params.y_field!r} is {yt}")
    elif ct == "pie":
        if xt in _NUMERIC:
            violations.append(f"pie needs a categorical slice field; {params.x_field!r} is {xt}")
        if yt not in _NUMERIC:
            violations.append(f"pie needs a numeric value field; {params.y_field!r} is {yt}")
        if params.color_field and params.color_field != params.x_field:
            violations.append("pie admits no extra color channel beyond the category itself")
        if yt in _NUMERIC and params.y_field in cols:
            yi = list(table.columns).index(params.y_field)
            if any(r[yi] is not None and r[yi] < 0 for r in table.rows):
                violations.append("pie values must be non-negative")

    if params.color_field and params.color_field not in (params.x_field,):
        if cols[params.color_field] in _NUMERIC:
            violations.append(
                f"color_field {params.color_field!r} must be categorical, got {cols[params.color_field]}"
            )
    if params.color_scheme not in PALETTES:
        violations.append(
            f"unknown color scheme {params.color_scheme!r}; known: {', '.join(sorted(PALETTES))}"
        )
    return violations


# rendering ------------------------------------------------------------------

_MARGIN_L = 42
_MARGIN_R = 10
_MARGIN_T = 20
_MARGIN_B = 26


def _plot_rect():
    x0 = _MARGIN_L
    y0 = _MARGIN_T
    return x0, y0, CHART_WIDTH - _MARGIN_L - _MARGIN_R, CHART_HEIGHT - _MARGIN_T - _MARGIN_B


def _data(table: ResultTable, params: ChartParams):
    xi = list(table.columns).index(params.x_field)
    yi = list(table.columns).index(params.y_field)
    ci = list(table.columns).index(params.color_field) if params.color_field else None
    rows = [
        (r[xi], r[yi], (r[ci] if ci is not None else None))
        for r in table.rows
        if r[xi] is not None and r[yi] is not None
    ]
    return rows


def _frame_and_yaxis(ops, ticks, y_of, title, x_label, y_label):
    x0, y0, w, h = _plot_rect()
    if title:
        ops.append(Text(CHART_WIDTH / 2, 13, truncate_to_width(title, 10, CHART_WIDTH - 8),
                        size=10, anchor="middle", fill="#111111"))
    for t in ticks:
        y = y_of(t)
        ops.append(Line(x0, y, x0 + w, y, stroke="#dddddd", width=0.5))
        ops.append(Text(x0 - 4, y + 3, fmt_num(t), size=8, anchor="end", fill="#555555"))
    ops.append(Line(x0, y0, x0, y0 + h, stroke="#999999"))
    ops.append(Line(x0, y0 + h, x0 + w, y0 + h, stroke="#999999"))
    if x_label:
        ops.append(Text(x0 + w / 2, CHART_HEIGHT - 4, x_label, size=8, anchor="middle"))
    if y_label:
        ops.append(Text(10, y0 + h / 2, y_label, size=8, anchor="middle", rotate=-90))


def _color_for(value, order: list, scheme: str) -> str:
    palette = PALETTES[scheme]
    return palette[order.index(value) % len(palette)]


def _render_bar(params: ChartParams, rows) -> list:
    ops: list = []
    total = len(rows)
    rows = sorted(rows, key=lambda r: -abs(r[1]))[:CATEGORY_CAP]
    truncated = total > CATEGORY_CAP
    x0, y0, w, h = _plot_rect()
    ticks = nice_ticks(min(0, min(r[1] for r in rows)), max(0, max(r[1] for r in rows)))
    lo, hi = ticks[0], ticks[-1]

    def y_of(v):
        return y0 + h - (v - lo) / (hi - lo) * h

    _frame_and_yaxis(ops, ticks, y_of, params.title, params.x_label, params.y_label)
    n = len(rows)
    slot = w / n
    bar_w = slot * 0.7
    color_order = sorted({r[2] for r in rows if r[2] is not None}, key=str)
    for i, (x, y, c) in enumerate(rows):
        bx = x0 + i * slot + (slot - bar_w) / 2
        if c is not None:
            fill = _color_for(c, color_order, params.color_scheme)
        else:
            fill = PALETTES[params.color_scheme][i % len(PALETTES[params.color_scheme])] \
                if params.color_scheme == "categorical" else PALETTES["sequential"][-3]
        top = y_of(max(y, 0))
        ops.append(Rect(bx, top, bar_w, abs(y_of(0) - y_of(y)), fill=fill, mark=True))
        label = truncate_to_width(str(x), 7, slot)
        ops.append(Text(x0 + i * slot + slot / 2, y0 + h + 10, label, size=7, anchor="middle"))
    if truncated:
        ops.append(Text(CHART_WIDTH - _MARGIN_R, 13, f"top {CATEGORY_CAP} of {total}",
                        size=7, anchor="end", fill="#888888"))
    return ops


def _render_line_area(params: ChartParams, rows, area: bool) -> list:
    ops: list = []
    rows = sorted(rows, key=lambda r: r[0])
    x0, y0, w, h = _plot_rect()
    xs = [r[0] for r in rows]
    ys = [r[1] for r in rows]
    xticks = nice_ticks(min(xs), max(xs))
    yticks = nice_ticks(min(0, min(ys)), max(0, max(ys)))
    xlo, xhi = xticks[0], xticks[-1]
    ylo, yhi = yticks[0], yticks[-1]

    def x_of(v):
        return x0 + (v - xlo) / (xhi - xlo) * w

    def y_of(v):
        return y0 + h - (v - ylo) / (yhi - ylo) * h

    _frame_and_yaxis(ops, yticks, y_of, params.title, params.x_label, params.y_label)
    for t in xticks:
        ops.append(Text(x_of(t), y0 + h + 10, fmt_num(t), size=7, anchor="middle"))

    groups: dict = {}
    for x, y, c in rows:
        groups.setdefault(c, []).append((x, y))
    color_order = sorted(groups.keys(), key=str)
    for c in color_order:
        pts = tuple((x_of(x), y_of(y)) for x, y in groups[c])
        color = _color_for(c, color_order, params.color_scheme) if c is not None \
            else PALETTES[params.color_scheme][0]
        if area:
            base = y_of(max(0, ylo))
            poly = pts + ((pts[-1][0], base), (pts[0][0], base))
            ops.append(Polygon(poly, fill=color, mark=True))
        else:
            if len(pts) == 1:
                ops.append(Circle(pts[0][0], pts[0][1], 2.5, fill=color, mark=True))
            else:
                ops.append(Polyline(pts, stroke=color, mark=True))
    return ops


def _render_scatter(params: ChartParams, rows) -> list:
    ops: list = []
    x0, y0, w, h = _plot_rect()
    xs = [r[0] for r in rows]
    ys = [r[1] for r in rows]
    xticks = nice_ticks(min(xs), max(xs))
    yticks = nice_ticks(min(ys), max(ys))
    xlo, xhi = xticks[0], xticks[-1]
    ylo, yhi = yticks[0], yticks[-1]

    def x_of(v):
        return x0 + (v - xlo) / (xhi - xlo) * w

    def y_of(v):
        return y0 + h - (v - ylo) / (yhi - ylo) * h

    _frame_and_yaxis(ops, yticks, y_of, params.title, params.x_label, params.y_label)
    for t in xticks:
        ops.append(Text(x_of(t), y0 + h + 10, fmt_num(t), size=7, anchor="middle"))
    color_order = sorted({r[2] for r in rows if r[2] is not None}, key=str)
    for x, y, c in rows:
        color = _color_for(c, color_order, params.color_scheme) if c is not None \
            else PALETTES[params.color_scheme][0]
        ops.append(Circle(x_of(x), y_of(y), 2.5, fill=color, mark=True))
    return ops


def _render_pie(params: ChartParams, rows) -> list:
    ops: list = []
    total_n = len(rows)
    rows = sorted(rows, key=lambda r: -abs(r[1]))[:CATEGORY_CAP]
    if params.title:
        ops.append(Text(CHART_WIDTH / 2, 13, truncate_to_width(params.title, 10, CHART_WIDTH - 8),
                        size=10, anchor="middle", fill="#111111"))
    if total_n > CATEGORY_CAP:
        ops.append(Text(CHART_WIDTH - _MARGIN_R, 13, f"top {CATEGORY_CAP} of {total_n}",
                        size=7, anchor="end", fill="#888888"))
    total = sum(r[1] for r in rows)
    if total <= 0:
        raise ChartError("pie chart needs a positive value total")
    cx, cy, radius = 110.0, 102.0, 62.0
    angle = 0.0
    palette = PALETTES[params.color_scheme]
    full = 2 * math.pi
    for i, (label, value, _c) in enumerate(rows):
        frac = value / total
        a0 = angle
        a1 = full if i == len(rows) - 1 else angle + frac * full
        ops.append(Wedge(cx, cy, radius, a0, a1, fill=palette[i % len(palette)], mark=True))
        angle = a1
    # legend on the right
    lx = 200
    ly = 40
    for i, (label, value, _c) in enumerate(rows):
        ops.append(Rect(lx, ly + i * 11 - 6, 7, 7, fill=palette[i % len(palette)]))
        pct = 100.0 * rows[i][1] / total
        entry = truncate_to_width(f"{label} ({pct:.1f}%)", 7, CHART_WIDTH - lx - 14)
        ops.append(Text(lx + 10, ly + i * 11, entry, size=7))
    return ops


def render(params: ChartParams, table: ResultTable) -> RenderedChart:
    """Render validated params over a non-empty table; deterministic output."""
    violations = validate_params(params, table)
    if violations:
        raise ChartError("invalid chart parameters: " + "; ".join(violations))
    rows = _data(table, params)
    if not rows:
        raise ChartError("no plottable rows (all x or y values null)")

    if params.chart_type == "bar":
        ops = _render_bar(params, rows)
    elif params.chart_type == "line":
        ops = _render_line_area(params, rows, area=False)
    elif params.chart_type == "area":
        ops = _render_line_area(params, rows, area=True)
    elif params.chart_type == "scatter":
        ops = _render_scatter(params, rows)
    else:
        ops = _render_pie(params, rows)

    svg = ops_to_svg(ops, CHART_WIDTH, CHART_HEIGHT)
    return RenderedChart(svg_text=svg, width=CHART_WIDTH, height=CHART_HEIGHT,
                         params=params, ops=tuple(ops))


# SVG backend ----------------------------------------------------------------

def _n(v: float) -> str:
    s = f"{v:.2f}"
    s = s.rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _esc(s: str) -> str:
    return (
        s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _wedge_path(wd: Wedge) -> str:
    # angles measured clockwise from 12 o'clock
    def pt(a):
        return wd.cx + wd.r * math.sin(a), wd.cy - wd.r * math.cos(a)

    x1, y1 = pt(wd.a0)
    x2, y2 = pt(wd.a1)
    sweep = wd.a1 - wd.a0
    if sweep >= 2 * math.pi - 1e-12:
        # full circle: two half arcs
        xm, ym = pt(wd.a0 + math.pi)
        return (
            f"M {_n(x1)} {_n(y1)} "
            f"A {_n(wd.r)} {_n(wd.r)} 0 0 1 {_n(xm)} {_n(ym)} "
            f"A {_n(wd.r)} {_n(wd.r)} 0 0 1 {_n(x1)} {_n(y1)} Z"
        )
    large = 1 if sweep > math.pi else 0
    return (
        f"M {_n(wd.cx)} {_n(wd.cy)} L {_n(x1)} {_n(y1)} "
        f"A {_n(wd.r)} {_n(wd.r)} 0 {large} 1 {_n(x2)} {_n(y2)} Z"
    )


def op_to_svg(op) -> str:
    mark = ' class="mark"' if getattr(op, "mark", False) else ""
    if isinstance(op, Rect):
        stroke = f' stroke="{op.stroke}"' if op.stroke else ""
        return (f'<rect{mark} x="{_n(op.x)}" y="{_n(op.y)}" width="{_n(op.w)}" '
                f'height="{_n(op.h)}" fill="{op.fill}"{stroke}/>')
    if isinstance(op, Line):
        return (f'<line x1="{_n(op.x1)}" y1="{_n(op.y1)}" x2="{_n(op.x2)}" '
                f'y2="{_n(op.y2)}" stroke="{op.stroke}" stroke-width="{_n(op.width)}"/>')
    if isinstance(op, Polyline):
        pts = " ".join(f"{_n(x)},{_n(y)}" for x, y in op.points)
        return (f'<polyline{mark} points="{pts}" fill="none" stroke="{op.stroke}" '
                f'stroke-width="{_n(op.width)}"/>')
    if isinstance(op, Polygon):
        pts = " ".join(f"{_n(x)},{_n(y)}" for x, y in op.points)
        return f'<polygon{mark} points="{pts}" fill="{op.fill}" fill-opacity="0.8"/>'
    if isinstance(op, Circle):
        return (f'<circle{mark} cx="{_n(op.cx)}" cy="{_n(op.cy)}" r="{_n(op.r)}" '
                f'fill="{op.fill}"/>')
    if isinstance(op, Wedge):
        return f'<path{mark} d="{_wedge_path(op)}" fill="{op.fill}" stroke="#ffffff" stroke-width="0.5"/>'
    if isinstance(op, Text):
        transform = ""
        if op.rotate:
            transform = f' transform="rotate({_n(op.rotate)} {_n(op.x)} {_n(op.y)})"'
        return (f'<text x="{_n(op.x)}" y="{_n(op.y)}" font-size="{_n(op.size)}" '
                f'font-family="Helvetica, sans-serif" fill="{op.fill}" '
                f'text-anchor="{op.anchor}"{transform}>{_esc(op.s)}</text>')
    raise TypeError(f"unknown op {op!r}")


def ops_to_svg(ops, width: int, height: int) -> str:
    body = "\n".join(op_to_svg(op) for op in ops)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>\n'
        f"{body}\n</svg>"
    )
