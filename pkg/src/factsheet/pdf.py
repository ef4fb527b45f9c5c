"""Single-page vector PDF output for draw-op lists.

Hand-rolled writer: the op vocabulary is tiny (rects, lines, polygons,
circles, wedges, text) and nothing else in the dependency set produces
byte-identical output across runs, which the exports are required to do.
No timestamps, no document ID.
"""

from __future__ import annotations

import math

from .charts import Circle, Line, Polygon, Polyline, Rect, Text, Wedge, text_width

_BEZIER_K = 0.5522847498307936  # circle-from-cubics constant


def _n(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return s if s else "0"


def _rgb(hex_color: str) -> str:
    h = hex_color.lstrip("#")
    r, g, b = (int(h[i:i + 2], 16) / 255.0 for i in (0, 2, 4))
    return f"{_n(r)} {_n(g)} {_n(b)}"


def _esc_text(s: str) -> str:
    out = []
    for ch in s:
        if ch in "()\\":
            out.append("\\" + ch)
        elif ord(ch) < 32 or ord(ch) > 255:
            out.append("?")
        else:
            out.append(ch)
    return "".join(out)


def _arc_beziers(cx, cy, r, a0, a1, flip_y):
    """Cubic segments for a clockwise-from-12 arc, in PDF (y-up) coords."""
    # map the chart angle a to a standard CCW angle in the flipped plane
    phi0, phi1 = math.pi / 2 - a0, math.pi / 2 - a1
    segs = []
    n = max(1, math.ceil(abs(phi1 - phi0) / (math.pi / 2)))
    step = (phi1 - phi0) / n
    for i in range(n):
        f0, f1 = phi0 + i * step, phi0 + (i + 1) * step
        alpha = 4 / 3 * math.tan((f1 - f0) / 4)
        p0 = (cx + r * math.cos(f0), flip_y(cy) + r * math.sin(f0))
        p3 = (cx + r * math.cos(f1), flip_y(cy) + r * math.sin(f1))
        p1 = (p0[0] - alpha * r * math.sin(f0), p0[1] + alpha * r * math.cos(f0))
        p2 = (p3[0] + alpha * r * math.sin(f1), p3[1] - alpha * r * math.cos(f1))
        segs.append((p1, p2, p3))
    return segs


def _ops_to_stream(ops, height: float) -> str:
    def fy(y):
        return height - y

    parts = []
    for op in ops:
        if isinstance(op, Rect):
            cmds = []
            rect = f"{_n(op.x)} {_n(fy(op.y) - op.h)} {_n(op.w)} {_n(op.h)} re"
            if op.fill and op.fill != "none":
                cmds.append(f"{_rgb(op.fill)} rg {rect} f")
            if op.stroke:
                cmds.append(f"{_rgb(op.stroke)} RG 1 w {rect} S")
            parts.extend(cmds)
        elif isinstance(op, Line):
            parts.append(
                f"{_rgb(op.stroke)} RG {_n(op.width)} w "
                f"{_n(op.x1)} {_n(fy(op.y1))} m {_n(op.x2)} {_n(fy(op.y2))} l S"
            )
        elif isinstance(op, Polyline):
            pts = list(op.points)
            path = f"{_n(pts[0][0])} {_n(fy(pts[0][1]))} m " + " ".join(
                f"{_n(x)} {_n(fy(y))} l" for x, y in pts[1:]
            )
            parts.append(f"{_rgb(op.stroke)} RG {_n(op.width)} w {path} S")
        elif isinstance(op, Polygon):
            pts = list(op.points)
            path = f"{_n(pts[0][0])} {_n(fy(pts[0][1]))} m " + " ".join(
                f"{_n(x)} {_n(fy(y))} l" for x, y in pts[1:]
            )
            parts.append(f"{_rgb(op.fill)} rg {path} h f")
        elif isinstance(op, Circle):
            k = _BEZIER_K * op.r
            cx, cy, r = op.cx, fy(op.cy), op.r
            parts.append(
                f"{_rgb(op.fill)} rg "
                f"{_n(cx + r)} {_n(cy)} m "
                f"{_n(cx + r)} {_n(cy + k)} {_n(cx + k)} {_n(cy + r)} {_n(cx)} {_n(cy + r)} c "
                f"{_n(cx - k)} {_n(cy + r)} {_n(cx - r)} {_n(cy + k)} {_n(cx - r)} {_n(cy)} c "
                f"{_n(cx - r)} {_n(cy - k)} {_n(cx - k)} {_n(cy - r)} {_n(cx)} {_n(cy - r)} c "
                f"{_n(cx + k)} {_n(cy - r)} {_n(cx + r)} {_n(cy - k)} {_n(cx + r)} {_n(cy)} c f"
            )
        elif isinstance(op, Wedge):
            start = (
                op.cx + op.r * math.sin(op.a0),
                fy(op.cy) + op.r * math.cos(op.a0),
            )
            path = [
                f"{_n(op.cx)} {_n(fy(op.cy))} m",
                f"{_n(start[0])} {_n(start[1])} l",
            ]
            for p1, p2, p3 in _arc_beziers(op.cx, op.cy, op.r, op.a0, op.a1, fy):
                path.append(
                    f"{_n(p1[0])} {_n(p1[1])} {_n(p2[0])} {_n(p2[1])} "
                    f"{_n(p3[0])} {_n(p3[1])} c"
                )
            parts.append(f"{_rgb(op.fill)} rg " + " ".join(path) + " h f")
        elif isinstance(op, Text):
            x, y = op.x, fy(op.y)
            w = text_width(op.s, op.size)
            if op.anchor == "middle":
                dx = -w / 2
            elif op.anchor == "end":
                dx = -w
            else:
                dx = 0.0
            if op.rotate:
                theta = math.radians(-op.rotate)
                c, s = math.cos(theta), math.sin(theta)
                pos = (
                    f"{_n(c)} {_n(s)} {_n(-s)} {_n(c)} "
                    f"{_n(x + dx * c)} {_n(y + dx * s)} Tm"
                )
            else:
                pos = f"1 0 0 1 {_n(x + dx)} {_n(y)} Tm"
            parts.append(
                f"BT /F1 {_n(op.size)} Tf {_rgb(op.fill)} rg {pos} "
                f"({_esc_text(op.s)}) Tj ET"
            )
        else:
            raise TypeError(f"unknown draw op {type(op).__name__}")
    return "\n".join(parts)


def render_pdf(ops, width: float, height: float) -> bytes:
    """One-page PDF with the ops drawn in chart (y-down) coordinates."""
    stream = _ops_to_stream(ops, height).encode("latin-1")
    objects = [
        b"<< /Type /Catalog /Pages 2 0 R >>",
        b"<< /Type /Pages /Kids [3 0 R] /Count 1 >>",
        (
            f"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 {_n(width)} {_n(height)}] "
            "/Resources << /Font << /F1 4 0 R >> >> /Contents 5 0 R >>"
        ).encode(),
        b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica "
        b"/Encoding /WinAnsiEncoding >>",
        b"<< /Length " + str(len(stream)).encode() + b" >>\nstream\n"
        + stream + b"\nendstream",
    ]
    out = bytearray(b"%PDF-1.4\n")
    offsets = []
    for i, body in enumerate(objects, start=1):
        offsets.append(len(out))
        out += f"{i} 0 obj\n".encode() + body + b"\nendobj\n"
    xref_at = len(out)
    out += b"xref\n0 " + str(len(objects) + 1).encode() + b"\n"
    out += b"0000000000 65535 f \n"
    for off in offsets:
        out += f"{off:010d} 00000 n \n".encode()
    out += (
        b"trailer\n<< /Size " + str(len(objects) + 1).encode()
        + b" /Root 1 0 R >>\nstartxref\n" + str(xref_at).encode() + b"\n%%EOF\n"
    )
    return bytes(out)
