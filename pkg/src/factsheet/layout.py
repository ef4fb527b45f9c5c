"""Two-column section layout: balanced split search and page geometry.

Section heights are fixed-formula: header height plus a fixed height per
fact. The split search enumerates, for the first-pinned section order,
every subset assignment of the remaining sections to the left column and
keeps the minimum absolute column-height difference. Subsets are visited
by increasing size, then lexicographically, and the first optimum wins,
which makes the result unique and deterministic.

Enumerating section permutations as well cannot change the optimum or the
first optimum found (column sums depend only on the chosen subset of
sections, not their order), so the search fixes the incoming order and
reports it back as the display order.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .errors import LayoutError

SECTION_HEADER_HEIGHT = 40
FACT_HEIGHT = 180
PAGE_WIDTH = 800
COLUMN_WIDTH = PAGE_WIDTH // 2
FACT_CARD_WIDTH = 400
EXHAUSTIVE_LIMIT = 8


@dataclass(frozen=True)
class SectionBlock:
    section_ref: str
    fact_count: int

    @property
    def score(self) -> int:
        return calculate_score(self)


def calculate_score(block: SectionBlock) -> int:
    if block.fact_count < 0:
        raise LayoutError(f"negative fact count for section {block.section_ref!r}")
    return SECTION_HEADER_HEIGHT + block.fact_count * FACT_HEIGHT


@dataclass(frozen=True)
class LayoutPlan:
    ordered_sections: tuple  # SectionBlock, first is the pinned lead section
    column_flags: tuple  # bool per section; True = left column
    best_diff: int

    def to_json_dict(self) -> dict:
        return {
            "sections": [
                {"section_ref": b.section_ref, "fact_count": b.fact_count, "score": b.score}
                for b in self.ordered_sections
            ],
            "column_flags": list(self.column_flags),
            "best_diff": self.best_diff,
        }


def split_columns(sections: list[SectionBlock], mode: str = "exhaustive") -> LayoutPlan:
    """Assign sections to two columns minimizing the height difference.

    The first section is pinned to the left column. ``mode`` is
    ``exhaustive`` (subset search, up to 8 sections, greedy beyond) or
    ``greedy`` (order-preserving shorter-column assignment).
    """
    if not sections:
        raise LayoutError("cannot lay out an empty section list")
    scores = [calculate_score(b) for b in sections]
    n = len(sections)

    if mode not in ("exhaustive", "greedy"):
        raise LayoutError(f"unknown layout mode {mode!r}")

    if mode == "greedy" or n > EXHAUSTIVE_LIMIT:
        flags = [True]
        left, right = scores[0], 0
        for i in range(1, n):
            if left <= right:
                flags.append(True)
                left += scores[i]
            else:
                flags.append(False)
                right += scores[i]
        return LayoutPlan(tuple(sections), tuple(flags), abs(left - right))

    total = sum(scores)
    best_diff = None
    best_comb: tuple = ()
    for size in range(0, n):
        for comb in combinations(range(1, n), size):
            left = scores[0] + sum(scores[i] for i in comb)
            diff = abs(2 * left - total)
            if best_diff is None or diff < best_diff:
                best_diff = diff
                best_comb = comb
    chosen = set(best_comb)
    flags = tuple(i == 0 or i in chosen for i in range(n))
    return LayoutPlan(tuple(sections), flags, best_diff)


@dataclass(frozen=True)
class RectGeom:
    x: float
    y: float
    w: float
    h: float


@dataclass(frozen=True)
class PageGeometry:
    width: int
    height: int
    sections: dict  # section_ref -> RectGeom
    facts: dict  # (section_ref, index-within-section) -> RectGeom


def compose_page(plan: LayoutPlan) -> PageGeometry:
    """Absolute rectangles for sections and fact slots, columns stacked."""
    x_for = {True: 0, False: PAGE_WIDTH // 2}
    y_cursor = {True: 0.0, False: 0.0}
    sections = {}
    facts = {}
    for block, is_left in zip(plan.ordered_sections, plan.column_flags):
        x = x_for[is_left]
        y = y_cursor[is_left]
        h = block.score
        sections[block.section_ref] = RectGeom(x, y, COLUMN_WIDTH, h)
        for i in range(block.fact_count):
            facts[(block.section_ref, i)] = RectGeom(
                x, y + SECTION_HEADER_HEIGHT + i * FACT_HEIGHT, FACT_CARD_WIDTH, FACT_HEIGHT
            )
        y_cursor[is_left] = y + h
    height = int(max(y_cursor[True], y_cursor[False]))
    return PageGeometry(width=PAGE_WIDTH, height=height, sections=sections, facts=facts)
