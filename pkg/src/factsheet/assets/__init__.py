"""Bundled plain-text assets: known ordered scales, gazetteers, worker knowledge."""

from functools import lru_cache
from importlib import resources


def _read_lines(relpath: str) -> list[str]:
    root = resources.files(__package__)
    text = (root / relpath).read_text(encoding="utf-8")
    return [line for line in text.splitlines() if line.strip()]


@lru_cache(maxsize=None)
def known_scales() -> dict[str, list[str]]:
    """Ordered value scales used for ordinal detection, keyed by scale name."""
    names = ["letter_grades", "likert", "months", "tshirt_sizes"]
    return {name: _read_lines(f"scales/{name}.txt") for name in names}


@lru_cache(maxsize=None)
def gazetteer(entity_type: str) -> list[str]:
    """Known-value list for an entity type (country, city)."""
    filename = {"country": "countries.txt", "city": "cities.txt"}[entity_type]
    return _read_lines(f"gazetteers/{filename}")


GAZETTEER_TYPES = ("country", "city")


@lru_cache(maxsize=None)
def read_text(relpath: str) -> str:
    root = resources.files(__package__)
    return (root / relpath).read_text(encoding="utf-8")
