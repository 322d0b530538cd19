"""Locations of the bundled fixtures and JSON schemas."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def _root() -> Path:
    return Path(str(resources.files("partsforge")))


def fixture_path(name: str) -> Path:
    return _root() / "fixtures" / name


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text()


def fixture_names(suffix: str = ".tir") -> list:
    return sorted(p.name for p in (_root() / "fixtures").iterdir() if p.name.endswith(suffix))


def schema_path(name: str) -> Path:
    return _root() / "schemas" / name
