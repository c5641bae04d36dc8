"""Prompt templates are plain text assets with {name} placeholders."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=None)
def load(name: str) -> str:
    return (resources.files("transact") / "prompts" / f"{name}.txt").read_text(encoding="utf-8")
