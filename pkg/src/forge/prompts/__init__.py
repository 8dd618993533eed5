"""Versioned prompt templates shipped with the engine.

Templates are plain-text files using ``string.Template`` placeholders, so
JSON braces inside instructions need no escaping.  Editing a template does
not require touching engine code.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from string import Template

PROMPT_VERSION = "1"


@lru_cache(maxsize=None)
def _load(name: str) -> Template:
    text = resources.files(__package__).joinpath(f"{name}.txt").read_text("utf-8")
    return Template(text)


def render_prompt(name: str, **values: str) -> str:
    return _load(name).substitute(**values)
