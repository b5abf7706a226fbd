"""Reference tags attached to every report entry (loaded from package data)."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources


@lru_cache(maxsize=1)
def _table() -> dict:
    return json.loads(resources.files("inflap").joinpath("data/tags.json").read_text())


def tag(name: str) -> str:
    return _table()[name]
