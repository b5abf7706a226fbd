"""Deterministic JSON output and validation against the shipped schemas.

Floats are written with 17 significant digits so that reports round-trip
bit-for-bit; NaN and infinities become null.
"""

from __future__ import annotations

import enum
import json
import math
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator
from referencing import Registry, Resource

SCHEMAS = ("config", "check", "solve", "verify", "serrin", "flow")

__all__ = ["dumps", "write_json", "validate", "plain", "SCHEMAS"]


def plain(obj):
    """Recursively convert numpy scalars/arrays, enums and paths to JSON types."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, enum.Enum):
        return plain(obj.value)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _float(x: float) -> str:
    s = f"{x:.17g}"
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _emit(obj, indent: int, out: list) -> None:
    pad = "  " * indent
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(f"{pad}  {json.dumps(k, ensure_ascii=False)}: ")
            _emit(v, indent + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
        elif all(isinstance(v, (int, float)) or v is None for v in obj):
            out.append("[")
            for i, v in enumerate(obj):
                _emit(v, indent, out)
                if i < len(obj) - 1:
                    out.append(", ")
            out.append("]")
        else:
            out.append("[\n")
            for i, v in enumerate(obj):
                out.append(pad + "  ")
                _emit(v, indent + 1, out)
                out.append(",\n" if i < len(obj) - 1 else "\n")
            out.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    out: list[str] = []
    _emit(plain(obj), 0, out)
    return "".join(out) + "\n"


@lru_cache(maxsize=1)
def _registry() -> Registry:
    root = resources.files("inflap").joinpath("schemas")
    pairs = []
    for name in SCHEMAS:
        doc = json.loads(root.joinpath(f"{name}.schema.json").read_text())
        pairs.append((f"{name}.schema.json", Resource.from_contents(doc)))
    return Registry().with_resources(pairs)


def validate(doc, schema: str) -> None:
    """Raise jsonschema.ValidationError when ``doc`` does not match ``<schema>.schema.json``."""
    reg = _registry()
    contents = reg[f"{schema}.schema.json"].contents
    Draft202012Validator(contents, registry=reg).validate(plain(doc))


def write_json(path, doc, schema: str | None = None) -> None:
    doc = plain(doc)
    if schema is not None:
        validate(doc, schema)
    Path(path).write_text(dumps(doc), encoding="utf-8")
