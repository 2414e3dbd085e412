"""Access to the JSON schemas shipped with the package."""

from __future__ import annotations

import json
from importlib import resources


def schema_names() -> list:
    """File names of all shipped schemas, e.g. ``clt.schema.json``."""
    root = resources.files("toruslab") / "schemas"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".schema.json"))


def load_schema(name: str) -> dict:
    """Load a schema by file name or short name (``"clt"``)."""
    if not name.endswith(".schema.json"):
        name = f"{name}.schema.json"
    return json.loads((resources.files("toruslab") / "schemas" / name).read_text())
