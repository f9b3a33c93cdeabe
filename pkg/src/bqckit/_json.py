"""Deterministic JSON writing with 17-significant-digit floats.

Floats are rendered with '%.17g', which round-trips any IEEE-754 double
bit-exactly through the stdlib json parser.  Keys are emitted in insertion
order; callers build dicts deterministically.
"""

from __future__ import annotations

import json
import math


def _render(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if hasattr(obj, "item") and type(obj).__module__ == "numpy":
        obj = obj.item()
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isinf(obj):
            return '"inf"' if obj > 0 else '"-inf"'
        if math.isnan(obj):
            raise ValueError("NaN is not serializable")
        return format(obj, ".17g")
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_render(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = []
        for k, v in obj.items():
            if not isinstance(k, str):
                raise TypeError(f"JSON object keys must be str, got {k!r}")
            items.append(f"{json.dumps(k)}: {_render(v)}")
        return "{" + ", ".join(items) + "}"
    raise TypeError(f"not JSON-serializable: {type(obj).__name__}")


def dumps(obj, indent: int | None = None) -> str:
    """Serialize ``obj``; floats get 17 significant digits."""
    if indent is None:
        return _render(obj)
    # Re-indent the compact rendering through the stdlib round-trip would
    # lose float formatting, so indent structurally here instead.
    return _render_indented(obj, indent, 0)


def _render_indented(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    closing = " " * (indent * level)
    if isinstance(obj, dict) and obj:
        items = ",\n".join(
            f"{pad}{json.dumps(k)}: {_render_indented(v, indent, level + 1)}"
            for k, v in obj.items()
        )
        return "{\n" + items + "\n" + closing + "}"
    if isinstance(obj, (list, tuple)) and len(obj) > 0:
        rendered = [_render_indented(v, indent, level + 1) for v in obj]
        if all(len(r) < 20 and "\n" not in r for r in rendered) and len(obj) <= 16:
            return "[" + ", ".join(rendered) + "]"
        return "[\n" + ",\n".join(pad + r for r in rendered) + "\n" + closing + "]"
    return _render(obj)


def loads(text: str):
    return json.loads(text)
