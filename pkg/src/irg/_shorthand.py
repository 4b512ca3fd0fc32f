"""Parsing of ``name:key=val,...`` shorthands used for kernels and spaces on the command line."""

from __future__ import annotations

import json

from .errors import IRGInputError


def _split_top(text: str) -> list[str]:
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch in "[{":
            depth += 1
        elif ch in "]}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    if cur:
        parts.append(cur)
    return parts


def parse_shorthand(text: str) -> dict:
    """``"name:key=val,key=val"`` or a JSON object -> dict. Values are parsed as JSON."""
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    name, _, rest = text.partition(":")
    d: dict = {"type": name.strip()}
    for item in _split_top(rest):
        key, eq, val = item.partition("=")
        if not eq:
            raise IRGInputError(f"malformed item {item!r} in {text!r}")
        try:
            d[key.strip()] = json.loads(val)
        except json.JSONDecodeError:
            raise IRGInputError(f"cannot parse value {val!r} in {text!r}") from None
    return d
