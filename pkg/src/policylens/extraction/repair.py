"""Best-effort repair of model output that should have been JSON."""

from __future__ import annotations

import json
import re
from typing import Any

_FENCE = re.compile(r"```[A-Za-z0-9_-]*[ \t]*\r?\n?(.*?)```", re.DOTALL)
_TRAILING_COMMA = re.compile(r",(\s*[}\]])")
_PAIRS = {"{": "}", "[": "]"}


def repair_output(raw: str) -> Any | None:
    """Parse ``raw`` as JSON after light repairs; ``None`` when nothing parses.

    Repairs, in order: code fences and surrounding prose are stripped,
    trailing commas removed, unterminated strings and brackets closed.
    """
    if not isinstance(raw, str):
        return None
    text = raw.strip()
    fenced = _FENCE.search(text)
    if fenced:
        text = fenced.group(1).strip()
    else:
        # an opening fence without its closing partner
        text = re.sub(r"^```[A-Za-z0-9_-]*\s*", "", text)
    start = _first_bracket(text)
    if start < 0:
        return None
    text = text[start:]

    decoder = json.JSONDecoder()
    for candidate in _candidates(text):
        try:
            value, _ = decoder.raw_decode(candidate)
        except json.JSONDecodeError:
            continue
        if value is None:
            return None
        return value
    return None


def _first_bracket(text: str) -> int:
    positions = [i for i in (text.find("{"), text.find("[")) if i >= 0]
    return min(positions) if positions else -1


def _candidates(text: str):
    yield text
    no_commas = _TRAILING_COMMA.sub(r"\1", text)
    yield no_commas
    balanced = _balance(no_commas)
    yield balanced
    yield _TRAILING_COMMA.sub(r"\1", balanced)


def _balance(text: str) -> str:
    """Close any string or bracket left open at the end of ``text``."""
    stack: list[str] = []
    in_string = False
    escaped = False
    end = len(text)
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch in _PAIRS:
            stack.append(_PAIRS[ch])
        elif ch in "}]":
            if stack and stack[-1] == ch:
                stack.pop()
                if not stack:
                    end = i + 1
                    break
            else:
                # stray closer: cut here and close what is open
                end = i
                break
    out = text[:end]
    if in_string:
        out += '"'
    out = out.rstrip().rstrip(",")
    return out + "".join(reversed(stack))
