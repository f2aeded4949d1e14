"""Textual query format: `a3=17 AND a1 IN [4,99] AND a5=2`.

Clauses are joined by AND (case-insensitive). An equality clause is
`<attr>=<value>`; an interval clause is `<attr> IN [lo,hi]`. Attributes are
schema names when a schema is given, with the positional form aN (1-based)
always accepted as a fallback. Values must be unsigned integers unless a
resolve_value callback translates dictionary-encoded tokens.
"""

from __future__ import annotations

import re
from typing import Callable

from .errors import QueryParseError, UnknownAttribute
from .model import Equals, InRange, Predicate, Query, Schema

__all__ = ["parse_query", "format_query"]

_AND_SPLIT = re.compile(r"\s+AND\s+", re.IGNORECASE)
_EQ = re.compile(r"^\s*([A-Za-z_]\w*)\s*=\s*(\S+)\s*$")
_RANGE = re.compile(
    r"^\s*([A-Za-z_]\w*)\s+IN\s+\[\s*([^\s,\]]+)\s*,\s*([^\s,\]]+)\s*\]\s*$",
    re.IGNORECASE,
)
_POSITIONAL = re.compile(r"^a(\d+)$")


def _attr_index(token: str, schema: Schema | None) -> int:
    if schema is not None:
        try:
            return schema.index_of(token)
        except UnknownAttribute:
            pass
    m = _POSITIONAL.match(token)
    if m:
        index = int(m.group(1))
        if index >= 1:
            return index
    raise UnknownAttribute(f"attribute {token!r} not in schema")


def _value(token: str, attribute: int, resolve_value: Callable[[int, str], int] | None) -> int:
    if token.isdigit():
        return int(token)
    if resolve_value is not None:
        return resolve_value(attribute, token)
    raise QueryParseError(f"value {token!r} is not an unsigned integer")


def parse_query(
    text: str,
    schema: Schema | None = None,
    resolve_value: Callable[[int, str], int] | None = None,
) -> Query:
    if not text or not text.strip():
        raise QueryParseError("empty query string")
    predicates: list[Predicate] = []
    for clause in _AND_SPLIT.split(text.strip()):
        m = _RANGE.match(clause)
        if m:
            attr = _attr_index(m.group(1), schema)
            lo = _value(m.group(2), attr, resolve_value)
            hi = _value(m.group(3), attr, resolve_value)
            predicates.append(InRange(attr, lo, hi))
            continue
        m = _EQ.match(clause)
        if m:
            attr = _attr_index(m.group(1), schema)
            predicates.append(Equals(attr, _value(m.group(2), attr, resolve_value)))
            continue
        raise QueryParseError(f"cannot parse clause {clause!r}")
    return Query(predicates)


def format_query(query: Query, schema: Schema | None = None) -> str:
    """Canonical text form; parse_query(format_query(q)) == q."""
    parts = []
    for pred in query.predicates:
        name = (
            schema.attributes[pred.attribute - 1].name
            if schema is not None and pred.attribute <= len(schema.attributes)
            else f"a{pred.attribute}"
        )
        if isinstance(pred, Equals):
            parts.append(f"{name}={pred.value}")
        else:
            parts.append(f"{name} IN [{pred.lo},{pred.hi}]")
    return " AND ".join(parts)
