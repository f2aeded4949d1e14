"""Core value types: records, predicates, queries, estimates, schemas.

Attribute indices are 1-based everywhere; attribute values are unsigned
64-bit integers. Non-integer source data is dictionary-encoded at ingestion
(see cli module), so nothing below this layer sees strings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

from .errors import (
    DomainNotPowerOfTwo,
    DuplicateAttribute,
    EmptyQuery,
    OutOfDomain,
    SchemaMismatch,
    UnknownAttribute,
)

U64_MAX = (1 << 64) - 1

__all__ = [
    "U64_MAX",
    "Record",
    "Equals",
    "InRange",
    "Predicate",
    "Query",
    "Estimate",
    "AttributeSpec",
    "Schema",
    "schema_to_dict",
    "schema_from_dict",
    "validate_query",
]


@dataclass(frozen=True)
class Record:
    """One stream element: a unique rid plus one value per attribute."""

    rid: int
    values: tuple[int, ...]

    def value(self, attribute: int) -> int:
        # attribute is 1-based
        return self.values[attribute - 1]


@dataclass(frozen=True)
class Equals:
    attribute: int
    value: int


@dataclass(frozen=True)
class InRange:
    """Closed interval predicate: lo <= value <= hi."""

    attribute: int
    lo: int
    hi: int


Predicate = Union[Equals, InRange]


@dataclass(frozen=True)
class Query:
    """Conjunction of predicates over distinct attributes.

    Predicates are stored sorted by attribute index so that structurally
    equal queries compare and hash equal regardless of construction order.
    """

    predicates: tuple[Predicate, ...]

    def __init__(self, predicates: Iterable[Predicate]):
        preds = tuple(sorted(predicates, key=lambda p: p.attribute))
        object.__setattr__(self, "predicates", preds)

    @property
    def p(self) -> int:
        return len(self.predicates)

    @property
    def attributes(self) -> tuple[int, ...]:
        return tuple(pred.attribute for pred in self.predicates)

    def has_range(self) -> bool:
        return any(isinstance(pred, InRange) for pred in self.predicates)


@dataclass
class Estimate:
    """Answer to an approximate count query.

    value is the returned estimate. intersection_size and n_max expose the
    ingredients (matched sample size and largest queried cell count) so
    callers can judge the estimate. below_sanity marks estimates whose
    matched sample is too small for the configured error bound to apply;
    fallback_value is the conservative substitute bound for that case.
    """

    value: float
    intersection_size: int
    n_max: int
    below_sanity: bool = False
    sanity_threshold: float = 0.0
    fallback_value: float = 0.0


@dataclass(frozen=True)
class AttributeSpec:
    """Declared shape of one attribute.

    kind is "categorical" (opaque u64 codes, equality only) or "numeric".
    Numeric attributes carry domain_bits: values live in [1, 2**domain_bits].
    range_enabled numeric attributes additionally accept interval predicates.
    """

    name: str
    kind: str = "categorical"
    domain_bits: int | None = None
    range_enabled: bool = False

    def __post_init__(self):
        if self.kind not in ("categorical", "numeric"):
            raise SchemaMismatch(f"unknown attribute kind {self.kind!r}")
        if self.kind == "numeric":
            if self.domain_bits is None:
                raise SchemaMismatch(f"numeric attribute {self.name!r} needs domain_bits")
            if not 1 <= self.domain_bits <= 32:
                raise DomainNotPowerOfTwo(
                    f"attribute {self.name!r}: domain_bits must be in [1, 32], got {self.domain_bits}"
                )
        elif self.range_enabled:
            raise DomainNotPowerOfTwo(
                f"attribute {self.name!r}: range predicates need a numeric power-of-two domain"
            )

    @property
    def domain_size(self) -> int | None:
        return None if self.domain_bits is None else 1 << self.domain_bits


@dataclass(frozen=True)
class Schema:
    """Ordered attribute declarations plus an optional default seed."""

    attributes: tuple[AttributeSpec, ...]
    master_seed: int | None = None
    _by_name: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for i, spec in enumerate(self.attributes):
            self._by_name[spec.name] = i + 1

    @classmethod
    def categorical(cls, attribute_count: int, master_seed: int | None = None) -> "Schema":
        specs = tuple(AttributeSpec(f"a{i}") for i in range(1, attribute_count + 1))
        return cls(specs, master_seed)

    @property
    def attribute_count(self) -> int:
        return len(self.attributes)

    def spec(self, attribute: int) -> AttributeSpec:
        if not 1 <= attribute <= len(self.attributes):
            raise UnknownAttribute(f"attribute index {attribute} not in schema")
        return self.attributes[attribute - 1]

    def index_of(self, name: str) -> int:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownAttribute(f"attribute {name!r} not in schema") from None


def schema_to_dict(schema: Schema) -> dict:
    out = {
        "attributes": [
            {
                "name": spec.name,
                "kind": spec.kind,
                **({"domain_bits": spec.domain_bits} if spec.domain_bits is not None else {}),
                **({"range": True} if spec.range_enabled else {}),
            }
            for spec in schema.attributes
        ]
    }
    if schema.master_seed is not None:
        out["seed"] = schema.master_seed
    return out


def schema_from_dict(data: dict) -> Schema:
    """Inverse of schema_to_dict; also accepts "domain": <power of two>."""
    specs = []
    for i, item in enumerate(data.get("attributes", []), start=1):
        name = item.get("name", f"a{i}")
        kind = item.get("kind", "categorical")
        domain_bits = item.get("domain_bits")
        if domain_bits is None and "domain" in item:
            domain = int(item["domain"])
            if domain < 2 or domain & (domain - 1):
                raise DomainNotPowerOfTwo(
                    f"attribute {name!r}: domain {domain} is not a power of two"
                )
            domain_bits = domain.bit_length() - 1
        specs.append(
            AttributeSpec(
                name=name,
                kind=kind,
                domain_bits=domain_bits,
                range_enabled=bool(item.get("range", False)),
            )
        )
    if not specs:
        raise SchemaMismatch("schema declares no attributes")
    seed = data.get("seed")
    return Schema(tuple(specs), None if seed is None else int(seed))


def validate_query(query: Query, schema: Schema) -> None:
    """Check a query against a schema; raises on the first violation.

    Raises EmptyQuery, DuplicateAttribute, UnknownAttribute, or OutOfDomain.
    Passing validation means every predicate targets a distinct known
    attribute with endpoints inside its declared domain.
    """
    if query.p == 0:
        raise EmptyQuery("query has no predicates")
    seen: set[int] = set()
    for pred in query.predicates:
        if pred.attribute in seen:
            raise DuplicateAttribute(f"attribute {pred.attribute} appears twice")
        seen.add(pred.attribute)
        spec = schema.spec(pred.attribute)
        if isinstance(pred, Equals):
            lo = hi = pred.value
        else:
            lo, hi = pred.lo, pred.hi
            if lo > hi:
                raise OutOfDomain(f"attribute {pred.attribute}: empty range [{lo}, {hi}]")
        if lo < 0 or hi > U64_MAX:
            raise OutOfDomain(f"attribute {pred.attribute}: value outside u64")
        if spec.domain_size is not None and (lo < 1 or hi > spec.domain_size):
            raise OutOfDomain(
                f"attribute {pred.attribute}: [{lo}, {hi}] outside domain [1, {spec.domain_size}]"
            )
