"""Exception types shared across the package.

Grouped by the CLI exit-code class they map to: parse errors (exit 2),
configuration errors (exit 3), and runtime/usage errors (exit 4).
"""

from __future__ import annotations

__all__ = [
    "PredsketchError",
    "ParseError",
    "QueryParseError",
    "ConfigError",
    "InvalidEpsilonDelta",
    "EpsilonOutOfRange",
    "BudgetTooSmall",
    "InvalidWidth",
    "InvalidSpec",
    "DomainNotPowerOfTwo",
    "RuntimeUsageError",
    "EmptyQuery",
    "DuplicateAttribute",
    "OutOfDomain",
    "UnknownAttribute",
    "SchemaMismatch",
    "RangePredicateUnsupported",
    "SnapshotFormatError",
]


class PredsketchError(Exception):
    """Base class for all package errors."""


# -- parse errors (exit code 2) -------------------------------------------

class ParseError(PredsketchError):
    """Malformed external input (CSV rows, spec files, flag values)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class QueryParseError(ParseError):
    """Query string does not match the query grammar."""


# -- configuration errors (exit code 3) ------------------------------------

class ConfigError(PredsketchError):
    """Parameters outside the supported configuration space."""


class InvalidEpsilonDelta(ConfigError):
    """epsilon or delta outside (0, 1)."""


class EpsilonOutOfRange(ConfigError):
    """epsilon >= 0.25, where the sampled-sketch guarantees do not hold."""


class BudgetTooSmall(ConfigError):
    """Memory budget cannot hold even a capacity-1 sample per cell."""


class InvalidWidth(ConfigError):
    """Hash row width must be at least 1."""


class InvalidSpec(ConfigError):
    """Stream specification with invalid sizes, domains, or skew."""


class DomainNotPowerOfTwo(ConfigError):
    """Range-enabled attribute declared with a non power-of-two domain."""


# -- runtime/usage errors (exit code 4) -------------------------------------

class RuntimeUsageError(PredsketchError):
    """Structurally valid input used against the wrong schema or state."""


class EmptyQuery(RuntimeUsageError):
    """Query with no predicates."""


class DuplicateAttribute(RuntimeUsageError):
    """Query references the same attribute in more than one predicate."""


class OutOfDomain(RuntimeUsageError):
    """Value or range endpoints outside the attribute's declared domain."""


class UnknownAttribute(RuntimeUsageError):
    """Attribute name or index not present in the schema."""


class SchemaMismatch(RuntimeUsageError):
    """Record arity or snapshot schema does not match the sketch."""


class RangePredicateUnsupported(RuntimeUsageError):
    """Range predicate sent to a structure that only answers equality."""


class SnapshotFormatError(RuntimeUsageError):
    """Snapshot bytes are not a readable sketch dump."""
