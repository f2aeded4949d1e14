"""predsketch: small-memory sketches answering approximate COUNT queries
with arbitrary conjunctions of equality and range predicates over record
streams."""

from .errors import (
    BudgetTooSmall,
    ConfigError,
    DomainNotPowerOfTwo,
    DuplicateAttribute,
    EmptyQuery,
    EpsilonOutOfRange,
    InvalidEpsilonDelta,
    InvalidSpec,
    InvalidWidth,
    OutOfDomain,
    ParseError,
    PredsketchError,
    QueryParseError,
    RangePredicateUnsupported,
    RuntimeUsageError,
    SchemaMismatch,
    SnapshotFormatError,
    UnknownAttribute,
)
from .hashing import RidHasher, RowHash, derive_seed, new_row_hash
from .intersect import IntersectionResult, multiway_intersect
from .kminwise import INF_THRESHOLD, Cell
from .model import (
    AttributeSpec,
    Equals,
    Estimate,
    InRange,
    Predicate,
    Query,
    Record,
    Schema,
    schema_from_dict,
    schema_to_dict,
    validate_query,
)
from .oracle import RecordStore, kmin_oracle
from .queryfmt import format_query, parse_query
from .ranges import RangeSketch, canonical_cover, merge_views
from .ridlist import RidListSketch
from .sketch import (
    AttributeGrid,
    SampledSketch,
    SampleView,
    SketchParams,
    configure,
    estimate_from_views,
    model_bits,
)
from .snapshot import load as load_snapshot
from .snapshot import save as save_snapshot
from .workload import (
    BenchmarkReport,
    EstimatorHandle,
    Stream,
    StreamSpec,
    Uniform,
    Zipf,
    generate_queries,
    generate_range_queries,
    generate_stream,
    run_benchmark,
)

__version__ = "0.1.0"

__all__ = [
    "AttributeGrid",
    "AttributeSpec",
    "BenchmarkReport",
    "BudgetTooSmall",
    "Cell",
    "ConfigError",
    "DomainNotPowerOfTwo",
    "DuplicateAttribute",
    "EmptyQuery",
    "EpsilonOutOfRange",
    "Equals",
    "Estimate",
    "EstimatorHandle",
    "INF_THRESHOLD",
    "InRange",
    "IntersectionResult",
    "InvalidEpsilonDelta",
    "InvalidSpec",
    "InvalidWidth",
    "OutOfDomain",
    "ParseError",
    "Predicate",
    "PredsketchError",
    "Query",
    "QueryParseError",
    "RangePredicateUnsupported",
    "RangeSketch",
    "Record",
    "RecordStore",
    "RidHasher",
    "RidListSketch",
    "RowHash",
    "RuntimeUsageError",
    "SampledSketch",
    "SampleView",
    "Schema",
    "SchemaMismatch",
    "SketchParams",
    "SnapshotFormatError",
    "Stream",
    "StreamSpec",
    "Uniform",
    "UnknownAttribute",
    "Zipf",
    "canonical_cover",
    "configure",
    "derive_seed",
    "estimate_from_views",
    "format_query",
    "generate_queries",
    "generate_range_queries",
    "generate_stream",
    "kmin_oracle",
    "load_snapshot",
    "merge_views",
    "model_bits",
    "multiway_intersect",
    "new_row_hash",
    "parse_query",
    "run_benchmark",
    "save_snapshot",
    "schema_from_dict",
    "schema_to_dict",
    "validate_query",
]
