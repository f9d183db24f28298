from ._dnni import (
    Antiderivative,
    ConfigError,
    DomainError,
    Evaluated,
    IoError,
    SchemaError,
    SyntaxError,
    adaptive,
    breakeven,
    case_ids,
    case_truth,
    evaluate,
    galerkin,
    parse_tree,
    simpson13,
    simpson38,
)

__all__ = [
    "Antiderivative",
    "ConfigError",
    "DomainError",
    "Evaluated",
    "IoError",
    "SchemaError",
    "SyntaxError",
    "adaptive",
    "breakeven",
    "case_ids",
    "case_truth",
    "evaluate",
    "galerkin",
    "parse_tree",
    "simpson13",
    "simpson38",
]
