"""Expression language: parsing, evaluation and exact mixed partials."""

from .layout import SCOPES, VariableLayout
from .parser import (
    DerivativeRequest,
    Expression,
    constant,
    derivative,
    evaluate,
    parse,
    to_text,
    tokenize,
)

__all__ = [
    "SCOPES",
    "VariableLayout",
    "DerivativeRequest",
    "Expression",
    "constant",
    "derivative",
    "evaluate",
    "parse",
    "to_text",
    "tokenize",
]
