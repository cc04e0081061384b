"""Spec-language frontend: lexer, parser, type checker, pretty printer."""

from . import ast
from .lexer import tokenize
from .parser import parse_expr, parse_formula, parse_spec
from .pretty import expr_text, formula_text, pretty_print
from .typecheck import HornRule, SigInfo, TypedSpec, typecheck

__all__ = [
    "ast",
    "tokenize",
    "parse_spec",
    "parse_formula",
    "parse_expr",
    "pretty_print",
    "formula_text",
    "expr_text",
    "typecheck",
    "TypedSpec",
    "SigInfo",
    "HornRule",
]


def load_spec(text: str) -> TypedSpec:
    """Parse and type-check in one step."""
    return typecheck(parse_spec(text))
