"""Lexing, parsing, and static analysis of generated Python-subset source."""

from .tokens import Token, TokenStream, tokenize, significant_tokens, KEYWORDS
from .parsing import Node, SyntaxTree, parse
from .dataflow import DefUseEdge, DefUseGraph, def_use
from .metrics import (
    CodeMetrics,
    StructureGraph,
    build_structure_graph,
    code_metrics,
    structure_objective,
)

__all__ = [
    "Token",
    "TokenStream",
    "tokenize",
    "significant_tokens",
    "KEYWORDS",
    "Node",
    "SyntaxTree",
    "parse",
    "DefUseEdge",
    "DefUseGraph",
    "def_use",
    "CodeMetrics",
    "StructureGraph",
    "build_structure_graph",
    "code_metrics",
    "structure_objective",
]
