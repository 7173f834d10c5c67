"""Mini-language front end: AST, parser, resolver, pretty-printer."""

from .ast import (
    CURRENT,
    PRIME,
    SCALAR_TYPES,
    AccessPath,
    Assign,
    Choice,
    ClassDecl,
    Create,
    Expr,
    FnCall,
    Instruction,
    LabelPath,
    Loop,
    ModelQuery,
    OpaqueExpr,
    PathExpr,
    PostAssertion,
    Program,
    QCall,
    RoutineDecl,
    Seq,
    UCall,
    is_primed_label,
    mentioned_paths,
    path_text,
    seq_list,
    seq_of,
)
from .parser import parse_program
from .pretty import pretty_program
from .resolver import ResolvedProgram, resolve

__all__ = [
    "CURRENT",
    "PRIME",
    "SCALAR_TYPES",
    "AccessPath",
    "Assign",
    "Choice",
    "ClassDecl",
    "Create",
    "Expr",
    "FnCall",
    "Instruction",
    "LabelPath",
    "Loop",
    "ModelQuery",
    "OpaqueExpr",
    "PathExpr",
    "PostAssertion",
    "Program",
    "QCall",
    "ResolvedProgram",
    "RoutineDecl",
    "Seq",
    "UCall",
    "is_primed_label",
    "mentioned_paths",
    "parse_program",
    "path_text",
    "pretty_program",
    "resolve",
    "seq_list",
    "seq_of",
]
