"""Recursive-descent parser for `.mol` sources.

The grammar is documented in docs/grammar.md.  Parsing produces raw trees:
paths keep their first segment as the root verbatim; the resolver decides
later whether that segment is a local, a formal, or a class attribute.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from ..errors import ParseError
from .ast import (
    AccessPath,
    Assign,
    Choice,
    ClassDecl,
    Create,
    Expr,
    FnCall,
    Instruction,
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
    seq_of,
)

KEYWORDS = frozenset(
    {
        "class", "inherit", "redefine", "feature", "model", "do", "end",
        "create", "then", "else", "loop", "call", "ensure", "modify",
        "old", "Current", "Void",
    }
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>\d+)
  | (?P<op>:=|->|/=|<=|>=|[:;,.()=<>+\-*/&])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # 'name', 'int', 'op', 'kw', 'eof'
    value: str
    line: int
    col: int
    start: int
    end: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "ws":
            nl = text.count("\n")
            if nl:
                line += nl
                line_start = pos + text.rfind("\n") + 1
        elif kind == "comment":
            pass
        elif kind == "name":
            tkind = "kw" if text in KEYWORDS else "name"
            tokens.append(Token(tkind, text, line, col, pos, m.end()))
        else:
            tokens.append(Token(kind, text, line, col, pos, m.end()))
        pos = m.end()
    tokens.append(Token("eof", "", line, n - line_start + 1, n, n))
    return tokens


# Expression trees stay internal to the parser; they are squashed into
# PathExpr / FnCall / OpaqueExpr before they reach the AST.
_EPath = tuple  # ('path', (segs,)) | ('call', prefix, name, args) | ('old', e)
#                ('int', text) | ('void',) | ('binop', op, l, r)


class Parser:
    def __init__(self, source: str) -> None:
        self.source = source
        self.tokens = tokenize(source)
        self.i = 0

    # -- token helpers ----------------------------------------------------

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def peek(self, offset: int = 1) -> Token:
        j = min(self.i + offset, len(self.tokens) - 1)
        return self.tokens[j]

    def advance(self) -> Token:
        tok = self.cur
        if tok.kind != "eof":
            self.i += 1
        return tok

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.cur
        return ParseError(message, tok.line, tok.col)

    def at_kw(self, word: str) -> bool:
        return self.cur.kind == "kw" and self.cur.value == word

    def at_op(self, op: str) -> bool:
        return self.cur.kind == "op" and self.cur.value == op

    def expect_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            raise self.error(f"expected '{word}', found {self.cur.value!r}")
        return self.advance()

    def expect_op(self, op: str) -> Token:
        if not self.at_op(op):
            raise self.error(f"expected '{op}', found {self.cur.value!r}")
        return self.advance()

    def expect_name(self, what: str = "identifier") -> Token:
        if self.cur.kind != "name":
            raise self.error(f"expected {what}, found {self.cur.value!r}")
        return self.advance()

    # -- program ----------------------------------------------------------

    def parse_program(self) -> Program:
        classes = []
        while not self.cur.kind == "eof":
            classes.append(self.parse_class())
        return Program(tuple(classes))

    def parse_class(self) -> ClassDecl:
        start = self.expect_kw("class")
        name = self.expect_name("class name").value
        parent = None
        redefine_names: tuple[str, ...] = ()
        if self.at_kw("inherit"):
            self.advance()
            parent = self.expect_name("parent class name").value
            if self.at_kw("redefine"):
                self.advance()
                redefine_names = tuple(self.parse_name_list())
                self.expect_kw("end")
        attributes: list[tuple[str, str]] = []
        models: list[ModelQuery] = []
        routines: list[RoutineDecl] = []
        if self.at_kw("feature"):
            self.advance()
            while not self.at_kw("end"):
                self.parse_feature(attributes, models, routines)
        self.expect_kw("end")
        return ClassDecl(
            name=name,
            parent=parent,
            redefine_names=redefine_names,
            attributes=tuple(attributes),
            model_queries=tuple(models),
            routines=tuple(routines),
            pos=(start.line, start.col),
        )

    def parse_name_list(self) -> list[str]:
        names = [self.expect_name().value]
        while self.at_op(","):
            self.advance()
            names.append(self.expect_name().value)
        return names

    def parse_feature(self, attributes, models, routines) -> None:
        if self.at_kw("model"):
            self.advance()
            qname = self.expect_name("model query name").value
            self.expect_op("->")
            backing = tuple(self.parse_name_list())
            models.append(ModelQuery(qname, backing))
            return
        if self.cur.kind != "name":
            raise self.error(f"expected feature declaration, found {self.cur.value!r}")
        # Routines always carry a parenthesized formal list; a name followed
        # by anything else starts an attribute declaration group.
        if self.peek().kind == "op" and self.peek().value == "(":
            routines.append(self.parse_routine())
        else:
            names = self.parse_name_list()
            self.expect_op(":")
            type_name = self.expect_name("type name").value
            attributes.extend((n, type_name) for n in names)

    def parse_routine(self) -> RoutineDecl:
        start = self.expect_name("routine name")
        name = start.value
        self.expect_op("(")
        formals: list[tuple[str, str]] = []
        if not self.at_op(")"):
            while True:
                group = self.parse_name_list()
                self.expect_op(":")
                type_name = self.expect_name("type name").value
                formals.extend((n, type_name) for n in group)
                if self.at_op(";"):
                    self.advance()
                    continue
                break
        self.expect_op(")")
        is_function = False
        result_type = None
        if self.at_op(":"):
            self.advance()
            is_function = True
            result_type = self.expect_name("result type").value
        modify_clause = None
        if self.at_kw("modify"):
            self.advance()
            modify_clause = tuple(self.parse_name_list())
        locals_: list[tuple[str, str]] = []
        while self.cur.kind == "name":
            group = self.parse_name_list()
            self.expect_op(":")
            type_name = self.expect_name("type name").value
            locals_.extend((n, type_name) for n in group)
        self.expect_kw("do")
        body = self.parse_instructions(stop={"end", "ensure"})
        ensure_clause = None
        if self.at_kw("ensure"):
            self.advance()
            ensure_clause = tuple(self.parse_assertions())
        self.expect_kw("end")
        return RoutineDecl(
            name=name,
            formals=tuple(formals),
            locals_=tuple(locals_),
            body=body,
            is_function=is_function,
            result_type=result_type,
            modify_clause=modify_clause,
            ensure_clause=ensure_clause,
            pos=(start.line, start.col),
        )

    # -- instructions -----------------------------------------------------

    def parse_instructions(self, stop: set[str]) -> Optional[Instruction]:
        instrs: list[Instruction] = []
        while True:
            if self.at_op(";"):
                self.advance()
                continue
            if self.cur.kind == "eof" or (self.cur.kind == "kw" and self.cur.value in stop):
                break
            instrs.append(self.parse_instruction())
        return seq_of(instrs)

    def parse_instruction(self) -> Instruction:
        tok = self.cur
        if self.at_kw("create"):
            self.advance()
            target = self.parse_path()
            return Create(target, pos=(tok.line, tok.col))
        if self.at_kw("call"):
            self.advance()
            segs = self.parse_dotted()
            self.expect_op("(")
            args = self.parse_call_args()
            self.expect_op(")")
            if len(segs) == 1:
                return UCall(segs[0], args, pos=(tok.line, tok.col))
            target = _raw_path(segs[:-1])
            return QCall(target, segs[-1], args, pos=(tok.line, tok.col))
        if self.at_kw("then"):
            self.advance()
            cond = None
            if self.at_op("("):
                self.advance()
                tree, start, end = self.parse_expr_tree()
                self.expect_op(")")
                cond = OpaqueExpr(self._tree_mentions(tree), self.source[start:end])
            then_branch = self.parse_instructions(stop={"else", "end"})
            else_branch = None
            if self.at_kw("else"):
                self.advance()
                else_branch = self.parse_instructions(stop={"end"})
            self.expect_kw("end")
            return Choice(then_branch, else_branch, cond)
        if self.at_kw("loop"):
            self.advance()
            body = self.parse_instructions(stop={"end"})
            self.expect_kw("end")
            return Loop(body)
        if self.cur.kind == "name":
            target = self.parse_path()
            self.expect_op(":=")
            rhs = self.parse_rhs()
            return Assign(target, rhs, pos=(tok.line, tok.col))
        raise self.error(f"expected instruction, found {self.cur.value!r}")

    def parse_call_args(self) -> tuple[Expr, ...]:
        args: list[Expr] = []
        if not self.at_op(")"):
            while True:
                tree, start, end = self.parse_expr_tree()
                args.append(self._tree_to_expr(tree, start, end))
                if self.at_op(","):
                    self.advance()
                    continue
                break
        return tuple(args)

    def parse_dotted(self) -> list[str]:
        segs = [self.expect_name("path").value]
        while self.at_op("."):
            self.advance()
            segs.append(self.expect_name("attribute name").value)
        return segs

    def parse_path(self) -> AccessPath:
        return _raw_path(self.parse_dotted())

    # -- expressions ------------------------------------------------------
    #
    # Expressions parse into small internal trees.  Assignments keep a
    # plain path or a top-level function call structured; everything else
    # collapses to an opaque expression carrying its mentioned paths.

    def parse_rhs(self) -> Expr:
        tree, start, end = self.parse_expr_tree()
        return self._tree_to_expr(tree, start, end)

    def parse_assertions(self) -> list[PostAssertion]:
        assertions = []
        while not (self.cur.kind == "kw" and self.cur.value == "end") and self.cur.kind != "eof":
            if self.at_op(";"):
                self.advance()
                continue
            tree, start, end = self.parse_expr_tree(allow_old=True)
            now: set[AccessPath] = set()
            old: set[AccessPath] = set()
            _collect_paths(tree, False, now, old)
            assertions.append(
                PostAssertion(frozenset(now), frozenset(old), self.source[start:end].strip())
            )
        return assertions

    def parse_expr_tree(self, allow_old: bool = False) -> tuple[_EPath, int, int]:
        start = self.cur.start
        tree = self._parse_relational(allow_old)
        end = self.tokens[self.i - 1].end if self.i else start
        return tree, start, end

    def _parse_relational(self, allow_old: bool) -> _EPath:
        left = self._parse_additive(allow_old)
        if self.cur.kind == "op" and self.cur.value in {"=", "/=", "<", "<=", ">", ">="}:
            op = self.advance().value
            right = self._parse_additive(allow_old)
            return ("binop", op, left, right)
        return left

    def _parse_additive(self, allow_old: bool) -> _EPath:
        left = self._parse_multiplicative(allow_old)
        while self.cur.kind == "op" and self.cur.value in {"+", "-", "&"}:
            op = self.advance().value
            right = self._parse_multiplicative(allow_old)
            left = ("binop", op, left, right)
        return left

    def _parse_multiplicative(self, allow_old: bool) -> _EPath:
        left = self._parse_factor(allow_old)
        while self.cur.kind == "op" and self.cur.value in {"*", "/"}:
            op = self.advance().value
            right = self._parse_factor(allow_old)
            left = ("binop", op, left, right)
        return left

    def _parse_factor(self, allow_old: bool) -> _EPath:
        if self.at_kw("old"):
            if not allow_old:
                raise self.error("'old' is only valid inside an ensure clause")
            self.advance()
            return ("old", self._parse_factor(allow_old))
        if self.at_kw("Void"):
            self.advance()
            return ("void",)
        if self.cur.kind == "int":
            return ("int", self.advance().value)
        if self.at_op("("):
            self.advance()
            inner = self._parse_relational(allow_old)
            self.expect_op(")")
            return inner
        if self.at_op("-"):
            self.advance()
            return ("binop", "-", ("int", "0"), self._parse_factor(allow_old))
        if self.cur.kind == "name":
            segs = self.parse_dotted()
            if self.at_op("("):
                self.advance()
                args: list[_EPath] = []
                if not self.at_op(")"):
                    while True:
                        args.append(self._parse_relational(allow_old))
                        if self.at_op(","):
                            self.advance()
                            continue
                        break
                self.expect_op(")")
                return ("call", tuple(segs[:-1]), segs[-1], tuple(args))
            return ("path", tuple(segs))
        raise self.error(f"expected expression, found {self.cur.value!r}")

    def _tree_mentions(self, tree: _EPath) -> frozenset[AccessPath]:
        now: set[AccessPath] = set()
        old: set[AccessPath] = set()
        _collect_paths(tree, False, now, old)
        return frozenset(now | old)

    def _tree_to_expr(self, tree: _EPath, start: int, end: int) -> Expr:
        if tree[0] == "path":
            return PathExpr(_raw_path(list(tree[1])))
        if tree[0] == "call":
            prefix, name, raw_args = tree[1], tree[2], tree[3]
            target = _raw_path(list(prefix)) if prefix else None
            args = []
            for sub in raw_args:
                if sub[0] == "path":
                    args.append(PathExpr(_raw_path(list(sub[1]))))
                else:
                    args.append(OpaqueExpr(self._tree_mentions(sub), _render_tree(sub)))
            return FnCall(target, name, tuple(args))
        return OpaqueExpr(self._tree_mentions(tree), self.source[start:end].strip())


def _raw_path(segs: list[str]) -> AccessPath:
    return AccessPath(segs[0], tuple(segs[1:]))


def _collect_paths(tree: _EPath, under_old: bool, now: set, old: set) -> None:
    kind = tree[0]
    if kind == "path":
        (old if under_old else now).add(_raw_path(list(tree[1])))
    elif kind == "call":
        if tree[1]:
            (old if under_old else now).add(_raw_path(list(tree[1])))
        for sub in tree[3]:
            _collect_paths(sub, under_old, now, old)
    elif kind == "old":
        _collect_paths(tree[1], True, now, old)
    elif kind == "binop":
        _collect_paths(tree[2], under_old, now, old)
        _collect_paths(tree[3], under_old, now, old)


def _render_tree(tree: _EPath) -> str:
    kind = tree[0]
    if kind == "path":
        return ".".join(tree[1])
    if kind == "int":
        return tree[1]
    if kind == "void":
        return "Void"
    if kind == "old":
        return f"old {_render_tree(tree[1])}"
    if kind == "call":
        prefix = ".".join(tree[1]) + "." if tree[1] else ""
        args = ", ".join(_render_tree(a) for a in tree[3])
        return f"{prefix}{tree[2]} ({args})"
    return f"{_render_tree(tree[2])} {tree[1]} {_render_tree(tree[3])}"


def parse_program(source: str) -> Program:
    """Parse `.mol` source text into a raw (unresolved) program."""
    return Parser(source).parse_program()
