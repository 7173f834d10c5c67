"""AST for the mini object-oriented language.

The language covers assignment, creation, sequencing, non-deterministic
choice, loops, unqualified and qualified calls, plus contract annotations
(`modify`, `ensure`) and explicit model-query declarations
(`model q -> a, b`).  Trees are immutable; parse positions never take part
in equality so pretty-print round trips compare structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

CURRENT = "Current"

# Suffix marking a back-reference edge label during qualified-call analysis.
# Not a valid identifier character, so primed labels cannot collide with
# program names.
PRIME = "'"

# Built-in scalar type names; paths cannot traverse values of these types.
SCALAR_TYPES = frozenset({"INTEGER", "BOOLEAN"})

#: A path as the label sequence it traverses from the analysis root.
LabelPath = tuple[str, ...]


def is_primed_label(label: str) -> bool:
    return label.endswith(PRIME)


def path_text(labels: LabelPath) -> str:
    """Render a label path; the empty path denotes the current object."""
    return ".".join(labels) if labels else CURRENT


@dataclass(frozen=True, order=True)
class AccessPath:
    """A root (Current, local, or formal) followed by attribute names.

    A bare class-attribute reference canonicalizes to root ``Current`` with
    a single attribute segment, so `labels` is uniform currency for graph
    traversal regardless of what kind of name the path starts with.
    """

    root: str = CURRENT
    attrs: tuple[str, ...] = ()

    @property
    def labels(self) -> LabelPath:
        if self.root == CURRENT:
            return self.attrs
        return (self.root,) + self.attrs

    @property
    def is_current(self) -> bool:
        return self.root == CURRENT and not self.attrs

    def child(self, attr: str) -> "AccessPath":
        return AccessPath(self.root, self.attrs + (attr,))

    def dotted(self) -> str:
        return path_text(self.labels)

    @staticmethod
    def of_labels(labels: LabelPath, attr_names: frozenset[str] = frozenset()) -> "AccessPath":
        """Classify a label path: a first segment in `attr_names` is a class
        attribute (Current root); anything else roots the path itself."""
        if not labels:
            return AccessPath()
        if labels[0] in attr_names:
            return AccessPath(CURRENT, tuple(labels))
        return AccessPath(labels[0], tuple(labels[1:]))

    def __str__(self) -> str:
        return self.dotted()


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class PathExpr:
    path: AccessPath


@dataclass(frozen=True)
class OpaqueExpr:
    """Any expression the analysis does not interpret (arithmetic, Void,
    comparisons).  Records every path syntactically mentioned in it."""

    mentions: frozenset[AccessPath] = frozenset()
    text: str = field(default="", compare=False)


@dataclass(frozen=True)
class FnCall:
    """Function call used as an expression; target None means unqualified."""

    target: Optional[AccessPath]
    name: str
    args: tuple["Expr", ...] = ()
    #: Static type of the target path, filled in by the resolver.
    static_type: Optional[str] = None


Expr = Union[PathExpr, OpaqueExpr, FnCall]


def mentioned_paths(expr: Expr) -> frozenset[AccessPath]:
    if isinstance(expr, PathExpr):
        return frozenset({expr.path})
    if isinstance(expr, OpaqueExpr):
        return expr.mentions
    out = set() if expr.target is None else {expr.target}
    for arg in expr.args:
        out |= mentioned_paths(arg)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Instructions

#: `None` stands for the empty instruction (empty bodies, missing else).
Instruction = Union["Assign", "Create", "Seq", "Choice", "Loop", "UCall", "QCall"]


@dataclass(frozen=True)
class Assign:
    target: AccessPath
    rhs: Expr
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Create:
    target: AccessPath
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Seq:
    first: Instruction
    second: Instruction


@dataclass(frozen=True)
class Choice:
    """Non-deterministic choice: either branch may run.  A source-level
    condition, when present, is kept as an opaque note only."""

    then_branch: Optional[Instruction]
    else_branch: Optional[Instruction]
    cond: Optional[OpaqueExpr] = None


@dataclass(frozen=True)
class Loop:
    body: Optional[Instruction]


@dataclass(frozen=True)
class UCall:
    name: str
    args: tuple[Expr, ...] = ()
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class QCall:
    target: AccessPath
    name: str
    args: tuple[Expr, ...] = ()
    #: Static type of the target path, filled in by the resolver.
    static_type: Optional[str] = None
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


def seq_of(instrs: list[Instruction]) -> Optional[Instruction]:
    """Fold an instruction list into nested binary sequences."""
    if not instrs:
        return None
    out = instrs[-1]
    for inst in reversed(instrs[:-1]):
        out = Seq(inst, out)
    return out


def seq_list(inst: Optional[Instruction]) -> list[Instruction]:
    """Flatten nested sequences back into a list."""
    if inst is None:
        return []
    if isinstance(inst, Seq):
        return seq_list(inst.first) + seq_list(inst.second)
    return [inst]


# ---------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class PostAssertion:
    """Path sets extracted from one postcondition assertion: occurrences
    outside `old` and occurrences under `old`.  One name may appear in
    both.  The source text is kept for printing only."""

    named_now: frozenset[AccessPath]
    named_old: frozenset[AccessPath]
    text: str = field(default="", compare=False)


@dataclass(frozen=True)
class ModelQuery:
    name: str
    backing: tuple[str, ...]


@dataclass(frozen=True)
class RoutineDecl:
    name: str
    formals: tuple[tuple[str, str], ...] = ()
    locals_: tuple[tuple[str, str], ...] = ()
    body: Optional[Instruction] = None
    is_function: bool = False
    result_type: Optional[str] = None
    redefines: bool = False
    modify_clause: Optional[tuple[str, ...]] = None
    ensure_clause: Optional[tuple[PostAssertion, ...]] = None
    pos: tuple[int, int] = field(default=(0, 0), compare=False)

    @property
    def formal_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.formals)

    @property
    def local_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.locals_)

    @property
    def frame_names(self) -> frozenset[str]:
        return frozenset(self.formal_names) | frozenset(self.local_names)


@dataclass(frozen=True)
class ClassDecl:
    name: str
    parent: Optional[str] = None
    redefine_names: tuple[str, ...] = ()
    attributes: tuple[tuple[str, str], ...] = ()
    model_queries: tuple[ModelQuery, ...] = ()
    routines: tuple[RoutineDecl, ...] = ()
    pos: tuple[int, int] = field(default=(0, 0), compare=False)

    def routine(self, name: str) -> Optional[RoutineDecl]:
        for r in self.routines:
            if r.name == name:
                return r
        return None


@dataclass(frozen=True)
class Program:
    classes: tuple[ClassDecl, ...] = ()

    def class_decl(self, name: str) -> Optional[ClassDecl]:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    @property
    def entry_points(self) -> tuple[tuple[str, str], ...]:
        """Every (class, routine) pair with a declared body."""
        out = []
        for c in self.classes:
            for r in c.routines:
                if r.body is not None:
                    out.append((c.name, r.name))
        return tuple(out)
