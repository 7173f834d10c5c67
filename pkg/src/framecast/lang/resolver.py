"""Name and type resolution for parsed programs.

Resolution flattens inheritance, builds the heirs relation, canonicalizes
every path (bare attribute references become Current-rooted), annotates
qualified calls with the static type of their target, and rejects programs
that fall outside the supported subset (shadowing, cycles, arity clashes).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from ..errors import MalformedClause, ResolveError
from .ast import (
    CURRENT,
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
    SCALAR_TYPES,
    Seq,
    UCall,
)


@dataclass(frozen=True)
class ResolvedProgram:
    """A program plus the lookup tables the analyses consume."""

    program: Program
    flat_attrs: dict[str, tuple[tuple[str, str, str], ...]]  # class -> (name, type, owner)
    flat_models: dict[str, tuple[ModelQuery, ...]]
    heirs: dict[str, frozenset[str]]
    parents: dict[str, Optional[str]]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ResolvedProgram):
            return NotImplemented
        return (
            self.program == other.program
            and self.flat_attrs == other.flat_attrs
            and self.flat_models == other.flat_models
            and self.heirs == other.heirs
            and self.parents == other.parents
        )

    # -- class queries ------------------------------------------------------

    def class_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.program.classes)

    def class_decl(self, name: str) -> ClassDecl:
        decl = self.program.class_decl(name)
        if decl is None:
            raise ResolveError(f"unknown class {name}")
        return decl

    def attr_names(self, class_name: str) -> frozenset[str]:
        return frozenset(n for n, _, _ in self.flat_attrs[class_name])

    def attr_type(self, class_name: str, attr: str) -> Optional[str]:
        for n, t, _ in self.flat_attrs[class_name]:
            if n == attr:
                return t
        return None

    def model_backing(self, class_name: str) -> dict[str, tuple[str, ...]]:
        """attribute name -> model query names it backs (sorted)."""
        out: dict[str, list[str]] = {}
        for mq in self.flat_models.get(class_name, ()):
            for attr in mq.backing:
                out.setdefault(attr, []).append(mq.name)
        return {a: tuple(sorted(qs)) for a, qs in out.items()}

    def model_query_names(self, class_name: str) -> frozenset[str]:
        return frozenset(mq.name for mq in self.flat_models.get(class_name, ()))

    def has_models(self, class_name: str) -> bool:
        return bool(self.flat_models.get(class_name))

    def conforms(self, sub: str, sup: str) -> bool:
        cur: Optional[str] = sub
        while cur is not None:
            if cur == sup:
                return True
            cur = self.parents.get(cur)
        return False

    # -- routine queries ----------------------------------------------------

    def lookup(self, class_name: str, routine: str) -> tuple[str, RoutineDecl]:
        """Innermost version of `routine` for `class_name`."""
        cur: Optional[str] = class_name
        while cur is not None:
            decl = self.class_decl(cur).routine(routine)
            if decl is not None:
                return cur, decl
            cur = self.parents.get(cur)
        raise ResolveError(f"class {class_name} has no routine {routine}")

    def dispatch_versions(self, static_type: str, routine: str) -> tuple[tuple[str, RoutineDecl], ...]:
        """Distinct implementations a call on a `static_type` target can
        reach: the statically resolved version plus every redefinition in
        heirs, ordered deterministically (static version first)."""
        first = self.lookup(static_type, routine)
        seen = {first[0]}
        versions = [first]
        for heir in sorted(self.heirs.get(static_type, frozenset())):
            definer, decl = self.lookup(heir, routine)
            if definer not in seen:
                seen.add(definer)
                versions.append((definer, decl))
        return tuple(versions)

    @property
    def entry_points(self) -> tuple[tuple[str, str], ...]:
        return self.program.entry_points


def resolve(program: Program) -> ResolvedProgram:
    """Resolve a parsed program or raise ResolveError."""
    _check_unique_classes(program)
    parents = _parent_table(program)
    order = _linearize(program, parents)
    flat_attrs = _flatten_attributes(program, parents, order)
    flat_models = _flatten_models(program, parents, order, flat_attrs)
    heirs = _heirs_table(program, parents)

    shell = ResolvedProgram(program, flat_attrs, flat_models, heirs, parents)
    resolved_classes = []
    for decl in program.classes:
        resolved_classes.append(_resolve_class(shell, decl))
    resolved_program = Program(tuple(resolved_classes))
    return ResolvedProgram(resolved_program, flat_attrs, flat_models, heirs, parents)


# ---------------------------------------------------------------------------
# tables


def _check_unique_classes(program: Program) -> None:
    seen: set[str] = set()
    for decl in program.classes:
        if decl.name in seen:
            raise ResolveError(f"duplicate class {decl.name}")
        if decl.name in SCALAR_TYPES:
            raise ResolveError(f"class name {decl.name} collides with a builtin type")
        seen.add(decl.name)


def _parent_table(program: Program) -> dict[str, Optional[str]]:
    parents: dict[str, Optional[str]] = {}
    for decl in program.classes:
        if decl.parent is not None:
            if decl.parent in SCALAR_TYPES or program.class_decl(decl.parent) is None:
                raise ResolveError(f"class {decl.name}: unknown parent {decl.parent}")
        parents[decl.name] = decl.parent
    return parents


def _linearize(program: Program, parents: dict[str, Optional[str]]) -> list[str]:
    """Ancestor-before-descendant order; detects inheritance cycles."""
    order: list[str] = []
    state: dict[str, int] = {}  # 0 visiting, 1 done

    def visit(name: str, trail: tuple[str, ...]) -> None:
        mark = state.get(name)
        if mark == 1:
            return
        if mark == 0:
            raise ResolveError(f"inheritance cycle through {' -> '.join(trail + (name,))}")
        state[name] = 0
        parent = parents.get(name)
        if parent is not None:
            visit(parent, trail + (name,))
        state[name] = 1
        order.append(name)

    for decl in program.classes:
        visit(decl.name, ())
    return order


def _flatten_attributes(program, parents, order) -> dict[str, tuple[tuple[str, str, str], ...]]:
    flat: dict[str, tuple[tuple[str, str, str], ...]] = {}
    for name in order:
        decl = program.class_decl(name)
        inherited = flat[parents[name]] if parents[name] else ()
        rows = list(inherited)
        taken = {n for n, _, _ in rows}
        own_seen: set[str] = set()
        for attr, type_name in decl.attributes:
            if attr in own_seen:
                raise ResolveError(f"class {name}: duplicate attribute {attr}")
            if attr in taken:
                raise ResolveError(f"class {name}: attribute {attr} shadows an inherited attribute")
            if type_name not in SCALAR_TYPES and program.class_decl(type_name) is None:
                raise ResolveError(f"class {name}: attribute {attr} has unknown type {type_name}")
            own_seen.add(attr)
            rows.append((attr, type_name, name))
        flat[name] = tuple(rows)
    return flat


def _flatten_models(program, parents, order, flat_attrs) -> dict[str, tuple[ModelQuery, ...]]:
    flat: dict[str, tuple[ModelQuery, ...]] = {}
    for name in order:
        decl = program.class_decl(name)
        inherited = flat[parents[name]] if parents[name] else ()
        rows = list(inherited)
        taken = {mq.name for mq in rows}
        attr_names = {n for n, _, _ in flat_attrs[name]}
        for mq in decl.model_queries:
            if mq.name in taken:
                raise ResolveError(f"class {name}: duplicate model query {mq.name}")
            if mq.name in attr_names:
                raise ResolveError(f"class {name}: model query {mq.name} collides with an attribute")
            if not mq.backing:
                raise ResolveError(f"class {name}: model query {mq.name} has no backing attributes")
            for attr in mq.backing:
                if attr not in attr_names:
                    raise ResolveError(
                        f"class {name}: model query {mq.name} maps unknown attribute {attr}"
                    )
            taken.add(mq.name)
            rows.append(mq)
        flat[name] = tuple(rows)
    return flat


def _heirs_table(program, parents) -> dict[str, frozenset[str]]:
    children: dict[str, set[str]] = {c.name: set() for c in program.classes}
    for name, parent in parents.items():
        if parent is not None:
            children[parent].add(name)
    heirs: dict[str, frozenset[str]] = {}

    def descend(name: str) -> frozenset[str]:
        if name in heirs:
            return heirs[name]
        acc: set[str] = set()
        for child in children[name]:
            acc.add(child)
            acc |= descend(child)
        heirs[name] = frozenset(acc)
        return heirs[name]

    for decl in program.classes:
        descend(decl.name)
    return heirs


# ---------------------------------------------------------------------------
# per-class resolution


def _resolve_class(rp: ResolvedProgram, decl: ClassDecl) -> ClassDecl:
    attr_names = rp.attr_names(decl.name)
    feature_names: set[str] = set()
    for routine in decl.routines:
        if routine.name in feature_names:
            raise ResolveError(f"class {decl.name}: duplicate routine {routine.name}")
        if routine.name in attr_names or routine.name in rp.model_query_names(decl.name):
            raise ResolveError(f"class {decl.name}: routine {routine.name} collides with an attribute or model query")
        feature_names.add(routine.name)

    for redefined in decl.redefine_names:
        if decl.routine(redefined) is None:
            raise ResolveError(f"class {decl.name}: redefine lists {redefined} but the class does not declare it")

    resolved_routines = []
    for routine in decl.routines:
        resolved_routines.append(_resolve_routine(rp, decl, routine))
    return replace(decl, routines=tuple(resolved_routines))


def _resolve_routine(rp: ResolvedProgram, cls: ClassDecl, routine: RoutineDecl) -> RoutineDecl:
    where = f"{cls.name}.{routine.name}"
    attr_names = rp.attr_names(cls.name)
    model_names = rp.model_query_names(cls.name)

    env: dict[str, str] = {}
    for kind, pairs in (("formal", routine.formals), ("local", routine.locals_)):
        for name, type_name in pairs:
            if name in env:
                raise ResolveError(f"{where}: duplicate {kind} {name}")
            if name in attr_names or name in model_names:
                raise ResolveError(f"{where}: {kind} {name} collides with class state")
            if type_name not in SCALAR_TYPES and rp.program.class_decl(type_name) is None:
                raise ResolveError(f"{where}: {kind} {name} has unknown type {type_name}")
            env[name] = type_name
    if routine.is_function:
        # Functions carry an implicit Result variable of the result type.
        if routine.result_type not in SCALAR_TYPES and rp.program.class_decl(routine.result_type) is None:
            raise ResolveError(f"{where}: unknown result type {routine.result_type}")
        env.setdefault("Result", routine.result_type)

    redefines = routine.name in cls.redefine_names
    if redefines:
        if cls.parent is None:
            raise ResolveError(f"{where}: redefine without a parent class")
        definer, inherited = rp.lookup(cls.parent, routine.name)
        if len(inherited.formals) != len(routine.formals):
            raise ResolveError(
                f"{where}: redefinition changes arity "
                f"({len(routine.formals)} vs {len(inherited.formals)} in {definer})"
            )
    elif cls.parent is not None:
        try:
            rp.lookup(cls.parent, routine.name)
        except ResolveError:
            pass
        else:
            raise ResolveError(f"{where}: redeclares an inherited routine without listing it under redefine")

    ctx = _RoutineCtx(rp, cls.name, where, env, attr_names, model_names)
    body = _resolve_instr(ctx, routine.body)
    modify = _resolve_modify(ctx, routine.modify_clause)
    ensure = _resolve_ensure(ctx, routine.ensure_clause)
    return replace(routine, body=body, modify_clause=modify, ensure_clause=ensure, redefines=redefines)


@dataclass
class _RoutineCtx:
    rp: ResolvedProgram
    class_name: str
    where: str
    env: dict[str, str]
    attr_names: frozenset[str]
    model_names: frozenset[str]

    def canonical(self, path: AccessPath) -> AccessPath:
        head = path.root
        if head == CURRENT:
            return path
        if head in self.env:
            return path
        if head in self.attr_names:
            return AccessPath(CURRENT, (head,) + path.attrs)
        raise ResolveError(f"{self.where}: unknown identifier {head}")

    def path_type(self, path: AccessPath) -> str:
        """Type of a canonical path; validates every segment on the way."""
        if path.is_current:
            return self.class_name
        if path.root == CURRENT:
            cur_type = self.class_name
            segments = path.attrs
        else:
            cur_type = self.env[path.root]
            segments = path.attrs
        for seg in segments:
            if cur_type in SCALAR_TYPES:
                raise ResolveError(f"{self.where}: path {path.dotted()} traverses scalar type {cur_type}")
            seg_type = self.rp.attr_type(cur_type, seg)
            if seg_type is None:
                raise ResolveError(f"{self.where}: type {cur_type} has no attribute {seg}")
            cur_type = seg_type
        return cur_type


def _resolve_instr(ctx: _RoutineCtx, inst: Optional[Instruction]) -> Optional[Instruction]:
    if inst is None:
        return None
    if isinstance(inst, Assign):
        target = ctx.canonical(inst.target)
        target_type = ctx.path_type(target)
        rhs = _resolve_expr(ctx, inst.rhs)
        if isinstance(rhs, PathExpr):
            rhs_type = ctx.path_type(rhs.path)
            if target_type in SCALAR_TYPES or rhs_type in SCALAR_TYPES:
                if rhs_type != target_type:
                    raise ResolveError(
                        f"{ctx.where}: cannot assign {rhs_type} to {target_type} target {target.dotted()}"
                    )
            elif not ctx.rp.conforms(rhs_type, target_type):
                raise ResolveError(
                    f"{ctx.where}: {rhs.path.dotted()} of type {rhs_type} does not conform to {target_type}"
                )
        elif isinstance(rhs, FnCall):
            _check_call(ctx, rhs.target, rhs.name, rhs.args, require_function=True)
        return replace(inst, target=target, rhs=rhs)
    if isinstance(inst, Create):
        target = ctx.canonical(inst.target)
        if ctx.path_type(target) in SCALAR_TYPES:
            raise ResolveError(f"{ctx.where}: cannot create scalar target {target.dotted()}")
        return replace(inst, target=target)
    if isinstance(inst, Seq):
        return Seq(_resolve_instr(ctx, inst.first), _resolve_instr(ctx, inst.second))
    if isinstance(inst, Choice):
        cond = _resolve_opaque(ctx, inst.cond) if inst.cond is not None else None
        return Choice(
            _resolve_instr(ctx, inst.then_branch),
            _resolve_instr(ctx, inst.else_branch),
            cond,
        )
    if isinstance(inst, Loop):
        return Loop(_resolve_instr(ctx, inst.body))
    if isinstance(inst, UCall):
        args = _check_call(ctx, None, inst.name, inst.args, require_function=False)
        return replace(inst, args=args)
    if isinstance(inst, QCall):
        target = ctx.canonical(inst.target)
        static_type = ctx.path_type(target)
        args = _check_call(ctx, target, inst.name, inst.args, require_function=False)
        return replace(inst, target=target, args=args, static_type=static_type)
    raise TypeError(f"unknown instruction {inst!r}")


def _check_call(
    ctx: _RoutineCtx,
    target: Optional[AccessPath],
    name: str,
    args: tuple[Expr, ...],
    require_function: bool,
) -> tuple[Expr, ...]:
    if target is None:
        static_type = ctx.class_name
    else:
        target = ctx.canonical(target)
        static_type = ctx.path_type(target)
        if static_type in SCALAR_TYPES:
            raise ResolveError(f"{ctx.where}: call target {target.dotted()} has scalar type {static_type}")
    definer, decl = ctx.rp.lookup(static_type, name)
    if require_function and not decl.is_function:
        raise ResolveError(f"{ctx.where}: {definer}.{name} is not a function")
    if len(args) != len(decl.formals):
        raise ResolveError(
            f"{ctx.where}: call to {definer}.{name} passes {len(args)} arguments, expects {len(decl.formals)}"
        )
    resolved_args = []
    for arg, (formal, formal_type) in zip(args, decl.formals):
        arg = _resolve_expr(ctx, arg)
        if isinstance(arg, PathExpr):
            arg_type = ctx.path_type(arg.path)
            if formal_type in SCALAR_TYPES or arg_type in SCALAR_TYPES:
                if arg_type != formal_type:
                    raise ResolveError(
                        f"{ctx.where}: argument {arg.path.dotted()} has type {arg_type}, formal {formal} expects {formal_type}"
                    )
            elif not ctx.rp.conforms(arg_type, formal_type):
                raise ResolveError(
                    f"{ctx.where}: argument {arg.path.dotted()} does not conform to {formal_type}"
                )
        resolved_args.append(arg)
    return tuple(resolved_args)


def _resolve_expr(ctx: _RoutineCtx, expr: Expr) -> Expr:
    if isinstance(expr, PathExpr):
        return PathExpr(ctx.canonical(expr.path))
    if isinstance(expr, OpaqueExpr):
        return _resolve_opaque(ctx, expr)
    if isinstance(expr, FnCall):
        target = ctx.canonical(expr.target) if expr.target is not None else None
        args = tuple(_resolve_expr(ctx, a) for a in expr.args)
        static_type = ctx.path_type(target) if target is not None else ctx.class_name
        return FnCall(target, expr.name, args, static_type)
    raise TypeError(f"unknown expression {expr!r}")


def _resolve_opaque(ctx: _RoutineCtx, expr: OpaqueExpr) -> OpaqueExpr:
    mentions = []
    for path in expr.mentions:
        canon = ctx.canonical(path)
        ctx.path_type(canon)
        mentions.append(canon)
    return OpaqueExpr(frozenset(mentions), expr.text)


def _resolve_modify(ctx: _RoutineCtx, clause: Optional[tuple[str, ...]]) -> Optional[tuple[str, ...]]:
    if clause is None:
        return None
    for name in clause:
        if name not in ctx.attr_names and name not in ctx.model_names:
            raise MalformedClause(f"{ctx.where}: modify clause names unknown {name}")
    return tuple(sorted(set(clause)))


def _resolve_ensure(
    ctx: _RoutineCtx, clause: Optional[tuple[PostAssertion, ...]]
) -> Optional[tuple[PostAssertion, ...]]:
    if clause is None:
        return None
    out = []
    for assertion in clause:
        out.append(
            PostAssertion(
                frozenset(_canonical_assertion_path(ctx, p) for p in assertion.named_now),
                frozenset(_canonical_assertion_path(ctx, p) for p in assertion.named_old),
                assertion.text,
            )
        )
    return tuple(out)


def _canonical_assertion_path(ctx: _RoutineCtx, path: AccessPath) -> AccessPath:
    # Postconditions may name model queries (bare) in addition to anything a
    # body path can name.
    if path.root in ctx.model_names:
        if path.attrs:
            raise ResolveError(f"{ctx.where}: model query {path.root} cannot be dereferenced")
        return AccessPath(CURRENT, (path.root,))
    canon = ctx.canonical(path)
    if not (canon.root == CURRENT and canon.attrs and canon.attrs[0] in ctx.model_names):
        ctx.path_type(canon)
    return canon
