"""May-change analysis over alias graphs.

Each instruction kind has a transfer taking a (graph, change set) state to a
new state.  The change set over-approximates the locations an execution may
modify: an assignment through a path marks the written field under every
alias of its prefix, plus the reachable extensions of the written location.
Calls inline the callee with formals substituted by path actuals; qualified
calls re-root the graph on the target and translate callee-side paths back
into caller terms; dynamic binding expands into a choice over every
reachable implementation.  Loops unroll to a configurable bound with
accumulating (may) updates so that every iteration count up to the bound is
covered.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import AnalysisError, UnknownRoutine
from .graph import (
    AliasGraph,
    NodeAlloc,
    Path,
    PathSet,
    alias_of,
    apply_assign,
    apply_create,
    apply_fresh_target,
    completion_paths,
    join,
    materialize,
    pop_context,
    push_context,
    strip_primed,
    truncate_paths,
)
from .lang.ast import (
    CURRENT,
    AccessPath,
    Assign,
    Choice,
    Create,
    Expr,
    FnCall,
    Instruction,
    Loop,
    OpaqueExpr,
    PathExpr,
    QCall,
    RoutineDecl,
    Seq,
    UCall,
)
from .lang.resolver import ResolvedProgram


@dataclass(frozen=True)
class AnalysisConfig:
    """Precision knobs: unrolling depth for loops, inlining depth for
    recursion, and the maximum length of reported paths."""

    loop_bound: int = 3
    recursion_bound: int = 3
    max_path_depth: int = 8

    def __post_init__(self) -> None:
        if self.loop_bound < 1 or self.recursion_bound < 1 or self.max_path_depth < 1:
            raise ValueError("analysis bounds must be >= 1")


@dataclass(frozen=True)
class ChangeState:
    graph: AliasGraph
    changed: PathSet = frozenset()


class _Ctx:
    """Mutable bookkeeping threaded through one routine analysis."""

    def __init__(
        self,
        resolved: ResolvedProgram,
        cfg: AnalysisConfig,
        alloc: NodeAlloc,
        class_name: str,
        naive: bool = False,
    ) -> None:
        self.resolved = resolved
        self.cfg = cfg
        self.alloc = alloc
        self.class_name = class_name
        self.naive = naive
        self.weak = False  # accumulate edges instead of replacing (loop bodies)
        self.compl_cap = 0  # completion-walk length cap; 0 = unbounded
        self.call_stack: list[tuple[str, str]] = []
        self.inline_count = 0
        self._summary_memo: dict[tuple[str, str], frozenset[Path]] = {}

    def fresh_frame_suffix(self) -> str:
        self.inline_count += 1
        return f"@{self.inline_count}"


def make_context(
    resolved: ResolvedProgram,
    class_name: str,
    cfg: Optional[AnalysisConfig] = None,
    alloc: Optional[NodeAlloc] = None,
    naive: bool = False,
) -> _Ctx:
    """Context for stepping instructions against hand-built graphs."""
    return _Ctx(resolved, cfg or AnalysisConfig(), alloc or NodeAlloc(1000), class_name, naive)


# ---------------------------------------------------------------------------
# per-rule transfers


def step(state: ChangeState, inst: Optional[Instruction], ctx: _Ctx) -> ChangeState:
    if inst is None:
        return state
    if isinstance(inst, Assign):
        return step_assign(state, inst.target, inst.rhs, ctx)
    if isinstance(inst, Create):
        return step_create(state, inst.target, ctx)
    if isinstance(inst, Seq):
        return step_seq(state, inst.first, inst.second, ctx)
    if isinstance(inst, Choice):
        return step_choice(state, inst.then_branch, inst.else_branch, ctx)
    if isinstance(inst, Loop):
        return step_loop(state, inst.body, ctx)
    if isinstance(inst, UCall):
        return step_ucall(state, inst.name, inst.args, ctx)
    if isinstance(inst, QCall):
        if inst.static_type is None:
            raise AnalysisError(f"unresolved qualified call {inst.target.dotted()}.{inst.name}")
        return expand_dispatch(state, inst.target, inst.name, inst.args, inst.static_type, ctx)
    raise AnalysisError(f"unknown instruction {inst!r}")


def _assign_additions(graph: AliasGraph, target: Path, ctx: _Ctx) -> PathSet:
    """Change contribution of a write through `target` = v.w, evaluated on
    the post-transfer graph: every alias of the prefix v names an object
    whose state changed (names of the current frame's own root excluded),
    and the written field under each alias is completed with its reachable
    extensions."""
    prefix, last = target[:-1], target[-1]
    aliases = alias_of(graph, prefix)
    bare = frozenset(
        q for q in aliases if q and graph.root not in graph.denote(q)
    )
    written = frozenset(q + (last,) for q in aliases)
    return bare | completion_paths(graph, written, cap=ctx.compl_cap)


def step_assign(state: ChangeState, target: AccessPath, rhs: Expr, ctx: _Ctx) -> ChangeState:
    t = target.labels
    if not t:
        raise AnalysisError("cannot assign to Current")
    if isinstance(rhs, FnCall):
        # Fold the callee's aliasing and change effects, then point the
        # target at a fresh node standing for the result value.
        state = _step_call_expr(state, rhs, ctx)
        graph = apply_fresh_target(state.graph, t, ctx.alloc, ctx.weak)
    elif isinstance(rhs, PathExpr):
        graph = apply_assign(state.graph, t, rhs.path.labels, ctx.alloc, ctx.weak)
    elif isinstance(rhs, OpaqueExpr):
        graph = state.graph  # uninterpreted values never alias
    else:
        raise AnalysisError(f"unknown rhs {rhs!r}")
    if ctx.naive:
        additions: PathSet = frozenset({t})
    else:
        additions = _assign_additions(graph, t, ctx)
    return ChangeState(graph, state.changed | additions)


def step_create(state: ChangeState, target: AccessPath, ctx: _Ctx) -> ChangeState:
    t = target.labels
    graph = apply_create(state.graph, t, ctx.alloc, ctx.weak)
    additions = _assign_additions(graph, t, ctx)
    return ChangeState(graph, state.changed | additions)


def step_seq(
    state: ChangeState,
    first: Optional[Instruction],
    second: Optional[Instruction],
    ctx: _Ctx,
) -> ChangeState:
    return step(step(state, first, ctx), second, ctx)


def step_choice(
    state: ChangeState,
    then_branch: Optional[Instruction],
    else_branch: Optional[Instruction],
    ctx: _Ctx,
) -> ChangeState:
    left = step(state, then_branch, ctx)
    right = step(state, else_branch, ctx)
    return ChangeState(join(left.graph, right.graph), left.changed | right.changed)


def step_loop(state: ChangeState, body: Optional[Instruction], ctx: _Ctx) -> ChangeState:
    """Unroll the body `loop_bound` times with accumulating updates; the
    result covers every iteration count from zero up to the bound.  Inside
    the unrolling, completion walks are capped at the bound so reported
    depth grows with the configured precision."""
    saved_weak, saved_cap = ctx.weak, ctx.compl_cap
    ctx.weak = True
    ctx.compl_cap = (
        ctx.cfg.loop_bound if saved_cap == 0 else min(saved_cap, ctx.cfg.loop_bound)
    )
    try:
        current = state
        joined = state.graph
        for _ in range(ctx.cfg.loop_bound):
            current = step(current, body, ctx)
            joined = join(joined, current.graph)
    finally:
        ctx.weak, ctx.compl_cap = saved_weak, saved_cap
    return ChangeState(joined, current.changed)


# ---------------------------------------------------------------------------
# calls


def _frame_substitution(
    decl: RoutineDecl,
    args: tuple[Expr, ...],
    ctx: _Ctx,
    actual_prefix: Path = (),
) -> tuple[dict[str, Path], frozenset[str]]:
    """Mapping from callee frame names to label paths: path actuals replace
    formals (qualified calls reach them through the primed back reference);
    everything else gets a fresh frame-private name so distinct inlinings
    never collide with each other or with caller names."""
    suffix = ctx.fresh_frame_suffix()
    mapping: dict[str, Path] = {}
    private: set[str] = set()
    for (formal, _), arg in zip(decl.formals, args):
        if isinstance(arg, PathExpr):
            mapping[formal] = actual_prefix + arg.path.labels
        else:
            fresh = formal + suffix
            mapping[formal] = (fresh,)
            private.add(fresh)
    frame_locals = list(decl.local_names)
    if decl.is_function:
        frame_locals.append("Result")
    for name in frame_locals:
        fresh = name + suffix
        mapping[name] = (fresh,)
        private.add(fresh)
    return mapping, frozenset(private)


def _subst_path(path: AccessPath, mapping: dict[str, Path]) -> AccessPath:
    labels = path.labels
    if labels and labels[0] in mapping:
        new = mapping[labels[0]] + labels[1:]
        return AccessPath(new[0], new[1:])
    return path


def _subst_expr(expr: Expr, mapping: dict[str, Path]) -> Expr:
    if isinstance(expr, PathExpr):
        return PathExpr(_subst_path(expr.path, mapping))
    if isinstance(expr, OpaqueExpr):
        return OpaqueExpr(frozenset(_subst_path(p, mapping) for p in expr.mentions), expr.text)
    if isinstance(expr, FnCall):
        target = _subst_path(expr.target, mapping) if expr.target is not None else None
        return FnCall(target, expr.name, tuple(_subst_expr(a, mapping) for a in expr.args), expr.static_type)
    raise AnalysisError(f"unknown expression {expr!r}")


def _subst_inst(inst: Optional[Instruction], mapping: dict[str, Path]) -> Optional[Instruction]:
    if inst is None:
        return None
    if isinstance(inst, Assign):
        return Assign(_subst_path(inst.target, mapping), _subst_expr(inst.rhs, mapping), inst.pos)
    if isinstance(inst, Create):
        return Create(_subst_path(inst.target, mapping), inst.pos)
    if isinstance(inst, Seq):
        return Seq(_subst_inst(inst.first, mapping), _subst_inst(inst.second, mapping))
    if isinstance(inst, Choice):
        cond = _subst_expr(inst.cond, mapping) if inst.cond is not None else None
        return Choice(_subst_inst(inst.then_branch, mapping), _subst_inst(inst.else_branch, mapping), cond)
    if isinstance(inst, Loop):
        return Loop(_subst_inst(inst.body, mapping))
    if isinstance(inst, UCall):
        return UCall(inst.name, tuple(_subst_expr(a, mapping) for a in inst.args), inst.pos)
    if isinstance(inst, QCall):
        return QCall(
            _subst_path(inst.target, mapping),
            inst.name,
            tuple(_subst_expr(a, mapping) for a in inst.args),
            inst.static_type,
            inst.pos,
        )
    raise AnalysisError(f"unknown instruction {inst!r}")


def _lookup(ctx: _Ctx, class_name: str, routine: str) -> tuple[str, RoutineDecl]:
    try:
        return ctx.resolved.lookup(class_name, routine)
    except Exception as exc:
        raise UnknownRoutine(f"{class_name}.{routine}") from exc


def step_ucall(state: ChangeState, name: str, args: tuple[Expr, ...], ctx: _Ctx) -> ChangeState:
    """Unqualified call: inline the callee body with path actuals
    substituted for formals; beyond the recursion bound, fall back to the
    callee's syntactic write summary."""
    definer, decl = _lookup(ctx, ctx.class_name, name)
    key = (definer, decl.name)
    if ctx.call_stack.count(key) >= ctx.cfg.recursion_bound:
        return ChangeState(state.graph, state.changed | _write_summary(ctx, definer, decl.name))
    mapping, _private = _frame_substitution(decl, args, ctx)
    body = _subst_inst(decl.body, mapping)
    saved_class = ctx.class_name
    ctx.call_stack.append(key)
    ctx.class_name = definer
    try:
        return step(state, body, ctx)
    finally:
        ctx.class_name = saved_class
        ctx.call_stack.pop()


def step_qcall(
    state: ChangeState,
    target: AccessPath,
    name: str,
    args: tuple[Expr, ...],
    ctx: _Ctx,
    version: Optional[tuple[str, RoutineDecl]] = None,
    static_type: Optional[str] = None,
) -> ChangeState:
    """Qualified call on one statically resolved implementation: re-root the
    graph on the target object, analyze the callee with actuals reached
    through the primed back reference, then translate the newly added change
    paths back into caller terms (primed prefixes cancel against the target,
    frame-private names of the finished call are dropped)."""
    x = target.labels
    if version is None:
        if static_type is None:
            raise AnalysisError(
                f"qualified call on {target.dotted()} needs a version or a static type"
            )
        version = _lookup(ctx, static_type, name)
    definer, decl = version
    key = (definer, decl.name)
    if ctx.call_stack.count(key) >= ctx.cfg.recursion_bound:
        summary = _write_summary(ctx, definer, decl.name)
        distributed = frozenset(x + p for p in summary)
        return ChangeState(state.graph, state.changed | distributed)

    base, x_nodes = materialize(state.graph, x, ctx.alloc)
    result_graph: Optional[AliasGraph] = None
    gained: set[Path] = set()
    for node in sorted(x_nodes):
        pushed = push_context(base, x, node)
        mapping, private = _frame_substitution(decl, args, ctx, actual_prefix=(pushed.context_stack[-1][1],))
        body = _subst_inst(decl.body, mapping)
        saved_class = ctx.class_name
        ctx.call_stack.append(key)
        ctx.class_name = definer
        try:
            inner = step(ChangeState(pushed, frozenset()), body, ctx)
        finally:
            ctx.class_name = saved_class
            ctx.call_stack.pop()
        popped, primed = pop_context(inner.graph)
        for p in inner.changed:
            if p and p[0] in private:
                continue  # stack slot of the finished call, not a location
            out = p[1:] if p and p[0] == primed else x + p
            if out:
                gained.add(out)
        result_graph = popped if result_graph is None else join(result_graph, popped)
    if result_graph is None:
        raise AnalysisError(f"qualified call target {target.dotted()} denotes no node")
    return ChangeState(result_graph, state.changed | frozenset(gained))


def expand_dispatch(
    state: ChangeState,
    target: AccessPath,
    name: str,
    args: tuple[Expr, ...],
    static_type: str,
    ctx: _Ctx,
) -> ChangeState:
    """Dynamic binding: a qualified call may run any implementation the
    target's dynamic type can select, so branch over the statically resolved
    version plus every redefinition in heirs and merge like a choice."""
    versions = ctx.resolved.dispatch_versions(static_type, name)
    merged: Optional[ChangeState] = None
    for version in versions:
        branch = step_qcall(state, target, name, args, ctx, version=version)
        if merged is None:
            merged = branch
        else:
            merged = ChangeState(join(merged.graph, branch.graph), merged.changed | branch.changed)
    if merged is None:
        raise UnknownRoutine(f"{static_type}.{name}")
    return merged


def _step_call_expr(state: ChangeState, call: FnCall, ctx: _Ctx) -> ChangeState:
    """Alias and change effects of a function call in expression position.
    Functions are assumed pure under command-query separation, so for a pure
    callee this folds in nothing; analyzing the body anyway keeps the result
    sound when the assumption is violated."""
    if call.static_type is None:
        raise AnalysisError(f"unresolved function call {call.name}")
    if call.target is None:
        return step_ucall(state, call.name, call.args, ctx)
    return expand_dispatch(state, call.target, call.name, call.args, call.static_type, ctx)


# ---------------------------------------------------------------------------
# recursion cutoff summaries


def _write_summary(ctx: _Ctx, class_name: str, routine: str) -> frozenset[Path]:
    """Depth-1 over-approximation of what a routine (and everything it can
    call) writes: the first segment of every syntactic assignment, creation,
    and qualified-call target.  Used only past the recursion bound, where
    inlining stops; coarse but monotone."""
    key = (class_name, routine)
    cached = ctx._summary_memo.get(key)
    if cached is not None:
        return cached
    acc: set[Path] = set()
    seen: set[tuple[str, str]] = set()
    stack = [key]
    while stack:
        cls, name = stack.pop()
        try:
            definer, decl = ctx.resolved.lookup(cls, name)
        except Exception:
            continue
        if (definer, decl.name) in seen:
            continue
        seen.add((definer, decl.name))
        _collect_summary(decl.body, ctx, acc, stack)
    result = frozenset(acc)
    ctx._summary_memo[key] = result
    return result


def _collect_summary(inst: Optional[Instruction], ctx: _Ctx, acc: set[Path], stack: list) -> None:
    if inst is None:
        return
    if isinstance(inst, (Assign, Create)):
        acc.add((inst.target.labels[0],))
        if isinstance(inst, Assign) and isinstance(inst.rhs, FnCall):
            _summary_call(inst.rhs.target, inst.rhs.name, inst.rhs.static_type, ctx, acc, stack)
    elif isinstance(inst, Seq):
        _collect_summary(inst.first, ctx, acc, stack)
        _collect_summary(inst.second, ctx, acc, stack)
    elif isinstance(inst, Choice):
        _collect_summary(inst.then_branch, ctx, acc, stack)
        _collect_summary(inst.else_branch, ctx, acc, stack)
    elif isinstance(inst, Loop):
        _collect_summary(inst.body, ctx, acc, stack)
    elif isinstance(inst, UCall):
        _summary_call(None, inst.name, ctx.class_name, ctx, acc, stack)
    elif isinstance(inst, QCall):
        _summary_call(inst.target, inst.name, inst.static_type, ctx, acc, stack)


def _summary_call(target, name, static_type, ctx, acc: set[Path], stack: list) -> None:
    if target is not None:
        acc.add((target.labels[0],))
    if static_type is None:
        return
    stack.append((static_type, name))
    for heir in sorted(ctx.resolved.heirs.get(static_type, frozenset())):
        stack.append((heir, name))


# ---------------------------------------------------------------------------
# routine-level analysis


def initial_graph(
    resolved: ResolvedProgram,
    class_name: str,
    decl: RoutineDecl,
    alloc: NodeAlloc,
) -> AliasGraph:
    """Entry graph: a root plus one edge to a distinct fresh node per
    flattened attribute, formal, and local (no pre-existing aliasing)."""
    root = alloc.fresh()
    names = [n for n, _, _ in resolved.flat_attrs[class_name]]
    names += [n for n, _ in decl.formals]
    names += [n for n, _ in decl.locals_]
    if decl.is_function:
        names.append("Result")
    edges = set()
    nodes = {root}
    for name in names:
        target = alloc.fresh()
        nodes.add(target)
        edges.add((root, name, target))
    return AliasGraph(frozenset(nodes), frozenset(edges), root)


def analyze_routine(
    resolved: ResolvedProgram,
    class_name: str,
    routine: str,
    cfg: Optional[AnalysisConfig] = None,
    naive: bool = False,
    truncate: bool = True,
) -> tuple[PathSet, AliasGraph]:
    """Change set and final alias graph for one routine, from an entry
    state with no aliasing and an empty change set.  With `truncate` the
    reported paths are cut to the configured depth; the untruncated set is
    what soundness checks compare against."""
    cfg = cfg or AnalysisConfig()
    try:
        definer, decl = resolved.lookup(class_name, routine)
    except Exception as exc:
        raise UnknownRoutine(f"{class_name}.{routine}") from exc
    del definer  # bare attribute paths in inherited bodies resolve through
    # the flattened attribute table of the analyzed class
    alloc = NodeAlloc()
    graph = initial_graph(resolved, class_name, decl, alloc)
    ctx = _Ctx(resolved, cfg, alloc, class_name, naive=naive)
    state = step(ChangeState(graph, frozenset()), decl.body, ctx)
    if state.graph.context_stack:
        raise AnalysisError("analysis finished with an open call context")
    changed = strip_primed(state.changed)
    if truncate:
        changed = truncate_paths(changed, cfg.max_path_depth)
    return changed, state.graph


def classify_paths(
    resolved: ResolvedProgram, class_name: str, paths: PathSet
) -> frozenset[AccessPath]:
    """Label paths to access paths: first segments that are flattened
    attributes of the class root at Current, anything else roots itself."""
    attrs = resolved.attr_names(class_name)
    return frozenset(AccessPath.of_labels(p, attrs) for p in paths)
