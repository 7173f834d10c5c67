"""Render a program back to `.mol` source that reparses structurally equal."""

from __future__ import annotations

from .ast import (
    Assign,
    Choice,
    ClassDecl,
    Create,
    Expr,
    FnCall,
    Instruction,
    Loop,
    OpaqueExpr,
    PathExpr,
    Program,
    QCall,
    RoutineDecl,
    Seq,
    UCall,
    seq_list,
)


def pretty_program(program: Program) -> str:
    return "\n".join(pretty_class(c) for c in program.classes)


def pretty_class(decl: ClassDecl) -> str:
    lines = [f"class {decl.name}"]
    if decl.parent:
        inherit = f"inherit {decl.parent}"
        if decl.redefine_names:
            inherit += f" redefine {', '.join(decl.redefine_names)} end"
        lines.append(inherit)
    lines.append("feature")
    for group_name, type_name in decl.attributes:
        lines.append(f"    {group_name}: {type_name}")
    for mq in decl.model_queries:
        lines.append(f"    model {mq.name} -> {', '.join(mq.backing)}")
    for routine in decl.routines:
        lines.append(pretty_routine(routine))
    lines.append("end")
    return "\n".join(lines) + "\n"


def pretty_routine(r: RoutineDecl) -> str:
    formals = "; ".join(f"{n}: {t}" for n, t in r.formals)
    header = f"    {r.name} ({formals})"
    if r.is_function:
        header += f": {r.result_type}"
    lines = [header]
    if r.modify_clause is not None:
        lines.append(f"        modify {', '.join(r.modify_clause)}")
    for n, t in r.locals_:
        lines.append(f"        {n}: {t}")
    lines.append("        do")
    lines.extend(_pretty_instrs(r.body, 12))
    if r.ensure_clause is not None:
        lines.append("        ensure")
        for assertion in r.ensure_clause:
            lines.append(f"            {assertion.text}")
    lines.append("        end")
    return "\n".join(lines)


def _pretty_instrs(inst: Instruction | None, indent: int) -> list[str]:
    pad = " " * indent
    out = []
    for item in seq_list(inst):
        out.extend(_pretty_inst(item, pad, indent))
    return out


def _pretty_inst(inst: Instruction, pad: str, indent: int) -> list[str]:
    if isinstance(inst, Assign):
        return [f"{pad}{inst.target.dotted()} := {pretty_expr(inst.rhs)}"]
    if isinstance(inst, Create):
        return [f"{pad}create {inst.target.dotted()}"]
    if isinstance(inst, UCall):
        args = ", ".join(pretty_expr(a) for a in inst.args)
        return [f"{pad}call {inst.name} ({args})"]
    if isinstance(inst, QCall):
        args = ", ".join(pretty_expr(a) for a in inst.args)
        return [f"{pad}call {inst.target.dotted()}.{inst.name} ({args})"]
    if isinstance(inst, Choice):
        head = f"{pad}then"
        if inst.cond is not None:
            head += f" ({inst.cond.text})"
        out = [head]
        out.extend(_pretty_instrs(inst.then_branch, indent + 4))
        if inst.else_branch is not None:
            out.append(f"{pad}else")
            out.extend(_pretty_instrs(inst.else_branch, indent + 4))
        out.append(f"{pad}end")
        return out
    if isinstance(inst, Loop):
        out = [f"{pad}loop"]
        out.extend(_pretty_instrs(inst.body, indent + 4))
        out.append(f"{pad}end")
        return out
    if isinstance(inst, Seq):
        return _pretty_instrs(inst, indent)
    raise TypeError(f"unknown instruction {inst!r}")


def pretty_expr(expr: Expr) -> str:
    if isinstance(expr, PathExpr):
        return expr.path.dotted()
    if isinstance(expr, OpaqueExpr):
        return expr.text if expr.text else "0"
    if isinstance(expr, FnCall):
        prefix = expr.target.dotted() + "." if expr.target is not None else ""
        args = ", ".join(pretty_expr(a) for a in expr.args)
        return f"{prefix}{expr.name} ({args})"
    raise TypeError(f"unknown expression {expr!r}")
