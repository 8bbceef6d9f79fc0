from ..core.program import (
    Allow,
    Assign,
    Block,
    Borrow,
    Call,
    Closure,
    Const,
    Copy,
    Expr,
    FlowDecl,
    FuncDef,
    If,
    Inject,
    Let,
    Move,
    Param,
    Program,
    Seq,
    StructDef,
    StructLit,
    TupleExpr,
)
from ..core.types import Type

INDENT = "    "


def format_type(ty: Type) -> str:
    return str(ty)


def _params(params: tuple[Param, ...]) -> str:
    return ", ".join(f"{p.name}: {format_type(p.type)}" for p in params)


def _statements(expr: Expr, depth: int) -> list[str]:
    pad = INDENT * depth
    lines: list[str] = []
    while True:
        if isinstance(expr, Let):
            head = f"{pad}let {expr.name}"
            if expr.annotation is not None:
                head += f": {format_type(expr.annotation)}"
            head += f" = {format_expr(expr.init, depth)}"
            if expr.rules:
                head += " with flow " + ", ".join(str(r) for r in expr.rules)
            lines.append(head + ";")
            expr = expr.body
        elif isinstance(expr, Seq):
            if isinstance(expr.first, FlowDecl):
                lines.append(f"{pad}flow {expr.first.rule};")
            else:
                lines.append(f"{pad}{format_expr(expr.first, depth)};")
            expr = expr.rest
        else:
            break
    if not (isinstance(expr, Const) and expr.implicit):
        lines.append(pad + format_expr(expr, depth))
    return lines


def _block(body: Expr, depth: int) -> str:
    lines = _statements(body, depth + 1)
    if not lines:
        return "{ }"
    return "{\n" + "\n".join(lines) + "\n" + INDENT * depth + "}"


def format_expr(expr: Expr, depth: int = 0) -> str:
    """Render an expression; nested blocks are indented from ``depth``."""
    if isinstance(expr, Const):
        if isinstance(expr.value, bool):
            return "true" if expr.value else "false"
        if expr.value is None:
            return "()"
        return str(expr.value)
    if isinstance(expr, Move):
        return f"move {expr.place.as_expr()}"
    if isinstance(expr, Copy):
        return f"copy {expr.place}"
    if isinstance(expr, TupleExpr):
        inner = ", ".join(format_expr(e, depth) for e in expr.elements)
        return f"({inner},)" if len(expr.elements) == 1 else f"({inner})"
    if isinstance(expr, StructLit):
        fields = ", ".join(f"{name}: {format_expr(e, depth)}" for name, e in expr.fields)
        return f"{expr.name} {{ {fields} }}"
    if isinstance(expr, Inject):
        return f"{format_type(expr.sum_type)}::{expr.side}({format_expr(expr.value, depth)})"
    if isinstance(expr, Borrow):
        return f"&{expr.omega.value} {expr.place}"
    if isinstance(expr, Allow):
        return f"allow {format_expr(expr.value, depth)}"
    if isinstance(expr, If):
        text = f"if {format_expr(expr.guard, depth)} {_block(_unblock(expr.then), depth)}"
        orelse = _unblock(expr.orelse)
        if isinstance(orelse, Const) and orelse.implicit:
            return text
        return f"{text} else {_block(orelse, depth)}"
    if isinstance(expr, Block):
        return _block(expr.body, depth)
    if isinstance(expr, Closure):
        return f"|{_params(expr.params)}| {_block(_unblock(expr.body), depth)}"
    if isinstance(expr, Call):
        return f"{expr.func}(" + ", ".join(format_expr(a, depth) for a in expr.args) + ")"
    if isinstance(expr, Assign):
        return f"{expr.target} := {format_expr(expr.value, depth)}"
    if isinstance(expr, FlowDecl):
        return f"flow {expr.rule}"
    if isinstance(expr, (Let, Seq)):
        return _block(expr, depth)
    raise TypeError(f"cannot format {type(expr).__name__}")


def _unblock(expr: Expr) -> Expr:
    return expr.body if isinstance(expr, Block) else expr


def format_struct(struct: StructDef) -> str:
    fields = ",\n".join(f"{INDENT}{name}: {format_type(ty)}" for name, ty in struct.type.fields or ())
    if not fields:
        return f"struct {struct.name} {{ }}"
    return f"struct {struct.name} {{\n{fields},\n}}"


def format_function(func: FuncDef) -> str:
    head = f"fn {func.name}({_params(func.params)})"
    if func.is_primitive:
        return head + (" io;" if func.io_effect else ";")
    lines = [f"{INDENT}flow {rule};" for rule in func.contract]
    lines.extend(_statements(_unblock(func.body), 1))
    if not lines:
        return head + " { }"
    return head + " {\n" + "\n".join(lines) + "\n}"


def format_program(program: Program) -> str:
    """Pretty-print ``program``; parsing the result gives back an equal program."""
    items = [format_struct(s) for s in program.structs]
    items.extend(format_function(f) for f in program.functions)
    return "\n\n".join(items) + "\n"
