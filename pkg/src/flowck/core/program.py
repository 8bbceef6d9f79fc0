from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator, NamedTuple, Optional, Union

from .syntax import Place, PlaceExpr, SourceSpan
from .types import Omega, StructType, SumType, Type

if TYPE_CHECKING:
    from ..policy.rules import FlowRule


def _span():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Const:
    value: Union[bool, int, None]
    # an implicit `()` closes a block that ends in a statement
    implicit: bool = field(default=False, compare=False)
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Move:
    place: Place
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Copy:
    place: PlaceExpr
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class TupleExpr:
    elements: tuple["Expr", ...]
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class StructLit:
    name: str
    fields: tuple[tuple[str, "Expr"], ...]
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Inject:
    sum_type: SumType
    side: str
    value: "Expr"
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Borrow:
    omega: Omega
    place: PlaceExpr
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Let:
    name: str
    annotation: Optional[Type]
    rules: tuple["FlowRule", ...]
    init: "Expr"
    body: "Expr"
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Assign:
    target: PlaceExpr
    value: "Expr"
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class If:
    guard: "Expr"
    then: "Expr"
    orelse: "Expr"
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Seq:
    first: "Expr"
    rest: "Expr"
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Block:
    body: "Expr"
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class FlowDecl:
    rule: "FlowRule"
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Allow:
    value: "Expr"
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Param:
    name: str
    type: Type
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class Closure:
    params: tuple[Param, ...]
    body: "Expr"
    span: Optional[SourceSpan] = _span()


Expr = Union[
    Const, Move, Copy, TupleExpr, StructLit, Inject, Borrow, Let, Assign, If,
    Seq, Block, FlowDecl, Allow, Call, Closure,
]


@dataclass(frozen=True)
class FuncDef:
    name: str
    params: tuple[Param, ...]
    contract: tuple["FlowRule", ...]
    body: Optional[Expr]
    io_effect: bool = False
    span: Optional[SourceSpan] = _span()

    @property
    def is_primitive(self) -> bool:
        return self.body is None


@dataclass(frozen=True)
class StructDef:
    name: str
    type: StructType
    span: Optional[SourceSpan] = _span()


class ParseWarning(NamedTuple):
    message: str
    span: Optional[SourceSpan]


@dataclass(frozen=True)
class Program:
    functions: tuple[FuncDef, ...]
    structs: tuple[StructDef, ...] = ()
    entry: str = "main"
    file: str = field(default="<input>", compare=False)
    warnings: tuple[ParseWarning, ...] = field(default=(), compare=False)

    def function(self, name: str) -> Optional[FuncDef]:
        for func in self.functions:
            if func.name == name:
                return func
        return None

    def struct(self, name: str) -> Optional[StructDef]:
        for struct in self.structs:
            if struct.name == name:
                return struct
        return None


def children(expr: Expr) -> tuple[Expr, ...]:
    if isinstance(expr, (TupleExpr,)):
        return expr.elements
    if isinstance(expr, StructLit):
        return tuple(e for _, e in expr.fields)
    if isinstance(expr, (Inject, Allow)):
        return (expr.value,)
    if isinstance(expr, Let):
        return (expr.init, expr.body)
    if isinstance(expr, Assign):
        return (expr.value,)
    if isinstance(expr, If):
        return (expr.guard, expr.then, expr.orelse)
    if isinstance(expr, Seq):
        return (expr.first, expr.rest)
    if isinstance(expr, Block):
        return (expr.body,)
    if isinstance(expr, Call):
        return expr.args
    if isinstance(expr, Closure):
        return (expr.body,)
    return ()


def walk(expr: Expr) -> Iterator[Expr]:
    yield expr
    for child in children(expr):
        yield from walk(child)


def free_variables(expr: Expr, bound: frozenset = frozenset()) -> tuple[str, ...]:
    """Variables read, written or named by ``expr`` that it does not bind, in order of appearance."""
    seen: dict[str, None] = {}

    def note(name: str, scope: frozenset):
        if name not in scope:
            seen.setdefault(name, None)

    def visit(e: Expr, scope: frozenset):
        if isinstance(e, Move):
            note(e.place.root, scope)
        elif isinstance(e, (Copy, Borrow)):
            note(e.place.root, scope)
        elif isinstance(e, Assign):
            note(e.target.root, scope)
            visit(e.value, scope)
        elif isinstance(e, FlowDecl):
            for operand in (e.rule.source, e.rule.dest):
                if isinstance(operand, PlaceExpr):
                    note(operand.root, scope)
        elif isinstance(e, Let):
            visit(e.init, scope)
            inner = scope | {e.name}
            for rule in e.rules:
                visit(FlowDecl(rule), inner)
            visit(e.body, inner)
        elif isinstance(e, Closure):
            visit(e.body, scope | {p.name for p in e.params})
        elif isinstance(e, Call):
            # a call names either a global function or a local closure
            note(e.func, scope)
            for arg in e.args:
                visit(arg, scope)
        else:
            for child in children(e):
                visit(child, scope)

    visit(expr, bound)
    return tuple(seen)


def called_functions(expr: Expr) -> tuple[str, ...]:
    names: dict[str, None] = {}
    for node in walk(expr):
        if isinstance(node, Call):
            names.setdefault(node.func, None)
    return tuple(names)
