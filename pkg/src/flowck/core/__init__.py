from .syntax import (
    BOTTOM,
    DEREF,
    EMPTY_PATH,
    HOLE,
    STAR,
    AccessExpr,
    Deref,
    FnDest,
    Path,
    Place,
    PlaceContext,
    PlaceExpr,
    SourceSpan,
    Wildcard,
    specificity,
)
from .types import (
    BOOL,
    U32,
    UNIT,
    BaseType,
    ClosureType,
    Leaf,
    MovedType,
    Omega,
    RefType,
    StructType,
    SumType,
    TupleType,
    Type,
    is_copyable,
    leaf_contexts,
    leaves,
)
from .program import (
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
    ParseWarning,
    Program,
    Seq,
    StructDef,
    StructLit,
    TupleExpr,
)

__all__ = [
    "BOTTOM", "DEREF", "EMPTY_PATH", "HOLE", "STAR", "AccessExpr", "Deref", "FnDest",
    "Path", "Place", "PlaceContext", "PlaceExpr", "SourceSpan", "Wildcard", "specificity",
    "BOOL", "U32", "UNIT", "BaseType", "ClosureType", "Leaf", "MovedType", "Omega",
    "RefType", "StructType", "SumType", "TupleType", "Type", "is_copyable",
    "leaf_contexts", "leaves",
    "Allow", "Assign", "Block", "Borrow", "Call", "Closure", "Const", "Copy", "Expr",
    "FlowDecl", "FuncDef", "If", "Inject", "Let", "Move", "Param",
    "ParseWarning", "Program", "Seq", "StructDef", "StructLit", "TupleExpr",
]
