from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Union

from .syntax import HOLE, Place, PlaceContext, Selector


class Omega(str, Enum):
    SHRD = "shrd"
    UNIQ = "uniq"


@dataclass(frozen=True)
class BaseType:
    name: str

    def __str__(self):
        return self.name


UNIT = BaseType("()")
U32 = BaseType("u32")
BOOL = BaseType("bool")


@dataclass(frozen=True)
class TupleType:
    elements: tuple["Type", ...]

    def __str__(self):
        if len(self.elements) == 1:
            return f"({self.elements[0]},)"
        return "(" + ", ".join(str(t) for t in self.elements) + ")"


@dataclass(frozen=True)
class StructType:
    """A named struct. Equality is nominal.

    ``fields`` is ``None`` for an opaque occurrence: a struct met again
    inside its own expansion, which is treated as a single leaf.
    """

    name: str
    fields: Optional[tuple[tuple[str, "Type"], ...]] = field(
        default=None, compare=False, repr=False
    )

    @property
    def is_opaque(self) -> bool:
        return self.fields is None

    def field_type(self, name: str) -> Optional["Type"]:
        for field_name, ty in self.fields or ():
            if field_name == name:
                return ty
        return None

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class SumType:
    left: "Type"
    right: "Type"

    def __str__(self):
        return f"sum<{self.left}, {self.right}>"


@dataclass(frozen=True)
class RefType:
    omega: Omega
    referent: "Type"

    def __str__(self):
        return f"&{self.omega.value} {self.referent}"


@dataclass(frozen=True)
class ClosureType:
    params: tuple["Type", ...]
    # filled in by the checker; not part of type identity
    captures: tuple[str, ...] = field(default=(), compare=False)
    callees: tuple[str, ...] = field(default=(), compare=False)
    writes: tuple[str, ...] = field(default=(), compare=False)

    def __str__(self):
        return "fn(" + ", ".join(str(t) for t in self.params) + ")"


@dataclass(frozen=True)
class MovedType:
    inner: "Type"

    def __str__(self):
        return f"{self.inner}†"


Type = Union[BaseType, TupleType, StructType, SumType, RefType, ClosureType, MovedType]


class Leaf(NamedTuple):
    context: PlaceContext
    place: Place
    type: Type


def is_copyable(ty: Type) -> bool:
    if isinstance(ty, BaseType):
        return True
    if isinstance(ty, RefType):
        return ty.omega == Omega.SHRD
    if isinstance(ty, TupleType):
        return all(is_copyable(t) for t in ty.elements)
    if isinstance(ty, SumType):
        return is_copyable(ty.left) and is_copyable(ty.right)
    return False


def project_type(ty: Type, selector: Selector) -> Optional[Type]:
    if isinstance(ty, TupleType) and isinstance(selector, int):
        if 0 <= selector < len(ty.elements):
            return ty.elements[selector]
        return None
    if isinstance(ty, StructType) and isinstance(selector, str):
        return ty.field_type(selector)
    return None


def _is_compound(ty: Type) -> bool:
    if isinstance(ty, TupleType):
        return bool(ty.elements)
    if isinstance(ty, StructType):
        return bool(ty.fields)
    return False


def _children(ty: Type) -> tuple[tuple[Selector, Type], ...]:
    if isinstance(ty, TupleType):
        return tuple(enumerate(ty.elements))
    if isinstance(ty, StructType):
        return ty.fields or ()
    return ()


def leaf_contexts(ty: Type) -> tuple[PlaceContext, ...]:
    return tuple(leaf.context for leaf in leaves(Place("_"), ty))


def leaves(place: Place, ty: Type) -> tuple[Leaf, ...]:
    """Decompose ``place: ty`` into its leaves, in declaration order.

    Tuples and structs recurse; base types, references, sums, closures and
    opaque struct occurrences are leaves. Moved-out markers are looked
    through.
    """
    out: list[Leaf] = []

    def walk(ctx: PlaceContext, sub: Type):
        sub = strip_moved(sub)
        if not _is_compound(sub):
            out.append(Leaf(ctx, ctx.fill(place), sub))
            return
        for selector, child in _children(sub):
            walk(PlaceContext(ctx.path.extend(selector)), child)

    walk(HOLE, ty)
    return tuple(out)


def contains_moved(ty: Type) -> bool:
    if isinstance(ty, MovedType):
        return True
    return any(contains_moved(child) for _, child in _children(ty))


def strip_moved(ty: Type) -> Type:
    if isinstance(ty, MovedType):
        return strip_moved(ty.inner)
    if isinstance(ty, TupleType):
        return TupleType(tuple(strip_moved(t) for t in ty.elements))
    if isinstance(ty, StructType) and ty.fields:
        return StructType(ty.name, tuple((n, strip_moved(t)) for n, t in ty.fields))
    return ty


def replace_at(ty: Type, path: tuple[Selector, ...], new: Type) -> Type:
    """Return ``ty`` with the component at ``path`` replaced by ``new``."""
    if not path:
        return new
    head, rest = path[0], path[1:]
    if isinstance(ty, MovedType):
        # reviving part of a moved value leaves its siblings moved
        inner = ty.inner
        if isinstance(inner, TupleType):
            ty = TupleType(tuple(MovedType(t) for t in inner.elements))
        elif isinstance(inner, StructType) and inner.fields:
            ty = StructType(inner.name, tuple((n, MovedType(t)) for n, t in inner.fields))
        else:
            ty = inner
    if isinstance(ty, TupleType) and isinstance(head, int):
        elements = list(ty.elements)
        elements[head] = replace_at(elements[head], rest, new)
        return TupleType(tuple(elements))
    if isinstance(ty, StructType) and ty.fields and isinstance(head, str):
        return StructType(
            ty.name,
            tuple((n, replace_at(t, rest, new) if n == head else t) for n, t in ty.fields),
        )
    raise ValueError(f"no component {head!r} in type {ty}")


def join_types(a: Type, b: Type) -> Type:
    """Join the types an arm of a branch leaves behind: moved in either is moved."""
    if isinstance(a, MovedType) or isinstance(b, MovedType):
        return MovedType(strip_moved(a))
    if isinstance(a, TupleType) and isinstance(b, TupleType):
        return TupleType(tuple(join_types(x, y) for x, y in zip(a.elements, b.elements)))
    if isinstance(a, StructType) and isinstance(b, StructType) and a.fields and b.fields:
        return StructType(
            a.name, tuple((n, join_types(x, y)) for (n, x), (_, y) in zip(a.fields, b.fields))
        )
    return a
