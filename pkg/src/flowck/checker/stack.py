from dataclasses import dataclass, field, replace
from typing import Any, Iterator, Mapping, NamedTuple, Optional

from ..core.syntax import Deref, Place, PlaceContext, PlaceExpr, SourceSpan
from ..core.types import (
    ClosureType,
    MovedType,
    Omega,
    RefType,
    StructType,
    TupleType,
    Type,
    join_types,
    project_type,
    replace_at,
    strip_moved,
)
from .diagnostics import CheckError, DiagnosticKind, InternalError


class Loan(NamedTuple):
    omega: Omega
    place: Place

    def renamed(self, old: str, new: str) -> "Loan":
        return Loan(self.omega, self.place.renamed(old, new))

    def __str__(self):
        return f"^{self.omega.value} {self.place}"


# loans per reference leaf of a value, keyed by leaf context
LoanMap = Mapping[PlaceContext, frozenset]


def loan_sort_key(loan: Loan) -> tuple:
    return (loan.omega.value,) + loan.place.sort_key()


@dataclass(frozen=True)
class StackEnv:
    """Variable bindings, latest last, plus the possible referents of every reference leaf."""

    bindings: tuple[tuple[str, Type], ...] = ()
    origins: Mapping[Place, frozenset] = field(default_factory=dict)

    def lookup(self, name: str) -> Optional[Type]:
        for bound, ty in reversed(self.bindings):
            if bound == name:
                return ty
        return None

    def names(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(name for name, _ in self.bindings))

    def bind(self, name: str, ty: Type) -> "StackEnv":
        return StackEnv(self.bindings + ((name, ty),), self.origins)

    def unbind(self, name: str) -> "StackEnv":
        if not self.bindings or self.bindings[-1][0] != name:
            raise InternalError(f"`{name}` is not the innermost binding")
        return StackEnv(self.bindings[:-1], self.origins)

    def type_of(self, place: Place, span: Optional[SourceSpan] = None) -> Type:
        ty = self.lookup(place.root)
        if ty is None:
            raise CheckError(DiagnosticKind.UNKNOWN_NAME, f"unknown variable `{place.root}`", span)
        for selector in place.path:
            moved = isinstance(ty, MovedType)
            sub = project_type(strip_moved(ty) if moved else ty, selector)
            if sub is None:
                raise CheckError(DiagnosticKind.TYPE_ERROR, f"type `{strip_moved(ty)}` has no field `{selector}`", span)
            ty = MovedType(sub) if moved else sub
        return ty

    def set_type(self, place: Place, ty: Type) -> "StackEnv":
        for index in range(len(self.bindings) - 1, -1, -1):
            name, current = self.bindings[index]
            if name == place.root:
                updated = replace_at(current, place.path.segments, ty)
                bindings = self.bindings[:index] + ((name, updated),) + self.bindings[index + 1 :]
                return StackEnv(bindings, self.origins)
        raise InternalError(f"`{place.root}` is not bound")

    def origins_of(self, place: Place) -> frozenset:
        return self.origins.get(place, frozenset())

    def with_origins(self, changes: Mapping[Place, frozenset], strong: bool = True) -> "StackEnv":
        merged = dict(self.origins)
        for place, loans in changes.items():
            merged[place] = loans if strong else merged.get(place, frozenset()) | loans
        return StackEnv(self.bindings, merged)

    def without_origins(self, root: str) -> "StackEnv":
        return StackEnv(self.bindings, {p: l for p, l in self.origins.items() if p.root != root})

    def rename(self, old: str, new: str) -> "StackEnv":
        """Rename the innermost binding of `old`, with its origins and every loan on it."""
        for index in range(len(self.bindings) - 1, -1, -1):
            if self.bindings[index][0] == old:
                break
        else:
            raise InternalError(f"`{old}` is not bound")
        bindings = tuple(
            (new if i == index else name, _rename_captures(ty, old, new))
            for i, (name, ty) in enumerate(self.bindings)
        )
        origins = {
            place.renamed(old, new): frozenset(loan.renamed(old, new) for loan in loans)
            for place, loans in self.origins.items()
        }
        return StackEnv(bindings, origins)

    def join(self, other: "StackEnv") -> "StackEnv":
        if [n for n, _ in self.bindings] != [n for n, _ in other.bindings]:
            raise InternalError("branches left different bindings in scope")
        bindings = tuple(
            (name, join_types(a, b)) for (name, a), (_, b) in zip(self.bindings, other.bindings)
        )
        origins = dict(self.origins)
        for place, loans in other.origins.items():
            origins[place] = origins.get(place, frozenset()) | loans
        return StackEnv(bindings, origins)

    def live_references(self) -> Iterator[tuple[Place, frozenset]]:
        """Reference leaves of every binding that is not moved out, with their loans."""
        for name in self.names():
            ty = self.lookup(name)
            yield from _live_ref_leaves(Place(name), ty, self)

    def to_dict(self) -> dict[str, Any]:
        return {
            "bindings": {name: str(ty) for name, ty in self.bindings},
            "origins": {
                str(place): sorted(str(loan) for loan in loans)
                for place, loans in sorted(self.origins.items(), key=lambda kv: kv[0].sort_key())
            },
        }


def _rename_captures(ty: Type, old: str, new: str) -> Type:
    if isinstance(ty, MovedType):
        return MovedType(_rename_captures(ty.inner, old, new))
    if isinstance(ty, ClosureType) and old in ty.captures + ty.writes:
        return replace(
            ty,
            captures=tuple(new if name == old else name for name in ty.captures),
            writes=tuple(new if name == old else name for name in ty.writes),
        )
    return ty


def _live_ref_leaves(place: Place, ty: Type, gamma: StackEnv) -> Iterator[tuple[Place, frozenset]]:
    if isinstance(ty, MovedType):
        return
    if isinstance(ty, RefType):
        yield place, gamma.origins_of(place)
    elif isinstance(ty, TupleType):
        for index, element in enumerate(ty.elements):
            yield from _live_ref_leaves(place.project(index), element, gamma)
    elif isinstance(ty, StructType) and ty.fields:
        for name, field_type in ty.fields:
            yield from _live_ref_leaves(place.project(name), field_type, gamma)


def place_expr_type(gamma: StackEnv, p: PlaceExpr) -> Type:
    """The type ``p`` denotes, walking projections and dereferences."""
    ty = gamma.lookup(p.root)
    if ty is None:
        raise CheckError(DiagnosticKind.UNKNOWN_NAME, f"unknown variable `{p.root}`", p.span)
    for index, op in enumerate(p.ops):
        moved = isinstance(ty, MovedType)
        base = strip_moved(ty)
        if isinstance(op, Deref):
            if moved:
                prefix = PlaceExpr(p.root, p.ops[:index])
                raise CheckError(DiagnosticKind.MOVE_ERROR, f"use of moved value `{prefix}`", p.span)
            if not isinstance(base, RefType):
                prefix = PlaceExpr(p.root, p.ops[:index])
                raise CheckError(
                    DiagnosticKind.LOAN_ERROR, f"cannot dereference `{prefix}` of type `{base}`", p.span
                )
            ty = base.referent
        else:
            sub = project_type(base, op)
            if sub is None:
                raise CheckError(DiagnosticKind.TYPE_ERROR, f"type `{base}` has no field `{op}`", p.span)
            ty = MovedType(sub) if moved else sub
    return ty


def resolve_loans(gamma: StackEnv, p: PlaceExpr, omega: Omega) -> frozenset:
    """The concrete places ``p`` may denote, as loans of kind ``omega``.

    A place without dereferences resolves to itself. Each dereference
    replaces the current places by the referents recorded for them.
    """
    place_expr_type(gamma, p)
    current = {Place(p.root)}
    for index, op in enumerate(p.ops):
        if not isinstance(op, Deref):
            current = {place.project(op) for place in current}
            continue
        prefix = PlaceExpr(p.root, p.ops[:index])
        resolved: set[Place] = set()
        for place in current:
            ref = strip_moved(gamma.type_of(place, p.span))
            if not isinstance(ref, RefType):
                raise CheckError(
                    DiagnosticKind.LOAN_ERROR, f"cannot dereference `{prefix}` of type `{ref}`", p.span
                )
            if omega == Omega.UNIQ and ref.omega == Omega.SHRD:
                raise CheckError(
                    DiagnosticKind.LOAN_ERROR,
                    f"cannot write or uniquely borrow through shared reference `{prefix}`",
                    p.span,
                )
            loans = gamma.origins_of(place)
            if not loans:
                raise CheckError(DiagnosticKind.LOAN_ERROR, f"reference `{prefix}` has unknown origin", p.span)
            resolved.update(loan.place for loan in loans)
        current = resolved
    return frozenset(Loan(omega, place) for place in current)
