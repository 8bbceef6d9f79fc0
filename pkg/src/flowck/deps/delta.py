from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from ..core.syntax import Place, PlaceContext, Selector
from ..core.types import Type, leaf_contexts, leaves


class DeltaShapeError(RuntimeError):
    """Two delta trees (or a tree and a type) disagree on leaf structure."""


@dataclass(frozen=True)
class DeltaTree:
    """Dependencies of a value, one set per leaf of its type.

    Entries are kept in the order ``leaves`` produces, so two trees for
    the same type compare equal exactly when their leaf sets do.
    """

    entries: tuple[tuple[PlaceContext, frozenset], ...]

    @classmethod
    def uniform(cls, ty: Type, deps: Iterable[Place] = ()) -> "DeltaTree":
        deps = frozenset(deps)
        return cls(tuple((ctx, deps) for ctx in leaf_contexts(ty)))

    @classmethod
    def from_mapping(cls, ty: Type, deps: Mapping[PlaceContext, Iterable[Place]]) -> "DeltaTree":
        return cls(tuple((ctx, frozenset(deps.get(ctx, ()))) for ctx in leaf_contexts(ty)))

    def contexts(self) -> tuple[PlaceContext, ...]:
        return tuple(ctx for ctx, _ in self.entries)

    def at(self, ctx: PlaceContext) -> frozenset:
        for key, deps in self.entries:
            if key == ctx:
                return deps
        raise DeltaShapeError(f"no leaf at {ctx} in {self}")

    def within(self, selector: Selector) -> "DeltaTree":
        return DeltaTree(tuple((ctx.within(selector), deps) for ctx, deps in self.entries))

    def renamed(self, old: str, new: str) -> "DeltaTree":
        return DeltaTree(
            tuple((ctx, frozenset(dep.renamed(old, new) for dep in deps)) for ctx, deps in self.entries)
        )

    def check_shape(self, ty: Type) -> "DeltaTree":
        if self.contexts() != leaf_contexts(ty):
            raise DeltaShapeError(f"delta {self} does not match type {ty}")
        return self

    def __str__(self):
        parts = []
        for ctx, deps in self.entries:
            names = ", ".join(sorted(str(p) for p in deps))
            parts.append(f"{ctx}: {{{names}}}")
        return "δ[" + "; ".join(parts) + "]"


def delta_concat(parts: Sequence[tuple[Selector, DeltaTree]]) -> DeltaTree:
    """Build the tree of a tuple or struct from its components' trees."""
    entries: list[tuple[PlaceContext, frozenset]] = []
    for selector, delta in parts:
        entries.extend(delta.within(selector).entries)
    return DeltaTree(tuple(entries))


def delta_empty(ty: Type) -> DeltaTree:
    return DeltaTree.uniform(ty)


def delta_place(p: Place, ty: Type, pi) -> DeltaTree:
    """Every leaf of ``p`` together with what it already depends on."""
    return DeltaTree(
        tuple((leaf.context, frozenset({leaf.place}) | pi.lookup(leaf.place)) for leaf in leaves(p, ty))
    )


def delta_merge(
    d1: DeltaTree, d2: DeltaTree, extra: Iterable[Place] = (), ty: Optional[Type] = None
) -> DeltaTree:
    if ty is not None:
        d1.check_shape(ty)
    if d1.contexts() != d2.contexts():
        raise DeltaShapeError(f"cannot merge {d1} with {d2}")
    extra = frozenset(extra)
    return DeltaTree(
        tuple((ctx, a | b | extra) for (ctx, a), (_, b) in zip(d1.entries, d2.entries))
    )


def delta_leaves(delta: DeltaTree, ty: Optional[Type] = None) -> frozenset:
    if ty is not None:
        delta.check_shape(ty)
    return frozenset().union(*(deps for _, deps in delta.entries))
