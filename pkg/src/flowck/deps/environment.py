from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from ..core.syntax import Place
from ..core.types import Type, leaves
from .delta import DeltaTree


@dataclass(frozen=True)
class DepEnv:
    """Leaf place to the leaf places it depends on; absent keys read as empty."""

    entries: Mapping[Place, frozenset] = field(default_factory=dict)

    def lookup(self, place: Place) -> frozenset:
        return self.entries.get(place, frozenset())

    def __contains__(self, place: Place) -> bool:
        return place in self.entries

    def __len__(self):
        return len(self.entries)

    def update(self, changes: Mapping[Place, frozenset]) -> "DepEnv":
        merged = dict(self.entries)
        merged.update(changes)
        return DepEnv(merged)

    def without_root(self, root: str) -> "DepEnv":
        return DepEnv({p: deps for p, deps in self.entries.items() if p.root != root})

    def rename(self, old: str, new: str) -> "DepEnv":
        return DepEnv(
            {
                place.renamed(old, new): frozenset(dep.renamed(old, new) for dep in deps)
                for place, deps in self.entries.items()
            }
        )

    def join(self, other: "DepEnv") -> "DepEnv":
        merged = dict(self.entries)
        for place, deps in other.entries.items():
            merged[place] = merged.get(place, frozenset()) | deps
        return DepEnv(merged)

    def to_dict(self) -> dict[str, Any]:
        return {
            str(place): sorted(str(dep) for dep in deps)
            for place, deps in sorted(self.entries.items(), key=lambda kv: kv[0].sort_key())
        }


def assign_deps(pi: DepEnv, p: Place, ty: Type, delta: DeltaTree, extra: Iterable[Place] = ()) -> DepEnv:
    """Strong update: each leaf of ``p`` now depends on its slice of ``delta`` plus ``extra``."""
    delta.check_shape(ty)
    extra = frozenset(extra)
    written = {leaf.place: delta.at(leaf.context) | extra for leaf in leaves(p, ty)}
    # keys stay leaves: nothing already tracked sits above or below a written leaf
    assert not any(
        key != place and key.overlaps(place) for key in pi.entries for place in written
    ), f"dependency keys under `{p}` are not leaves of `{ty}`"
    return pi.update(written)


def weaken_deps(pi: DepEnv, p: Place, ty: Type, delta: DeltaTree, extra: Iterable[Place] = ()) -> DepEnv:
    """Weak update, for writes through a reference that may point at several places."""
    delta.check_shape(ty)
    extra = frozenset(extra)
    return pi.update(
        {leaf.place: pi.lookup(leaf.place) | delta.at(leaf.context) | extra for leaf in leaves(p, ty)}
    )
