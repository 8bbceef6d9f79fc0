from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


Selector = Union[int, str]


@dataclass(frozen=True)
class SourceSpan:
    file: str
    start: int
    end: int
    line: int
    column: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"span start {self.start} is after its end {self.end}")

    def merge(self, other: Optional["SourceSpan"]) -> "SourceSpan":
        if other is None:
            return self
        first = self if self.start <= other.start else other
        return SourceSpan(
            file=self.file,
            start=first.start,
            end=max(self.end, other.end),
            line=first.line,
            column=first.column,
        )

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class Path:
    segments: tuple[Selector, ...] = ()

    def __len__(self):
        return len(self.segments)

    def __iter__(self) -> Iterator[Selector]:
        return iter(self.segments)

    def extend(self, *selectors: Selector) -> "Path":
        return Path(self.segments + tuple(selectors))

    def concat(self, other: "Path") -> "Path":
        return Path(self.segments + other.segments)

    def is_prefix_of(self, other: "Path") -> bool:
        n = len(self.segments)
        return n <= len(other.segments) and other.segments[:n] == self.segments

    def __str__(self):
        return "".join(f".{sel}" for sel in self.segments)


EMPTY_PATH = Path()


def visible_root(root: str) -> str:
    """The source name of a root; a shadowed binding is renamed `name#n`."""
    return root.partition("#")[0]


@dataclass(frozen=True)
class Place:
    """A dereference-free location: a variable and a projection path."""

    root: str
    path: Path = EMPTY_PATH

    def project(self, selector: Selector) -> "Place":
        return Place(self.root, self.path.extend(selector))

    def extend(self, path: Path) -> "Place":
        return Place(self.root, self.path.concat(path))

    def is_prefix_of(self, other: "Place") -> bool:
        return self.root == other.root and self.path.is_prefix_of(other.path)

    def overlaps(self, other: "Place") -> bool:
        return self.is_prefix_of(other) or other.is_prefix_of(self)

    def renamed(self, old: str, new: str) -> "Place":
        return Place(new, self.path) if self.root == old else self

    def as_expr(self) -> "PlaceExpr":
        return PlaceExpr(self.root, self.path.segments)

    def sort_key(self) -> tuple:
        return (self.root, tuple((isinstance(sel, str), str(sel)) for sel in self.path))

    def __str__(self):
        # phantom referents of reference parameters are rooted at `*name`
        root = visible_root(self.root)
        if root.startswith("*") and len(self.path):
            return f"({root}){self.path}"
        return f"{root}{self.path}"


@dataclass(frozen=True)
class Deref:
    def __str__(self):
        return "*"


DEREF = Deref()

PlaceOp = Union[Deref, int, str]


@dataclass(frozen=True)
class PlaceExpr:
    root: str
    ops: tuple[PlaceOp, ...] = ()
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    @property
    def has_deref(self) -> bool:
        return any(isinstance(op, Deref) for op in self.ops)

    def as_place(self) -> Optional[Place]:
        if self.has_deref:
            return None
        return Place(self.root, Path(self.ops))

    def project(self, selector: Selector) -> "PlaceExpr":
        return PlaceExpr(self.root, self.ops + (selector,), self.span)

    def deref(self) -> "PlaceExpr":
        return PlaceExpr(self.root, self.ops + (DEREF,), self.span)

    def covers(self, other: "PlaceExpr") -> bool:
        # rules name bindings by their source name, shadowed or not
        if visible_root(self.root) != visible_root(other.root):
            return False
        n = len(self.ops)
        return n <= len(other.ops) and other.ops[:n] == self.ops

    def __str__(self):
        text = visible_root(self.root)
        for op in self.ops:
            if isinstance(op, Deref):
                text = f"*{text}"
            elif text.startswith("*"):
                text = f"({text}).{op}"
            else:
                text = f"{text}.{op}"
        return text


@dataclass(frozen=True)
class Wildcard:
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def __str__(self):
        return "*"


STAR = Wildcard()


@dataclass(frozen=True)
class FnDest:
    name: str
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    def __str__(self):
        return f"fn {self.name}"


AccessExpr = Union[Wildcard, PlaceExpr, FnDest]


@dataclass(frozen=True)
class PlaceContext:
    """A projection chain with a hole at its root.

    Filling the hole with a place gives a leaf place; the same context
    indexes the matching leaf of a delta tree.
    """

    path: Path = EMPTY_PATH

    def fill(self, place: Place) -> Place:
        return place.extend(self.path)

    def within(self, selector: Selector) -> "PlaceContext":
        return PlaceContext(Path((selector,) + self.path.segments))

    def is_prefix_of(self, other: "PlaceContext") -> bool:
        return self.path.is_prefix_of(other.path)

    def __str__(self):
        return f"□{self.path}"


HOLE = PlaceContext()

# `*` ranks below every place and every `fn` destination
BOTTOM = 0


def specificity(access: AccessExpr) -> int:
    if isinstance(access, Wildcard):
        return BOTTOM
    if isinstance(access, FnDest):
        return 1
    return len(access.ops) + 1