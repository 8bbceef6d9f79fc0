from dataclasses import dataclass, field
from typing import Optional

from ..core.syntax import AccessExpr, FnDest, PlaceExpr, SourceSpan, Wildcard


class PolicyError(ValueError):
    """A malformed flow rule."""


class ContradictionError(PolicyError):
    def __init__(self, existing: "FlowRule", rule: "FlowRule"):
        self.existing = existing
        self.rule = rule
        where = f" (declared at {existing.span})" if existing.span else ""
        super().__init__(f"rule `{rule}` contradicts `{existing}`{where}")


@dataclass(frozen=True)
class FlowRule:
    source: AccessExpr
    dest: AccessExpr
    permit: bool
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)
    # callee that declared the rule, for substituted contracts
    origin: Optional[str] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if isinstance(self.source, FnDest):
            raise PolicyError(f"`{self.source}` cannot be the source of a flow rule")
        if isinstance(self.source, Wildcard):
            raise PolicyError("`*` cannot be the source of a flow rule")

    @property
    def pair(self) -> tuple[AccessExpr, AccessExpr]:
        return (self.source, self.dest)

    def __str__(self):
        arrow = "->" if self.permit else "->!"
        return f"{self.source} {arrow} {self.dest}"


def covers(a1: AccessExpr, a2: AccessExpr) -> bool:
    """The covering relation: ``a1`` syntactically represents access to ``a2``."""
    if isinstance(a1, Wildcard):
        return True
    if isinstance(a1, FnDest):
        return isinstance(a2, FnDest) and a1.name == a2.name
    if isinstance(a2, PlaceExpr):
        return a1.covers(a2)
    return False


def applies(rule: FlowRule, source: AccessExpr, dest: AccessExpr) -> bool:
    """Whether ``rule`` governs a flow from ``source`` to ``dest``.

    `*` destinations range over places; flows into a function are governed
    only by rules naming a `fn` destination.
    """
    if isinstance(dest, FnDest) and isinstance(rule.dest, Wildcard):
        return False
    return covers(rule.source, source) and covers(rule.dest, dest)
