import logging
from dataclasses import dataclass
from typing import Any, Iterable, NamedTuple, Optional, Union

from ..core.syntax import STAR, AccessExpr, Place, PlaceExpr, specificity
from .rules import ContradictionError, FlowRule, applies, covers

logger = logging.getLogger(__name__)


class Permission(NamedTuple):
    """The resolved ``(source, dest, permit)`` triple and the rule behind it."""

    source: AccessExpr
    dest: AccessExpr
    permit: bool
    rule: Optional[FlowRule] = None

    @property
    def triple(self) -> tuple[AccessExpr, AccessExpr, bool]:
        return (self.source, self.dest, self.permit)


DEFAULT_PERMISSION = Permission(STAR, STAR, True)


class FlowWitness(NamedTuple):
    source: Place
    dest: Union[Place, AccessExpr]
    permission: Permission


class AllowResult(NamedTuple):
    allowed: bool
    witness: Optional[FlowWitness] = None

    def __bool__(self):
        return self.allowed


@dataclass(frozen=True)
class PolicyEnv:
    """Lexically scoped flow rules, innermost scope last."""

    scopes: tuple[tuple[FlowRule, ...], ...] = ((),)

    @classmethod
    def of(cls, rules: Iterable[FlowRule]) -> "PolicyEnv":
        return cls((tuple(rules),))

    @property
    def depth(self) -> int:
        return len(self.scopes)

    def push(self) -> "PolicyEnv":
        return PolicyEnv(self.scopes + ((),))

    def pop(self) -> "PolicyEnv":
        if len(self.scopes) == 1:
            raise ValueError("cannot pop the outermost policy scope")
        return PolicyEnv(self.scopes[:-1])

    def declare(self, rule: FlowRule) -> "PolicyEnv":
        for existing in self.scopes[-1]:
            if existing.pair == rule.pair and existing.permit != rule.permit:
                raise ContradictionError(existing, rule)
        return PolicyEnv(self.scopes[:-1] + (self.scopes[-1] + (rule,),))

    def rules(self) -> tuple[FlowRule, ...]:
        """Rules in force: an inner scope shadows an identical pair from an outer one."""
        chosen: dict[tuple[AccessExpr, AccessExpr], FlowRule] = {}
        for scope in self.scopes:
            local: dict[tuple[AccessExpr, AccessExpr], FlowRule] = {}
            for rule in scope:
                prior = local.get(rule.pair)
                # only substituted contracts can hold both; deny wins
                if prior is None or (prior.permit and not rule.permit):
                    local[rule.pair] = rule
            chosen.update(local)
        return tuple(chosen.values())

    def get_min_perms(self, src: Union[Place, PlaceExpr], dst: Union[Place, AccessExpr]) -> Permission:
        return get_min_perms(src, dst, self)

    def is_allowed(self, sources, dests) -> AllowResult:
        return is_allowed(sources, dests, self)

    def to_dict(self) -> dict[str, Any]:
        return {
            "scopes": [
                [
                    {
                        "rule": str(rule),
                        "permit": rule.permit,
                        "span": str(rule.span) if rule.span else None,
                    }
                    for rule in scope
                ]
                for scope in self.scopes
            ]
        }


def declare(psi: PolicyEnv, rule: FlowRule) -> PolicyEnv:
    return psi.declare(rule)


def _as_access(value: Union[Place, AccessExpr]) -> AccessExpr:
    return value.as_expr() if isinstance(value, Place) else value


def _dominates(a: FlowRule, b: FlowRule) -> bool:
    # both rules apply to the same query, so their operands sit on one chain
    return a.pair != b.pair and covers(b.source, a.source) and covers(b.dest, a.dest)


def _rank(rule: FlowRule) -> tuple[int, int, str]:
    return (specificity(rule.source), specificity(rule.dest), str(rule))


def get_min_perms(
    src: Union[Place, PlaceExpr], dst: Union[Place, AccessExpr], psi: PolicyEnv
) -> Permission:
    """Resolve the rule governing a flow from ``src`` to ``dst``.

    Among the applicable rules, those not dominated by a more specific
    applicable rule are maximal. If any maximal rule denies, the flow is
    denied; with no applicable rule the flow is allowed by default.
    """
    source, dest = _as_access(src), _as_access(dst)
    candidates = [rule for rule in psi.rules() if applies(rule, source, dest)]
    if not candidates:
        return DEFAULT_PERMISSION
    maximal = [r for r in candidates if not any(_dominates(o, r) for o in candidates)]
    denying = [r for r in maximal if not r.permit]
    best = max(denying or maximal, key=_rank)
    return Permission(best.source, best.dest, best.permit, best)


def access_sort_key(value: Union[Place, AccessExpr]) -> tuple:
    if isinstance(value, Place):
        return (0,) + value.sort_key()
    return (1, str(value))


def is_allowed(
    sources: Iterable[Place], dests: Iterable[Union[Place, AccessExpr]], psi: PolicyEnv
) -> AllowResult:
    """Check every (source, dest) pair; report the first denied one."""
    ordered_dests = sorted(set(dests), key=access_sort_key)
    for source in sorted(set(sources), key=access_sort_key):
        for dest in ordered_dests:
            permission = get_min_perms(source, dest, psi)
            if not permission.permit:
                logger.debug("flow %s -> %s denied by `%s`", source, dest, permission.rule)
                return AllowResult(False, FlowWitness(source, dest, permission))
    return AllowResult(True)
