from typing import Iterable, NamedTuple, Optional, Sequence, Union

from ..core.syntax import DEREF, AccessExpr, FnDest, Place, PlaceExpr
from ..core.types import RefType
from .environment import Permission, PolicyEnv, get_min_perms, access_sort_key
from .rules import FlowRule, covers


class ContractWitness(NamedTuple):
    source: Place
    dest: Union[Place, AccessExpr]
    caller: Permission
    callee: Permission


class ImplicationResult(NamedTuple):
    ok: bool
    witness: Optional[ContractWitness] = None

    def __bool__(self):
        return self.ok


def _substitute_operand(operand: AccessExpr, formals: dict) -> Optional[tuple[AccessExpr, ...]]:
    if not isinstance(operand, PlaceExpr):
        return (operand,)
    if operand.root not in formals:
        return None
    param, actuals = formals[operand.root]
    ops = operand.ops
    # a reference formal stands for its referent
    if isinstance(param.type, RefType) and ops and ops[0] == DEREF:
        ops = ops[1:]
    if DEREF in ops or not actuals:
        return None
    return tuple(
        PlaceExpr(actual.root, actual.path.segments + ops, operand.span) for actual in actuals
    )


def substitute(
    contract: Iterable[FlowRule],
    formals: Sequence,
    actuals: Sequence[Sequence[Place]],
    origin: Optional[str] = None,
) -> list[FlowRule]:
    """Rewrite a callee contract in terms of the caller's places.

    ``formals`` are the callee's parameters; ``actuals[i]`` are the places
    the i-th argument denotes (its moved or copied place, or the places a
    reference argument may point to). Rules naming callee locals, or
    formals bound to no place, are dropped.
    """
    if len(formals) != len(actuals):
        raise ValueError(f"expected {len(formals)} actuals, got {len(actuals)}")
    table = {param.name: (param, tuple(acts)) for param, acts in zip(formals, actuals)}
    out: list[FlowRule] = []
    for rule in contract:
        sources = _substitute_operand(rule.source, table)
        dests = _substitute_operand(rule.dest, table)
        if sources is None or dests is None:
            continue
        for source in sources:
            for dest in dests:
                out.append(
                    FlowRule(source, dest, rule.permit, span=rule.span, origin=origin or rule.origin)
                )
    return out


def _argument_reaches(rule: FlowRule, actuals: Sequence[Place]) -> bool:
    return any(covers(rule.source, a.as_expr()) or covers(a.as_expr(), rule.source) for a in actuals)


def caller_implies(
    psi_caller: PolicyEnv,
    contract: Sequence[FlowRule],
    uniq_ref_actuals: Iterable[Place],
    flowing_sources: Sequence[Iterable[Place]],
    actual_places: Optional[Sequence[Sequence[Place]]] = None,
) -> ImplicationResult:
    """Check that every flow the callee may perform is also permitted by the caller.

    A source may reach a uniq-ref actual unless the substituted contract
    denies it; the caller must then permit that flow. A contract rule
    ``x -> fn g`` declares that the callee may hand ``x`` to ``g``, so the
    caller must permit every source of the matching argument to reach ``g``.
    """
    flowing = [frozenset(group) for group in flowing_sources]
    sources = sorted(frozenset().union(*flowing), key=access_sort_key)
    contract_env = PolicyEnv.of(contract)
    for dest in sorted(set(uniq_ref_actuals), key=access_sort_key):
        for source in sources:
            if source == dest:
                continue
            callee = get_min_perms(source, dest, contract_env)
            if not callee.permit:
                continue
            caller = get_min_perms(source, dest, psi_caller)
            if not caller.permit:
                return ImplicationResult(False, ContractWitness(source, dest, caller, callee))

    for rule in contract:
        if not (rule.permit and isinstance(rule.dest, FnDest)):
            continue
        if actual_places is None:
            reaching = [s for s in sources if covers(rule.source, s.as_expr())]
        else:
            reaching = sorted(
                frozenset().union(
                    *(group for group, acts in zip(flowing, actual_places) if _argument_reaches(rule, acts))
                ),
                key=access_sort_key,
            )
        for source in reaching:
            caller = get_min_perms(source, rule.dest, psi_caller)
            if not caller.permit:
                callee = Permission(rule.source, rule.dest, True, rule)
                return ImplicationResult(False, ContractWitness(source, rule.dest, caller, callee))
    return ImplicationResult(True)


def callee_denials_hold(
    contract: Iterable[FlowRule],
    formals: Sequence,
    flowing_sources: Sequence[Iterable[Place]],
    actual_places: Sequence[Sequence[Place]],
    reaches: Optional[Iterable[str]] = None,
) -> ImplicationResult:
    """Check the callee's ``x ->! fn g`` rules against aliasing arguments.

    The callee is checked with its formals kept apart, so such a rule says
    nothing about data of ``x`` that arrives through another argument. A
    call that passes it that way may hand it to ``g``. ``reaches`` limits
    the check to functions the callee may call.
    """
    if len(formals) != len(actual_places):
        raise ValueError(f"expected {len(formals)} actuals, got {len(actual_places)}")
    flowing = [frozenset(group) for group in flowing_sources]
    reachable = None if reaches is None else frozenset(reaches)
    table = {param.name: (param, tuple(acts)) for param, acts in zip(formals, actual_places)}
    position = {param.name: index for index, param in enumerate(formals)}
    for rule in contract:
        if rule.permit or not isinstance(rule.dest, FnDest):
            continue
        if reachable is not None and rule.dest.name not in reachable:
            continue
        if not isinstance(rule.source, PlaceExpr) or rule.source.root not in position:
            continue
        sources = _substitute_operand(rule.source, table)
        if not sources:
            continue
        own = position[rule.source.root]
        for index, group in enumerate(flowing):
            if index == own:
                continue
            for source in sorted(group, key=access_sort_key):
                for src in sources:
                    if covers(src, source.as_expr()):
                        denial = Permission(src, rule.dest, False, FlowRule(src, rule.dest, False, rule.span))
                        callee = Permission(rule.source, rule.dest, False, rule)
                        return ImplicationResult(False, ContractWitness(source, rule.dest, denial, callee))
    return ImplicationResult(True)
