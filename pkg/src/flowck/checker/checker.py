import logging
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Iterable, NamedTuple, Optional, Sequence, Union

from ..core.program import (
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
    StructLit,
    TupleExpr,
    called_functions,
    free_variables,
    walk,
)
from ..core.syntax import HOLE, Deref, FnDest, Place, PlaceContext, PlaceExpr, SourceSpan
from ..core.types import (
    BOOL,
    U32,
    UNIT,
    ClosureType,
    MovedType,
    Omega,
    RefType,
    TupleType,
    Type,
    contains_moved,
    is_copyable,
    leaf_contexts,
    leaves,
    strip_moved,
)
from ..deps import (
    DeltaShapeError,
    DeltaTree,
    DepEnv,
    assign_deps,
    delta_concat,
    delta_empty,
    delta_leaves,
    delta_merge,
    delta_place,
    weaken_deps,
)
from ..policy import (
    ContractWitness,
    ContradictionError,
    FlowRule,
    FlowWitness,
    PolicyEnv,
    caller_implies,
    callee_denials_hold,
    is_allowed,
    substitute,
)
from ..policy.environment import access_sort_key
from .diagnostics import (
    CheckError,
    Diagnostic,
    DiagnosticKind,
    InternalError,
    RuleWitness,
    Severity,
    Span,
    sort_diagnostics,
)
from .stack import Loan, LoanMap, StackEnv, place_expr_type, resolve_loans

logger = logging.getLogger(__name__)

NO_LOANS: LoanMap = MappingProxyType({})

Dest = Union[Place, FnDest]


class Typed(NamedTuple):
    """Result of checking an expression: its type, dependency tree and reference loans."""

    type: Type
    delta: DeltaTree
    loans: LoanMap = NO_LOANS


class _Snapshot(NamedTuple):
    gamma: StackEnv
    pi: DepEnv
    psi: PolicyEnv
    xi: frozenset


@dataclass
class CheckState:
    """Environments threaded through the checking of one function body."""

    function: str
    gamma: StackEnv = field(default_factory=StackEnv)
    pi: DepEnv = field(default_factory=DepEnv)
    psi: PolicyEnv = field(default_factory=PolicyEnv)
    xi: frozenset = frozenset()
    diagnostics: list[Diagnostic] = field(default_factory=list)
    shadowed: int = 0

    def snapshot(self) -> _Snapshot:
        return _Snapshot(self.gamma, self.pi, self.psi, self.xi)

    def restore(self, snapshot: _Snapshot):
        self.gamma, self.pi, self.psi, self.xi = snapshot

    def hide(self, name: str) -> str:
        """A fresh hidden root for a binding about to be shadowed."""
        self.shadowed += 1
        return f"{name}#{self.shadowed}"


class FunctionReport(NamedTuple):
    name: str
    diagnostics: list[Diagnostic]
    pi: DepEnv
    psi: PolicyEnv


class _Argument(NamedTuple):
    typed: Typed
    sources: frozenset
    places: tuple[Place, ...]


def _sorted_places(places: Iterable[Place]) -> tuple[Place, ...]:
    return tuple(sorted(set(places), key=Place.sort_key))


def _renamed(typed: Typed, old: str, new: str) -> Typed:
    loans = {ctx: frozenset(loan.renamed(old, new) for loan in held) for ctx, held in typed.loans.items()}
    return Typed(typed.type, typed.delta.renamed(old, new), loans)


class FlowChecker:
    """Checks every function of a program against its declared flow rules.

    Flow violations are recorded and checking continues as if the flow had
    been permitted. A ``CheckError`` ends the current function only.
    """

    def __init__(self, program: Program):
        self.program = program
        self.reports: dict[str, FunctionReport] = {}
        self._reachable: dict[str, tuple[str, ...]] = {}
        self._handlers: dict[type, Callable[[Expr, CheckState], Typed]] = {
            Const: self.check_const,
            Move: self.check_move,
            Copy: self.check_copy,
            TupleExpr: self.check_tuple,
            StructLit: self.check_struct,
            Inject: self.check_inject,
            Borrow: self.check_borrow,
            Let: self.check_let,
            Assign: self.check_assign,
            If: self.check_if,
            Seq: self.check_seq,
            Block: self.check_block,
            FlowDecl: self.check_flowdecl,
            Allow: self.check_allow,
            Call: self.check_call,
            Closure: self.check_closure,
        }

    # ---- program and functions ----

    def check_program(self) -> list[Diagnostic]:
        diagnostics = [self._alias_warning(warning) for warning in self.program.warnings]
        for func in self.program.functions:
            if func.is_primitive:
                continue
            report = self.check_function(func)
            self.reports[func.name] = report
            diagnostics.extend(report.diagnostics)
        return sort_diagnostics(diagnostics)

    def check_function(self, func: FuncDef) -> FunctionReport:
        state = CheckState(func.name)
        try:
            self._bind_params(func.params, state)
            for rule in func.contract:
                self._declare(rule, state)
            # the body shares the contract's scope
            body = func.body.body if isinstance(func.body, Block) else func.body
            self.check_expr(body, state)
        except CheckError as err:
            state.diagnostics.append(
                Diagnostic(
                    severity=Severity.ERROR,
                    kind=err.kind,
                    message=err.message,
                    span=Span.of(err.span or func.span),
                    function=func.name,
                )
            )
        except (InternalError, DeltaShapeError) as err:
            logger.error("internal error while checking `%s`: %s", func.name, err)
            state.diagnostics.append(
                Diagnostic(
                    severity=Severity.INTERNAL,
                    kind=DiagnosticKind.INTERNAL_ERROR,
                    message=f"internal checker error: {err}",
                    span=Span.of(func.span),
                    function=func.name,
                )
            )
        logger.debug("checked `%s`: %d diagnostics", func.name, len(state.diagnostics))
        return FunctionReport(func.name, state.diagnostics, state.pi, state.psi)

    def _bind_params(self, params: Sequence[Param], state: CheckState):
        for param in params:
            state.gamma = state.gamma.bind(param.name, param.type)
            if isinstance(param.type, RefType):
                # the referent of a reference parameter is the phantom place `*name`
                phantom = Place(f"*{param.name}")
                state.gamma = state.gamma.bind(phantom.root, param.type.referent)
                state.gamma = state.gamma.with_origins(
                    {Place(param.name): frozenset({Loan(param.type.omega, phantom)})}
                )

    def check_expr(self, expr: Expr, state: CheckState) -> Typed:
        handler = self._handlers.get(type(expr))
        if handler is None:
            raise InternalError(f"no typing rule for {type(expr).__name__}")
        return handler(expr, state)

    # ---- diagnostics ----

    def _alias_warning(self, warning: ParseWarning) -> Diagnostic:
        return Diagnostic(
            severity=Severity.WARNING,
            kind=DiagnosticKind.EMPTY_ALIAS,
            message=warning.message,
            span=Span.of(warning.span),
        )

    def _violation(
        self, kind: DiagnosticKind, span: Optional[SourceSpan], witness: FlowWitness, state: CheckState
    ) -> Diagnostic:
        rule = witness.permission.rule
        if isinstance(witness.dest, FnDest):
            target = f"function `{witness.dest.name}`"
        else:
            target = f"`{witness.dest}`"
        return Diagnostic(
            severity=Severity.VIOLATION,
            kind=kind,
            message=f"`{witness.source}` may flow to {target}, which `{rule}` forbids",
            span=Span.of(span),
            function=state.function,
            source=str(witness.source),
            destination=str(witness.dest),
            rule=RuleWitness.of(rule),
        )

    def _check_pairs(
        self,
        pairs: Iterable[tuple[Iterable[Place], Dest]],
        span: Optional[SourceSpan],
        kind: DiagnosticKind,
        state: CheckState,
    ) -> bool:
        """Check (sources, destination) pairs in order; report only the first denied flow."""
        for sources, dest in pairs:
            result = is_allowed((s for s in sources if s != dest), (dest,), state.psi)
            if not result:
                state.diagnostics.append(self._violation(kind, span, result.witness, state))
                return False
        return True

    # ---- policy ----

    def _normalize_operand(self, operand, state: CheckState) -> tuple:
        if not isinstance(operand, PlaceExpr):
            return (operand,)
        place_expr_type(state.gamma, operand)
        if not operand.has_deref:
            return (operand,)
        loans = resolve_loans(state.gamma, operand, Omega.SHRD)
        return tuple(
            PlaceExpr(place.root, place.path.segments, operand.span)
            for place in _sorted_places(loan.place for loan in loans)
        )

    def _declare(self, rule: FlowRule, state: CheckState):
        """Declare ``rule`` in the innermost scope, with dereferences resolved to places."""
        sources = self._normalize_operand(rule.source, state)
        dests = self._normalize_operand(rule.dest, state)
        for source in sources:
            for dest in dests:
                resolved = FlowRule(source, dest, rule.permit, rule.span, rule.origin)
                try:
                    state.psi = state.psi.declare(resolved)
                except ContradictionError as err:
                    state.diagnostics.append(
                        Diagnostic(
                            severity=Severity.ERROR,
                            kind=DiagnosticKind.CONTRADICTION,
                            message=str(err),
                            span=Span.of(rule.span),
                            function=state.function,
                            rule=RuleWitness.of(err.existing),
                        )
                    )

    # ---- values ----

    @staticmethod
    def _value_loans(places: Sequence[Place], ty: Type, state: CheckState) -> LoanMap:
        loans: dict[PlaceContext, frozenset] = {}
        for leaf in leaves(Place("_"), ty):
            if not isinstance(leaf.type, RefType):
                continue
            held = frozenset().union(*(state.gamma.origins_of(leaf.context.fill(p)) for p in places))
            if held:
                loans[leaf.context] = held
        return loans

    @staticmethod
    def _coerce(typed: Typed, ty: Type) -> Typed:
        # an opaque struct occurrence is a single leaf
        if typed.delta.contexts() != leaf_contexts(ty):
            return Typed(ty, DeltaTree.uniform(ty, delta_leaves(typed.delta)), typed.loans)
        return typed

    def _deref_deps(self, p: PlaceExpr, state: CheckState) -> frozenset:
        """The references a dereferencing place expression reads through, with their dependencies."""
        deps: set[Place] = set()
        for index, op in enumerate(p.ops):
            if not isinstance(op, Deref):
                continue
            prefix = PlaceExpr(p.root, p.ops[:index], p.span)
            for loan in resolve_loans(state.gamma, prefix, Omega.SHRD):
                deps.add(loan.place)
                deps.update(state.pi.lookup(loan.place))
        return frozenset(deps)

    def _check_not_moved(self, places: Iterable[Place], span: Optional[SourceSpan], state: CheckState):
        for place in places:
            if contains_moved(state.gamma.type_of(place, span)):
                raise CheckError(DiagnosticKind.MOVE_ERROR, f"use of moved value `{place}`", span)

    def _expect(self, actual: Type, expected: Type, what: str, span: Optional[SourceSpan]):
        if actual != expected:
            raise CheckError(
                DiagnosticKind.TYPE_ERROR, f"{what} has type `{actual}`, expected `{expected}`", span
            )

    def check_const(self, expr: Const, state: CheckState) -> Typed:
        if isinstance(expr.value, bool):
            ty = BOOL
        elif expr.value is None:
            ty = UNIT
        elif isinstance(expr.value, int):
            ty = U32
        else:
            raise InternalError(f"unsupported constant {expr.value!r}")
        return Typed(ty, delta_empty(ty))

    def check_move(self, expr: Move, state: CheckState) -> Typed:
        place = expr.place
        ty = state.gamma.type_of(place, expr.span)
        if contains_moved(ty):
            raise CheckError(DiagnosticKind.MOVE_ERROR, f"use of moved value `{place}`", expr.span)
        if is_copyable(ty):
            raise CheckError(
                DiagnosticKind.MOVE_ERROR,
                f"`{place}` has copyable type `{ty}`; use `copy {place.as_expr()}`",
                expr.span,
            )
        for ref, loans in state.gamma.live_references():
            if place.is_prefix_of(ref):
                continue
            for loan in loans:
                if loan.place.overlaps(place):
                    raise CheckError(
                        DiagnosticKind.LOAN_ERROR,
                        f"cannot move `{place}` while `{ref}` borrows `{loan.place}`",
                        expr.span,
                    )
        delta = delta_place(place, ty, state.pi)
        loans = self._value_loans([place], ty, state)
        state.gamma = state.gamma.set_type(place, MovedType(ty))
        return Typed(ty, delta, loans)

    def check_copy(self, expr: Copy, state: CheckState) -> Typed:
        p = expr.place
        ty = place_expr_type(state.gamma, p)
        places = _sorted_places(loan.place for loan in resolve_loans(state.gamma, p, Omega.SHRD))
        self._check_not_moved(places, expr.span, state)
        ty = strip_moved(ty)
        if not is_copyable(ty):
            raise CheckError(
                DiagnosticKind.TYPE_ERROR, f"cannot copy `{p}` of type `{ty}`; use `move`", expr.span
            )
        delta = delta_place(places[0], ty, state.pi)
        for place in places[1:]:
            delta = delta_merge(delta, delta_place(place, ty, state.pi))
        through = self._deref_deps(p, state)
        if through:
            delta = delta_merge(delta, delta_empty(ty), through)
        return Typed(ty, delta, self._value_loans(places, ty, state))

    def check_tuple(self, expr: TupleExpr, state: CheckState) -> Typed:
        if not expr.elements:
            return Typed(UNIT, delta_empty(UNIT))
        types: list[Type] = []
        parts: list[tuple[int, DeltaTree]] = []
        loans: dict[PlaceContext, frozenset] = {}
        for index, element in enumerate(expr.elements):
            typed = self.check_expr(element, state)
            types.append(typed.type)
            parts.append((index, typed.delta))
            loans.update({ctx.within(index): held for ctx, held in typed.loans.items()})
        return Typed(TupleType(tuple(types)), delta_concat(parts), loans)

    def check_struct(self, expr: StructLit, state: CheckState) -> Typed:
        struct = self.program.struct(expr.name)
        if struct is None:
            raise CheckError(DiagnosticKind.UNKNOWN_NAME, f"unknown struct `{expr.name}`", expr.span)
        declared = [name for name, _ in struct.type.fields or ()]
        given = [name for name, _ in expr.fields]
        if sorted(given) != sorted(declared) or len(set(given)) != len(given):
            raise CheckError(
                DiagnosticKind.TYPE_ERROR,
                f"`{expr.name}` literal must initialize exactly the fields {', '.join(declared)}",
                expr.span,
            )
        checked: dict[str, Typed] = {}
        for name, value in expr.fields:
            expected = struct.type.field_type(name)
            typed = self.check_expr(value, state)
            self._expect(typed.type, expected, f"field `{name}`", value.span or expr.span)
            checked[name] = self._coerce(typed, expected)
        loans: dict[PlaceContext, frozenset] = {}
        for name in declared:
            loans.update({ctx.within(name): held for ctx, held in checked[name].loans.items()})
        delta = delta_concat([(name, checked[name].delta) for name in declared])
        return Typed(struct.type, delta, loans)

    def check_inject(self, expr: Inject, state: CheckState) -> Typed:
        typed = self.check_expr(expr.value, state)
        expected = expr.sum_type.left if expr.side == "left" else expr.sum_type.right
        self._expect(typed.type, expected, f"`{expr.side}` payload", expr.span)
        return Typed(expr.sum_type, DeltaTree.uniform(expr.sum_type, delta_leaves(typed.delta)))

    def check_borrow(self, expr: Borrow, state: CheckState) -> Typed:
        p = expr.place
        ty = place_expr_type(state.gamma, p)
        loans = resolve_loans(state.gamma, p, expr.omega)
        places = _sorted_places(loan.place for loan in loans)
        self._check_not_moved(places, expr.span, state)
        ty = strip_moved(ty)
        ref = RefType(expr.omega, ty)
        # a reference carries what its referent holds
        deps = set(self._deref_deps(p, state))
        for place in places:
            deps.update(delta_leaves(delta_place(place, ty, state.pi)))
        return Typed(ref, DeltaTree.uniform(ref, deps), {HOLE: loans})

    def check_allow(self, expr: Allow, state: CheckState) -> Typed:
        typed = self.check_expr(expr.value, state)
        return Typed(typed.type, delta_empty(typed.type), typed.loans)

    # ---- bindings and assignment ----

    def check_let(self, expr: Let, state: CheckState) -> Typed:
        init = self.check_expr(expr.init, state)
        ty = init.type
        if expr.annotation is not None:
            self._expect(init.type, expr.annotation, f"initializer of `{expr.name}`", expr.span)
            ty = expr.annotation
            init = self._coerce(init, ty)
        scoped = bool(expr.rules)
        saved_psi, saved_xi = state.psi, state.xi
        if scoped:
            state.psi = state.psi.push()
        # the shadowed binding keeps its places, loans and dependencies under a hidden root
        hidden = None
        if state.gamma.lookup(expr.name) is not None:
            hidden = state.hide(expr.name)
            self._rename(state, expr.name, hidden)
            init = _renamed(init, expr.name, hidden)
        place = Place(expr.name)
        state.gamma = state.gamma.bind(expr.name, ty)
        state.pi = state.pi.without_root(expr.name)
        for rule in expr.rules:
            self._declare(rule, state)
        targets = leaves(place, ty)
        self._check_pairs(
            ((init.delta.at(leaf.context) | state.xi, leaf.place) for leaf in targets),
            expr.span,
            DiagnosticKind.FLOW_VIOLATION,
            state,
        )
        state.pi = assign_deps(state.pi, place, ty, init.delta, state.xi)
        state.gamma = state.gamma.with_origins({ctx.fill(place): held for ctx, held in init.loans.items()})

        result = self.check_expr(expr.body, state)

        state.gamma = state.gamma.unbind(expr.name).without_origins(expr.name)
        state.pi = state.pi.without_root(expr.name)
        state.psi, state.xi = saved_psi, saved_xi
        if hidden is not None:
            self._rename(state, hidden, expr.name)
            result = _renamed(result, hidden, expr.name)
        return result

    @staticmethod
    def _rename(state: CheckState, old: str, new: str):
        state.gamma = state.gamma.rename(old, new)
        state.pi = state.pi.rename(old, new)
        state.xi = frozenset(place.renamed(old, new) for place in state.xi)

    def check_assign(self, expr: Assign, state: CheckState) -> Typed:
        value = self.check_expr(expr.value, state)
        target = expr.target
        ty = strip_moved(place_expr_type(state.gamma, target))
        self._expect(value.type, ty, f"value assigned to `{target}`", expr.span)
        value = self._coerce(value, ty)
        if target.has_deref:
            places = _sorted_places(loan.place for loan in resolve_loans(state.gamma, target, Omega.UNIQ))
        else:
            places = (target.as_place(),)
        self._check_pairs(
            (
                (value.delta.at(leaf.context) | state.xi, leaf.place)
                for place in places
                for leaf in leaves(place, ty)
            ),
            expr.span,
            DiagnosticKind.FLOW_VIOLATION,
            state,
        )
        strong = len(places) == 1
        update = assign_deps if strong else weaken_deps
        for place in places:
            state.pi = update(state.pi, place, ty, value.delta, state.xi)
            state.gamma = state.gamma.set_type(place, ty).with_origins(
                {ctx.fill(place): held for ctx, held in value.loans.items()}, strong=strong
            )
        return Typed(UNIT, delta_empty(UNIT))

    # ---- control flow ----

    def check_if(self, expr: If, state: CheckState) -> Typed:
        guard = self.check_expr(expr.guard, state)
        self._expect(guard.type, BOOL, "`if` condition", expr.guard.span or expr.span)
        outer_xi = state.xi
        branch_xi = outer_xi | delta_leaves(guard.delta)
        before = state.snapshot()

        state.xi = branch_xi
        then = self.check_expr(expr.then, state)
        after_then = state.snapshot()

        state.restore(before)
        state.xi = branch_xi
        orelse = self.check_expr(expr.orelse, state)
        self._expect(orelse.type, then.type, "`else` branch", expr.span)
        orelse = self._coerce(orelse, then.type)

        state.gamma = after_then.gamma.join(state.gamma)
        state.pi = after_then.pi.join(state.pi)
        state.psi = before.psi
        state.xi = outer_xi
        delta = delta_merge(then.delta, orelse.delta, branch_xi, then.type)
        loans = dict(then.loans)
        for ctx, held in orelse.loans.items():
            loans[ctx] = loans.get(ctx, frozenset()) | held
        return Typed(then.type, delta, loans)

    def check_seq(self, expr: Seq, state: CheckState) -> Typed:
        self.check_expr(expr.first, state)
        return self.check_expr(expr.rest, state)

    def check_block(self, expr: Block, state: CheckState) -> Typed:
        saved_psi = state.psi
        state.psi = state.psi.push()
        result = self.check_expr(expr.body, state)
        state.psi = saved_psi
        return result

    def check_flowdecl(self, expr: FlowDecl, state: CheckState) -> Typed:
        self._declare(expr.rule, state)
        return Typed(UNIT, delta_empty(UNIT))

    # ---- calls and closures ----

    def _check_argument(self, arg: Expr, param_type: Type, index: int, span, state: CheckState) -> _Argument:
        typed = self.check_expr(arg, state)
        self._expect(typed.type, param_type, f"argument {index + 1}", arg.span or span)
        typed = self._coerce(typed, param_type)
        sources = set(delta_leaves(typed.delta))
        for leaf in leaves(Place("_"), typed.type):
            if isinstance(leaf.type, RefType):
                for loan in typed.loans.get(leaf.context, ()):
                    sources.update(delta_leaves(delta_place(loan.place, leaf.type.referent, state.pi)))
        if isinstance(param_type, RefType):
            places = _sorted_places(loan.place for loan in typed.loans.get(HOLE, ()))
        elif isinstance(arg, Move):
            places = (arg.place,)
        elif isinstance(arg, Copy) and not arg.place.has_deref:
            places = (arg.place.as_place(),)
        elif isinstance(arg, Copy):
            places = _sorted_places(loan.place for loan in resolve_loans(state.gamma, arg.place, Omega.SHRD))
        else:
            places = ()
        return _Argument(typed, frozenset(sources), places)

    def _check_arguments(
        self, name: str, param_types: Sequence[Type], args: Sequence[Expr], span, state: CheckState
    ) -> list[_Argument]:
        if len(args) != len(param_types):
            raise CheckError(
                DiagnosticKind.TYPE_ERROR,
                f"`{name}` takes {len(param_types)} arguments but {len(args)} were given",
                span,
            )
        return [
            self._check_argument(arg, ty, index, span, state)
            for index, (arg, ty) in enumerate(zip(args, param_types))
        ]

    @staticmethod
    def _uniq_targets(param_types: Sequence[Type], arguments: Sequence[_Argument]):
        for ty, argument in zip(param_types, arguments):
            if isinstance(ty, RefType) and ty.omega == Omega.UNIQ:
                for place in argument.places:
                    yield place, ty.referent, len(argument.places) == 1

    def reachable_functions(self, func: FuncDef) -> tuple[str, ...]:
        """Functions ``func`` may call, directly or through other functions, sorted by name."""
        cached = self._reachable.get(func.name)
        if cached is not None:
            return cached
        seen: set[str] = set()
        pending = [func]
        while pending:
            current = pending.pop()
            if current.body is None:
                continue
            for name in called_functions(current.body):
                callee = self.program.function(name)
                if callee is not None and name not in seen:
                    seen.add(name)
                    pending.append(callee)
        seen.discard(func.name)
        self._reachable[func.name] = tuple(sorted(seen))
        return self._reachable[func.name]

    def _contract_violation(self, expr: Call, message: str, witness: ContractWitness, state: CheckState):
        state.diagnostics.append(
            Diagnostic(
                severity=Severity.VIOLATION,
                kind=DiagnosticKind.CONTRACT_VIOLATION,
                message=message,
                span=Span.of(expr.span),
                function=state.function,
                source=str(witness.source),
                destination=str(witness.dest),
                rule=RuleWitness.of(witness.caller.rule),
                callee_rule=RuleWitness.of(witness.callee.rule),
            )
        )

    def check_call(self, expr: Call, state: CheckState) -> Typed:
        local = state.gamma.lookup(expr.func)
        if local is not None:
            return self._apply_closure(expr, local, state)
        callee = self.program.function(expr.func)
        if callee is None:
            raise CheckError(DiagnosticKind.UNKNOWN_NAME, f"unknown function `{expr.func}`", expr.span)
        param_types = [p.type for p in callee.params]
        arguments = self._check_arguments(callee.name, param_types, expr.args, expr.span, state)
        all_sources = frozenset().union(*(a.sources for a in arguments))

        # arguments reach the callee and everything it may call in turn
        reachable = self.reachable_functions(callee)
        self._check_pairs(
            ((all_sources | state.xi, FnDest(name)) for name in (callee.name,) + reachable),
            expr.span,
            DiagnosticKind.FUNCTION_FLOW,
            state,
        )

        actuals = [a.places for a in arguments]
        flowing = [a.sources for a in arguments]
        contract = substitute(callee.contract, callee.params, actuals, origin=callee.name)
        targets = list(self._uniq_targets(param_types, arguments))
        dest_leaves = [leaf.place for place, ty, _ in targets for leaf in leaves(place, ty)]
        implied = caller_implies(state.psi, contract, dest_leaves, flowing, actuals)
        denials = callee_denials_hold(callee.contract, callee.params, flowing, actuals, reachable)
        if not implied:
            witness = implied.witness
            self._contract_violation(
                expr,
                f"call to `{callee.name}` may let `{witness.source}` reach `{witness.dest}`, "
                f"which `{witness.caller.rule}` forbids",
                witness,
                state,
            )
        elif not denials:
            witness = denials.witness
            self._contract_violation(
                expr,
                f"call to `{callee.name}` passes `{witness.source}` through another argument, so it may "
                f"reach `{witness.dest}`, which `{witness.callee.rule}` forbids",
                witness,
                state,
            )
        elif state.xi:
            self._check_pairs(
                ((state.xi, leaf) for leaf in dest_leaves), expr.span, DiagnosticKind.FLOW_VIOLATION, state
            )

        contract_env = PolicyEnv.of(contract)
        for place, ty, strong in targets:
            written = {
                leaf.context: frozenset(
                    s
                    for s in all_sources
                    if s != leaf.place and contract_env.get_min_perms(s, leaf.place).permit
                )
                for leaf in leaves(place, ty)
            }
            update = assign_deps if strong else weaken_deps
            state.pi = update(state.pi, place, ty, DeltaTree.from_mapping(ty, written), state.xi)
        return Typed(UNIT, delta_empty(UNIT))

    def check_closure(self, expr: Closure, state: CheckState) -> Typed:
        bound = frozenset(p.name for p in expr.params)
        captures = tuple(
            name for name in free_variables(expr.body, bound) if state.gamma.lookup(name) is not None
        )
        deps: set[Place] = set()
        for name in captures:
            ty = strip_moved(state.gamma.lookup(name))
            deps.update(delta_leaves(delta_place(Place(name), ty, state.pi)))
        callees: dict[str, None] = {}
        for name in called_functions(expr.body):
            if name in bound:
                continue
            local = state.gamma.lookup(name)
            if isinstance(local, ClosureType):
                callees.update(dict.fromkeys(local.callees))
            elif local is None and self.program.function(name) is not None:
                callees[name] = None
                callees.update(dict.fromkeys(self.reachable_functions(self.program.function(name))))

        # the body is checked once, at the definition, under the policy in force here
        before = state.snapshot()
        self._bind_params(expr.params, state)
        self.check_expr(expr.body, state)
        state.restore(before)

        written: dict[str, None] = {}
        for node in walk(expr.body):
            if isinstance(node, Assign):
                written[node.target.root] = None
            elif isinstance(node, Borrow) and node.omega == Omega.UNIQ:
                written[node.place.root] = None
        writes = tuple(name for name in written if name in captures)
        ty = ClosureType(tuple(p.type for p in expr.params), captures, tuple(callees), writes)
        return Typed(ty, DeltaTree.uniform(ty, deps))

    def _apply_closure(self, expr: Call, local: Type, state: CheckState) -> Typed:
        if isinstance(local, MovedType):
            raise CheckError(DiagnosticKind.MOVE_ERROR, f"use of moved closure `{expr.func}`", expr.span)
        if not isinstance(local, ClosureType):
            raise CheckError(DiagnosticKind.TYPE_ERROR, f"`{expr.func}` of type `{local}` is not callable", expr.span)
        arguments = self._check_arguments(expr.func, local.params, expr.args, expr.span, state)
        all_sources = frozenset().union(*(a.sources for a in arguments))
        closure_deps = delta_leaves(delta_place(Place(expr.func), local, state.pi))
        flowing = all_sources | closure_deps | state.xi

        captured: list[tuple[Place, Type]] = []
        for name in local.captures:
            ty = state.gamma.lookup(name)
            if ty is not None:
                captured.append((Place(name), strip_moved(ty)))
        capture_leaves = sorted(
            (leaf.place for place, ty in captured for leaf in leaves(place, ty)), key=access_sort_key
        )
        self._check_pairs(
            ((all_sources | state.xi, leaf) for leaf in capture_leaves),
            expr.span,
            DiagnosticKind.CAPTURE_VIOLATION,
            state,
        )
        self._check_pairs(
            ((flowing, FnDest(name)) for name in sorted(local.callees)),
            expr.span,
            DiagnosticKind.FUNCTION_FLOW,
            state,
        )
        targets = list(self._uniq_targets(local.params, arguments))
        self._check_pairs(
            ((flowing, leaf.place) for place, ty, _ in targets for leaf in leaves(place, ty)),
            expr.span,
            DiagnosticKind.FLOW_VIOLATION,
            state,
        )
        for place, ty, strong in targets:
            update = assign_deps if strong else weaken_deps
            written = DeltaTree.uniform(ty, flowing - {leaf.place for leaf in leaves(place, ty)})
            state.pi = update(state.pi, place, ty, written, state.xi)
        for place, ty in captured:
            if place.root in local.writes:
                state.pi = weaken_deps(state.pi, place, ty, DeltaTree.uniform(ty, all_sources), state.xi)
        return Typed(UNIT, delta_empty(UNIT))


def check_program(program: Program) -> list[Diagnostic]:
    """Check every function of ``program``; the result is empty iff the program is flow-safe."""
    return FlowChecker(program).check_program()
