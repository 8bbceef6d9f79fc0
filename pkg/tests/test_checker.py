import json

import pytest
from pydantic import ValidationError

from flowck import parse_program
from flowck.checker import (
    CheckError,
    CheckState,
    Diagnostic,
    DiagnosticKind,
    FlowChecker,
    Loan,
    Severity,
    StackEnv,
    dump_diagnostics,
    load_diagnostics,
    resolve_loans,
)
from flowck.core import BOOL, DEREF, STAR, U32, UNIT, Omega, Place, PlaceExpr, RefType
from flowck.core.program import Block, Const, If, Let, Program, walk
from flowck.deps import delta_leaves
from flowck.policy import FlowRule


def kinds(diagnostics):
    return [d.kind for d in diagnostics]


class TestValues:
    @pytest.mark.parametrize("value, ty", [(True, BOOL), (3, U32), (None, UNIT)])
    def test_constants_have_no_dependencies(self, value, ty):
        typed = FlowChecker(Program(())).check_const(Const(value), CheckState("t"))
        assert typed.type == ty
        assert delta_leaves(typed.delta) == frozenset()

    def test_no_rules_no_diagnostics(self, check):
        assert check("fn main(s: u32) { let t: u32 = copy s; let u: (u32, bool) = (copy t, true); }") == []

    def test_copy_carries_existing_dependencies(self, checked):
        checker, diagnostics = checked(
            "fn main(s: u32, x: u32, y: u32) { x := copy s; y := copy x; }"
        )
        assert diagnostics == []
        assert checker.reports["main"].pi.lookup(Place("y")) == {Place("x"), Place("s")}


class TestLet:
    def test_denied_initializer(self, check):
        (diagnostic,) = check("fn main(s: u32) { flow s ->! *; let t: u32 = copy s; }")
        assert diagnostic.kind == DiagnosticKind.FLOW_VIOLATION
        assert diagnostic.severity == Severity.VIOLATION
        assert (diagnostic.source, diagnostic.destination) == ("s", "t")
        assert diagnostic.rule.rule == "s ->! *"
        assert diagnostic.function == "main"

    def test_with_flow_overrides_for_the_binding(self, check):
        assert check("fn main(s: u32) { flow s ->! *; let t: u32 = copy s with flow s -> t; }") == []

    def test_with_flow_rules_are_scoped_to_the_let(self, check):
        diagnostics = check(
            """
            fn main(s: u32, x: u32) {
                flow s ->! *;
                {
                    let t: u32 = copy s with flow s -> t, t -> x;
                }
                x := copy s;
            }
            """
        )
        assert [(d.source, d.destination) for d in diagnostics] == [("s", "x")]

    def test_implicit_flow_from_a_guard(self, check):
        (diagnostic,) = check("fn main(g: bool) { flow g ->! *; if copy g { let t: u32 = 3; } }")
        assert (diagnostic.source, diagnostic.destination) == ("g", "t")

    def test_constant_guard_adds_nothing(self, check):
        assert check("fn main(g: bool) { flow g ->! *; if true { let t: u32 = 3; } }") == []

    def test_tuple_leaves_are_checked_separately(self, check):
        diagnostics = check(
            """
            fn main(x: u32, y: u32) {
                let t: (u32, u32) = (copy x, copy y);
                flow x ->! t.1;
                t.1 := copy t.0;
            }
            """
        )
        assert [(d.source, d.destination) for d in diagnostics] == [("x", "t.1")]

    def test_other_leaf_is_unaffected(self, check):
        source = """
            fn main(x: u32, y: u32) {
                let t: (u32, u32) = (copy x, copy y);
                flow x ->! t.1;
                t.0 := copy t.1;
            }
        """
        assert check(source) == []

    def test_shadowing_keeps_the_borrowed_binding(self, check):
        (diagnostic,) = check(
            """
            fn main(s: u32, y: u32) {
                flow s ->! y;
                let x = copy s;
                let r = allow &shrd x;
                let x = 1;
                y := copy *r;
            }
            """
        )
        assert diagnostic.kind == DiagnosticKind.FLOW_VIOLATION
        assert (diagnostic.source, diagnostic.destination) == ("s", "y")

    def test_shadowed_binding_is_reported_by_its_name(self, check):
        (diagnostic,) = check(
            """
            fn main(y: u32) {
                let x = 7;
                flow x ->! y;
                let r = &shrd x;
                let x = 1;
                y := copy *r;
            }
            """
        )
        assert (diagnostic.source, diagnostic.destination) == ("x", "y")

    def test_shadowed_binding_is_restored_after_the_block(self, checked):
        checker, diagnostics = checked(
            """
            fn main(s: u32, y: u32) {
                flow s ->! y;
                let x = copy s;
                { let x = 1; }
                y := copy x;
            }
            """
        )
        assert [(d.source, d.destination) for d in diagnostics] == [("s", "y")]
        assert all("#" not in place.root for place in checker.reports["main"].pi.entries)


class TestAssign:
    def test_denied_assignment(self, check):
        (diagnostic,) = check("fn main(s: u32, x: u32) { flow s ->! x; x := copy s; }")
        assert (diagnostic.source, diagnostic.destination) == ("s", "x")

    def test_allow_clears_the_value_dependencies(self, checked):
        checker, diagnostics = checked("fn main(s: u32, x: u32) { flow s ->! *; x := allow (copy s); }")
        assert diagnostics == []
        assert checker.reports["main"].pi.lookup(Place("x")) == frozenset()

    def test_allow_keeps_branch_dependencies(self, check):
        (diagnostic,) = check(
            "fn main(s: bool, x: bool) { flow s ->! x; if copy s { x := allow (copy s); } }"
        )
        assert (diagnostic.source, diagnostic.destination) == ("s", "x")

    def test_allow_does_not_hide_violations_inside_it(self, check):
        (diagnostic,) = check(
            "fn main(s: u32, x: u32, y: u32) { flow s ->! *; x := allow { y := copy s; copy y }; }"
        )
        assert diagnostic.destination == "y"

    def test_violations_do_not_stop_checking(self, check):
        diagnostics = check("fn main(s: u32, x: u32, y: u32) { flow s ->! *; x := copy s; y := copy s; }")
        assert [d.destination for d in diagnostics] == ["x", "y"]


class TestBranches:
    def test_assignment_under_a_guard_depends_on_it(self, checked):
        checker, _ = checked("fn main(s: bool, x: u32) { if copy s { x := 3; } }")
        assert Place("s") in checker.reports["main"].pi.lookup(Place("x"))

    def test_both_arms_are_joined(self, checked):
        checker, _ = checked(
            """
            fn main(g: bool, a: u32, b: u32, x: u32) {
                if copy g { x := copy a; } else { x := copy b; }
            }
            """
        )
        assert checker.reports["main"].pi.lookup(Place("x")) == {Place("a"), Place("b"), Place("g")}

    def test_arms_must_agree_on_type(self, check):
        (diagnostic,) = check("fn main(g: bool) { let x: u32 = if copy g { 1 } else { true }; }")
        assert diagnostic.kind == DiagnosticKind.TYPE_ERROR


def _first(node_type, text):
    """Parse ``text``; return a checker, its `main` function and the first ``node_type`` node of its body."""
    checker = FlowChecker(parse_program(text, "test.ifc"))
    func = checker.program.function("main")
    return checker, func, next(node for node in walk(func.body.body) if isinstance(node, node_type))


def _fresh_state(func, *rules):
    state = CheckState(func.name)
    for param in func.params:
        state.gamma = state.gamma.bind(param.name, param.type)
    for rule in rules:
        state.psi = state.psi.declare(rule)
    state.xi = frozenset({Place("g")})
    return state


S_DENIED = FlowRule(PlaceExpr("s"), STAR, False)
SIGNATURE = "fn main(s: u32, g: bool, x: u32, y: u32)"


class TestState:
    @pytest.mark.parametrize(
        "node_type, body",
        [
            (Block, "{ { flow s -> x; x := copy s; } }"),
            (Let, "{ let z: u32 = copy s with flow s -> z; z := 1; }"),
            (If, "{ if copy g { flow s -> x; x := copy s; } else { x := 1; } }"),
        ],
    )
    def test_policy_and_branch_context_are_restored(self, node_type, body):
        checker, func, node = _first(node_type, SIGNATURE + " " + body)
        state = _fresh_state(func, S_DENIED)
        psi, xi = state.psi, state.xi
        checker.check_expr(node, state)
        assert state.diagnostics == []
        assert state.psi == psi
        assert state.xi == xi

    def test_nested_allow_is_the_same_as_one(self):
        results = []
        for value in ["allow { y := copy s; &shrd y }", "allow (allow { y := copy s; &shrd y })"]:
            text = f"{SIGNATURE} {{ let z: &shrd u32 = {value}; }}"
            checker, func, let = _first(Let, text)
            state = _fresh_state(func, S_DENIED)
            typed = checker.check_expr(let.init, state)
            results.append((typed, [(d.kind, d.source, d.destination) for d in state.diagnostics]))
        assert results[0] == results[1]
        typed, diagnostics = results[0]
        assert delta_leaves(typed.delta) == frozenset()
        assert diagnostics == [(DiagnosticKind.FLOW_VIOLATION, "s", "y")]

    def test_dependencies_after_a_branch_cover_both_arms(self):
        text = (
            "fn main(g: bool, a: u32, b: u32, x: u32, y: u32) {"
            " if copy g { x := copy a; y := copy x; } else { y := copy b; } }"
        )
        checker, func, node = _first(If, text)
        joined = _fresh_state(func)
        checker.check_expr(node, joined)
        for arm in (node.then, node.orelse):
            alone = _fresh_state(func)
            checker.check_expr(arm, alone)
            for place, deps in alone.pi.entries.items():
                assert deps <= joined.pi.lookup(place)
        assert joined.pi.lookup(Place("y")) >= {Place("a"), Place("b"), Place("x"), Place("g")}


class TestLoans:
    def test_dereference_reads_every_possible_referent(self, check):
        diagnostics = check(
            """
            fn main(c: bool, y: u32, w: u32, z: u32) {
                flow y ->! z;
                let r: &shrd u32 = &shrd w;
                if copy c { r := &shrd y; }
                z := copy *r;
            }
            """
        )
        assert [(d.source, d.destination) for d in diagnostics] == [("y", "z")]

    def test_resolve_plain_place(self):
        gamma = StackEnv().bind("x", U32)
        assert resolve_loans(gamma, PlaceExpr("x"), Omega.SHRD) == {Loan(Omega.SHRD, Place("x"))}

    def test_resolve_through_a_reference(self):
        gamma = (
            StackEnv()
            .bind("y", U32)
            .bind("r", RefType(Omega.SHRD, U32))
            .with_origins({Place("r"): frozenset({Loan(Omega.SHRD, Place("y"))})})
        )
        deref = PlaceExpr("r", (DEREF,))
        assert resolve_loans(gamma, deref, Omega.SHRD) == {Loan(Omega.SHRD, Place("y"))}
        with pytest.raises(CheckError) as info:
            resolve_loans(gamma, deref, Omega.UNIQ)
        assert info.value.kind == DiagnosticKind.LOAN_ERROR

    def test_dereferencing_a_non_reference(self):
        gamma = StackEnv().bind("x", U32)
        with pytest.raises(CheckError) as info:
            resolve_loans(gamma, PlaceExpr("x", (DEREF,)), Omega.SHRD)
        assert info.value.kind == DiagnosticKind.LOAN_ERROR

    def test_reference_parameters_point_at_their_referent(self, check):
        (diagnostic,) = check(
            """
            struct Cfg { key: u32, port: u32 }
            fn main(cfg: &shrd Cfg, out: &uniq u32) {
                flow (*cfg).key ->! *out;
                *out := copy (*cfg).port;
                *out := copy (*cfg).key;
            }
            """
        )
        assert (diagnostic.source, diagnostic.destination) == ("(*cfg).key", "*out")


class TestErrors:
    def test_move_while_borrowed(self, check):
        (diagnostic,) = check(
            "struct S { a: u32 } fn main(s: S) { let r: &shrd S = &shrd s; let t: S = s; }"
        )
        assert diagnostic.kind == DiagnosticKind.LOAN_ERROR
        assert diagnostic.severity == Severity.ERROR

    def test_use_after_move(self, check):
        (diagnostic,) = check("struct S { a: u32 } fn main(s: S) { let t: S = s; let u: S = s; }")
        assert diagnostic.kind == DiagnosticKind.MOVE_ERROR

    def test_copyable_values_are_copied_not_moved(self, check):
        (diagnostic,) = check("fn main(s: u32) { let t: u32 = s; }")
        assert diagnostic.kind == DiagnosticKind.MOVE_ERROR
        assert "copy s" in diagnostic.message

    def test_annotation_mismatch(self, check):
        (diagnostic,) = check("fn main() { let x: bool = 3; }")
        assert diagnostic.kind == DiagnosticKind.TYPE_ERROR

    def test_unknown_function(self, check):
        (diagnostic,) = check("fn main() { nothing(); }")
        assert diagnostic.kind == DiagnosticKind.UNKNOWN_NAME

    def test_rule_on_an_unbound_variable(self, check):
        (diagnostic,) = check("fn main() { flow nope ->! *; }")
        assert diagnostic.kind == DiagnosticKind.UNKNOWN_NAME

    def test_contradiction(self, check):
        (diagnostic,) = check("fn main(a: u32, b: u32) { flow a ->! b; flow a -> b; }")
        assert diagnostic.kind == DiagnosticKind.CONTRADICTION
        assert diagnostic.rule.rule == "a ->! b"

    def test_body_rules_share_the_contract_scope(self, check):
        diagnostics = check("fn main(a: u32, b: u32) { flow a ->! b; let x = 1; flow a -> b; b := copy a; }")
        assert [d.kind for d in diagnostics] == [DiagnosticKind.CONTRADICTION, DiagnosticKind.FLOW_VIOLATION]

    def test_nested_blocks_may_override_the_contract(self, check):
        assert check("fn main(a: u32, b: u32) { flow a ->! b; { flow a -> b; b := copy a; } }") == []

    def test_errors_are_reported_per_function(self, check):
        diagnostics = check(
            """
            fn bad() { let x: bool = 3; }
            fn main(s: u32) { flow s ->! *; let t: u32 = copy s; }
            """
        )
        assert [(d.function, d.severity) for d in diagnostics] == [
            ("bad", Severity.ERROR),
            ("main", Severity.VIOLATION),
        ]

    def test_empty_io_alias_is_a_warning(self, check):
        (diagnostic,) = check("fn main(s: u32) { flow s ->! fn io!(); }")
        assert diagnostic.severity == Severity.WARNING
        assert diagnostic.kind == DiagnosticKind.EMPTY_ALIAS


class TestCalls:
    def test_flow_into_a_denied_function(self, check):
        (diagnostic,) = check(
            "fn write(v: u32) io; fn main(s: u32) { flow s ->! fn write; write(copy s); }"
        )
        assert diagnostic.kind == DiagnosticKind.FUNCTION_FLOW
        assert diagnostic.destination == "fn write"

    def test_io_alias_covers_every_io_primitive(self, check):
        diagnostics = check(
            """
            fn write(v: u32) io;
            fn send(v: u32) io;
            fn main(s: u32) { flow s ->! fn io!(); send(copy s); }
            """
        )
        assert [d.destination for d in diagnostics] == ["fn send"]

    def test_guard_flows_into_calls(self, check):
        (diagnostic,) = check(
            "fn write(v: u32) io; fn main(g: bool) { flow g ->! fn write; if copy g { write(1); } }"
        )
        assert diagnostic.source == "g"

    def test_callee_contract_must_be_permitted_by_the_caller(self, checked):
        checker, diagnostics = checked(
            """
            fn f(a: u32, out: &uniq u32) {
                flow a -> *out;
                *out := copy a;
            }
            fn main(s: u32, z: u32) {
                flow s ->! z;
                f(copy s, &uniq z);
            }
            """
        )
        (diagnostic,) = diagnostics
        assert diagnostic.kind == DiagnosticKind.CONTRACT_VIOLATION
        assert (diagnostic.source, diagnostic.destination) == ("s", "z")
        assert diagnostic.rule.rule == "s ->! z"
        assert diagnostic.callee_rule.rule == "s -> z"
        assert diagnostic.callee_rule.origin == "f"
        assert checker.reports["main"].pi.lookup(Place("z")) == {Place("s")}

    def test_pure_callee_only_checks_its_arguments(self, check):
        assert check(
            """
            fn helper(v: u32) { let w: u32 = copy v; }
            fn main(s: u32) { flow s ->! *; helper(copy s); }
            """
        ) == []

    def test_callee_denial_keeps_the_output_clean(self, checked):
        checker, diagnostics = checked(
            """
            fn f(a: u32, out: &uniq u32) {
                flow a ->! *out;
                *out := 1;
            }
            fn main(s: u32, z: u32) {
                flow s ->! z;
                f(copy s, &uniq z);
            }
            """
        )
        assert diagnostics == []
        assert checker.reports["main"].pi.lookup(Place("z")) == frozenset()

    def test_arguments_reach_what_the_callee_calls(self, check):
        (diagnostic,) = check(
            """
            fn write(v: u32) io;
            fn helper(x: u32) { write(copy x); }
            fn main(s: u32) { flow s ->! fn io!(); helper(copy s); }
            """
        )
        assert diagnostic.kind == DiagnosticKind.FUNCTION_FLOW
        assert (diagnostic.source, diagnostic.destination) == ("s", "fn write")

    def test_calls_are_followed_through_several_functions(self, check):
        diagnostics = check(
            """
            fn write(v: u32) io;
            fn inner(x: u32) { write(copy x); }
            fn outer(x: u32) { inner(copy x); }
            fn main(s: u32) {
                flow s ->! fn write;
                let f = |v: u32| { outer(copy v); };
                f(copy s);
            }
            """
        )
        assert [(d.kind, d.destination) for d in diagnostics] == [(DiagnosticKind.FUNCTION_FLOW, "fn write")]

    def test_callee_denial_is_not_bypassed_through_another_argument(self, check):
        (diagnostic,) = check(
            """
            fn write(v: u32) io;
            fn f(key: u32, x: u32) { flow key ->! fn write; write(copy x); }
            fn main(k: u32) { f(copy k, copy k); }
            """
        )
        assert diagnostic.kind == DiagnosticKind.CONTRACT_VIOLATION
        assert (diagnostic.source, diagnostic.destination) == ("k", "fn write")
        assert diagnostic.callee_rule.rule == "key ->! fn write"

    @pytest.mark.parametrize("args", ["copy k, 3", "copy k, copy j"])
    def test_callee_denial_with_unrelated_arguments(self, check, args):
        source = f"""
            fn write(v: u32) io;
            fn f(key: u32, x: u32) {{ flow key ->! fn write; write(copy x); }}
            fn main(k: u32, j: u32) {{ f({args}); }}
        """
        assert check(source) == []

    def test_argument_count(self, check):
        (diagnostic,) = check("fn f(a: u32); fn main() { f(); }")
        assert diagnostic.kind == DiagnosticKind.TYPE_ERROR


class TestClosures:
    def test_argument_flowing_into_a_capture(self, check):
        (diagnostic,) = check(
            """
            fn main(x: u32, s: u32) {
                flow x ->! s;
                let f = |v: u32| { s := copy v; };
                f(copy x);
            }
            """
        )
        assert diagnostic.kind == DiagnosticKind.CAPTURE_VIOLATION
        assert (diagnostic.source, diagnostic.destination) == ("x", "s")

    def test_capture_reaches_a_unique_argument(self, checked):
        checker, diagnostics = checked(
            """
            fn main(s: u32, z: u32) {
                let f = |out: &uniq u32| { *out := copy s; };
                f(&uniq z);
            }
            """
        )
        assert diagnostics == []
        assert Place("s") in checker.reports["main"].pi.lookup(Place("z"))

    def test_capture_into_a_unique_argument_is_checked(self, check):
        (diagnostic,) = check(
            """
            fn main(s: u32, z: u32) {
                flow s ->! z;
                let f = |out: &uniq u32| { *out := copy s; };
                f(&uniq z);
            }
            """
        )
        assert (diagnostic.source, diagnostic.destination) == ("s", "z")

    def test_functions_called_by_a_closure(self, check):
        (diagnostic,) = check(
            """
            fn send(v: u32) io;
            fn main(s: u32) {
                flow s ->! fn io!();
                let f = |v: u32| { send(copy v); };
                f(copy s);
            }
            """
        )
        assert diagnostic.kind == DiagnosticKind.FUNCTION_FLOW
        assert diagnostic.destination == "fn send"


class TestDiagnostics:
    def test_json_round_trip(self, check):
        diagnostics = check("fn main(s: u32) { flow s ->! *; let t: u32 = copy s; }")
        text = dump_diagnostics(diagnostics)
        assert json.loads(text)[0]["schema"] == 1
        assert load_diagnostics(text) == diagnostics

    def test_violations_name_their_rule(self):
        with pytest.raises(ValidationError):
            Diagnostic(severity=Severity.VIOLATION, kind=DiagnosticKind.FLOW_VIOLATION, message="m")

    def test_output_is_sorted_by_position(self, check):
        diagnostics = check(
            """
            fn a(s: u32) { flow s ->! *; let t: u32 = copy s; }
            fn b() { let x: bool = 3; }
            """
        )
        starts = [d.span.start for d in diagnostics]
        assert starts == sorted(starts)
