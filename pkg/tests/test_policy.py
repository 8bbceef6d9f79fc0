import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from flowck.core import STAR, U32, FnDest, Omega, Param, Path, Place, PlaceExpr, RefType
from flowck.parser import parse_flow_rule
from flowck.policy import (
    DEFAULT_PERMISSION,
    ContradictionError,
    FlowRule,
    PolicyEnv,
    PolicyError,
    applies,
    caller_implies,
    callee_denials_hold,
    covers,
    declare,
    get_min_perms,
    is_allowed,
    substitute,
)


def rules(*texts):
    return [parse_flow_rule(t) for t in texts]


def env(*texts):
    return PolicyEnv.of(rules(*texts))


def place(text):
    root, *rest = text.split(".")
    return Place(root, Path(tuple(int(s) if s.isdigit() else s for s in rest)))


class TestCovers:
    @pytest.mark.parametrize(
        "a1, a2, expected",
        [
            (STAR, PlaceExpr("x"), True),
            (PlaceExpr("p"), PlaceExpr("p", ("f",)), True),
            (PlaceExpr("x"), PlaceExpr("x"), True),
            (PlaceExpr("x", ("f",)), PlaceExpr("x"), False),
            (PlaceExpr("x"), PlaceExpr("y"), False),
            (FnDest("write"), FnDest("write"), True),
            (FnDest("write"), FnDest("send"), False),
            (PlaceExpr("x"), FnDest("x"), False),
        ],
    )
    def test_covers(self, a1, a2, expected):
        assert covers(a1, a2) is expected

    def test_wildcard_does_not_govern_function_destinations(self):
        assert not applies(parse_flow_rule("s ->! *"), PlaceExpr("s"), FnDest("write"))
        assert applies(parse_flow_rule("s ->! fn write"), PlaceExpr("s"), FnDest("write"))

    def test_rules_reject_non_place_sources(self):
        with pytest.raises(PolicyError):
            FlowRule(STAR, PlaceExpr("x"), False)
        with pytest.raises(PolicyError):
            FlowRule(FnDest("w"), PlaceExpr("x"), False)


class TestDeclare:
    def test_first_rule(self):
        psi = declare(PolicyEnv(), parse_flow_rule("s ->! *"))
        assert psi.rules() == (parse_flow_rule("s ->! *"),)

    def test_more_specific_allow_is_an_override(self):
        psi = env("s ->! *").declare(parse_flow_rule("s -> p"))
        assert len(psi.rules()) == 2

    def test_opposite_rule_for_the_same_pair_contradicts(self):
        with pytest.raises(ContradictionError, match="contradicts"):
            env("a ->! b").declare(parse_flow_rule("a -> b"))

    def test_nested_scope_may_flip_an_outer_rule(self):
        psi = env("a ->! b").push().declare(parse_flow_rule("a -> b"))
        assert psi.rules() == (parse_flow_rule("a -> b"),)
        assert get_min_perms(Place("a"), Place("b"), psi).permit
        assert not get_min_perms(Place("a"), Place("b"), psi.pop()).permit

    def test_contradiction_is_checked_against_the_innermost_scope_only(self):
        psi = env("a ->! b").push().declare(parse_flow_rule("a -> b"))
        with pytest.raises(ContradictionError):
            psi.declare(parse_flow_rule("a ->! b"))

    def test_cannot_pop_the_outermost_scope(self):
        with pytest.raises(ValueError):
            PolicyEnv().pop()

    def test_to_dict(self):
        dumped = PolicyEnv.of([FlowRule(PlaceExpr("s"), STAR, False)]).push().to_dict()
        assert dumped == {"scopes": [[{"rule": "s ->! *", "permit": False, "span": None}], []]}


class TestGetMinPerms:
    def test_specific_allow_overrides_a_broader_deny(self):
        perm = get_min_perms(place("b.f"), Place("c"), env("b ->! c", "b.f -> c"))
        assert perm.triple == (PlaceExpr("b", ("f",)), PlaceExpr("c"), True)

    def test_incomparable_rules_resolve_to_the_deny(self):
        perm = get_min_perms(place("a.b"), place("c.d"), env("a.b ->! c", "a -> c.d"))
        assert perm.triple == (PlaceExpr("a", ("b",)), PlaceExpr("c"), False)

    def test_default_allows_everything(self):
        assert get_min_perms(Place("x"), Place("y"), PolicyEnv()) == DEFAULT_PERMISSION
        assert DEFAULT_PERMISSION.triple == (STAR, STAR, True)

    def test_permission_carries_its_rule(self):
        perm = get_min_perms(Place("s"), Place("x"), env("s ->! *"))
        assert perm.rule == parse_flow_rule("s ->! *")

    def test_function_destinations(self):
        psi = env("s ->! *", "k ->! fn write")
        assert get_min_perms(Place("s"), FnDest("write"), psi).permit
        assert not get_min_perms(Place("k"), FnDest("write"), psi).permit
        assert get_min_perms(Place("k"), FnDest("send"), psi).permit


class TestIsAllowed:
    def test_empty_product_is_allowed(self):
        assert is_allowed([], [Place("x")], env("s ->! *"))

    def test_denied_flow_has_a_witness(self):
        result = is_allowed([Place("s")], [Place("x")], env("s ->! *"))
        assert not result
        assert result.witness.source == Place("s")
        assert result.witness.dest == Place("x")
        assert result.witness.permission.rule == parse_flow_rule("s ->! *")

    def test_no_rules_allow(self):
        assert is_allowed([Place("s")], [Place("x")], PolicyEnv()).allowed

    def test_first_denied_pair_in_sorted_order(self):
        result = is_allowed([Place("t"), Place("s")], [Place("y"), Place("x")], env("s ->! *", "t ->! *"))
        assert (result.witness.source, result.witness.dest) == (Place("s"), Place("x"))


class TestSubstitute:
    def test_root_substitution(self):
        out = substitute(rules("key ->! *"), [Param("key", U32)], [[place("cfg.key")]])
        assert out == [FlowRule(PlaceExpr("cfg", ("key",)), STAR, False)]

    def test_uniq_reference_formal_stands_for_its_referent(self):
        formals = [Param("a", U32), Param("out", RefType(Omega.UNIQ, U32))]
        out = substitute(rules("a -> *out"), formals, [[Place("s")], [Place("z")]], origin="f")
        assert out == [FlowRule(PlaceExpr("s"), PlaceExpr("z"), True)]
        assert out[0].origin == "f"

    def test_projections_follow_the_actual(self):
        formals = [Param("pair", U32)]
        out = substitute(rules("pair.0 ->! *"), formals, [[place("t.1")]])
        assert out[0].source == PlaceExpr("t", (1, 0))

    def test_empty_contract(self):
        assert substitute([], [Param("a", U32)], [[Place("x")]]) == []

    def test_rules_naming_locals_or_unbound_formals_are_dropped(self):
        out = substitute(rules("tmp ->! *", "a ->! *"), [Param("a", U32)], [[]])
        assert out == []

    def test_reference_actuals_fan_out(self):
        formals = [Param("r", RefType(Omega.SHRD, U32))]
        out = substitute(rules("*r ->! *"), formals, [[Place("x"), Place("y")]])
        assert [r.source for r in out] == [PlaceExpr("x"), PlaceExpr("y")]

    def test_actual_count_must_match(self):
        with pytest.raises(ValueError):
            substitute([], [Param("a", U32)], [])


class TestCallerImplies:
    def test_callee_flow_denied_by_the_caller(self):
        contract = [FlowRule(PlaceExpr("s"), PlaceExpr("z"), True)]
        result = caller_implies(env("s ->! z"), contract, [Place("z")], [[Place("s")], []])
        assert not result
        witness = result.witness
        assert (witness.source, witness.dest) == (Place("s"), Place("z"))
        assert not witness.caller.permit
        assert witness.callee.permit

    def test_callee_that_denies_the_flow_needs_nothing_from_the_caller(self):
        contract = [FlowRule(PlaceExpr("s"), PlaceExpr("z"), False)]
        assert caller_implies(env("s ->! z"), contract, [Place("z")], [[Place("s")]])

    def test_pure_callee(self):
        assert caller_implies(env("s ->! *"), [], [], [[Place("s")]])

    def test_empty_caller_policy(self):
        assert caller_implies(PolicyEnv(), [], [Place("z")], [[Place("s")]])

    def test_flow_into_itself_is_ignored(self):
        assert caller_implies(env("z ->! *"), [], [Place("z")], [[Place("z")]])

    def test_function_rules_need_caller_permission(self):
        contract = [FlowRule(PlaceExpr("s"), FnDest("w"), True)]
        result = caller_implies(env("s ->! fn w"), contract, [], [[Place("s")]], [[Place("s")]])
        assert not result
        assert result.witness.dest == FnDest("w")


class TestCalleeDenials:
    FORMALS = [Param("key", U32), Param("x", U32)]
    CONTRACT = [FlowRule(PlaceExpr("key"), FnDest("w"), False)]

    def test_denied_source_passed_as_another_argument(self):
        both = [[Place("k")], [Place("k")]]
        result = callee_denials_hold(self.CONTRACT, self.FORMALS, both, both, ["w"])
        assert not result
        assert (result.witness.source, result.witness.dest) == (Place("k"), FnDest("w"))
        assert result.witness.callee.rule == self.CONTRACT[0]

    def test_unreachable_function_is_not_a_breach(self):
        both = [[Place("k")], [Place("k")]]
        assert callee_denials_hold(self.CONTRACT, self.FORMALS, both, both, ["v"])

    def test_distinct_arguments(self):
        apart = [[Place("k")], [Place("j")]]
        assert callee_denials_hold(self.CONTRACT, self.FORMALS, apart, apart)


# ---- properties over random rule sets ----

ROOTS = ("a", "b")
SELECTORS = ("f", "g")

place_exprs = st.builds(
    PlaceExpr,
    st.sampled_from(ROOTS),
    st.lists(st.sampled_from(SELECTORS), max_size=2).map(tuple),
)
dests = st.one_of(place_exprs, st.just(STAR), st.just(FnDest("w")))
flow_rules = st.builds(FlowRule, place_exprs, dests, st.booleans())


def _unique_pairs(rule_list):
    seen = {}
    for rule in rule_list:
        seen.setdefault(rule.pair, rule)
    return list(seen.values())


rule_sets = st.lists(flow_rules, max_size=8).map(_unique_pairs)
query_dests = st.one_of(place_exprs.map(lambda p: p.as_place()), st.just(FnDest("w")))
queries = st.tuples(place_exprs.map(lambda p: p.as_place()), query_dests)

PROPERTY_SETTINGS = settings(
    max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)


def _as_expr(value):
    return value.as_expr() if isinstance(value, Place) else value


@PROPERTY_SETTINGS
@given(rule_sets, queries)
def test_a_rule_for_the_exact_pair_decides(rule_list, query):
    source, dest = query
    exact = FlowRule(source.as_expr(), _as_expr(dest), False)
    others = [r for r in rule_list if r.pair != exact.pair]
    for permit in (False, True):
        rule = FlowRule(exact.source, exact.dest, permit)
        assert get_min_perms(source, dest, PolicyEnv.of(others + [rule])).permit is permit


@PROPERTY_SETTINGS
@given(rule_sets, queries)
def test_without_deny_rules_everything_is_allowed(rule_list, query):
    psi = PolicyEnv.of(r for r in rule_list if r.permit)
    assert get_min_perms(*query, psi).permit


@PROPERTY_SETTINGS
@given(rule_sets, queries)
def test_deny_only_policies_deny_exactly_the_covered_flows(rule_list, query):
    denies = [r for r in rule_list if not r.permit]
    source, dest = query
    expected = not any(applies(r, source.as_expr(), _as_expr(dest)) for r in denies)
    assert get_min_perms(source, dest, PolicyEnv.of(denies)).permit is expected


@PROPERTY_SETTINGS
@given(rule_sets, queries, st.randoms(use_true_random=False))
def test_rule_order_does_not_matter(rule_list, query, rng):
    shuffled = list(rule_list)
    rng.shuffle(shuffled)
    first = get_min_perms(*query, PolicyEnv.of(rule_list))
    second = get_min_perms(*query, PolicyEnv.of(shuffled))
    assert first.triple == second.triple


@PROPERTY_SETTINGS
@given(rule_sets, st.just(FnDest("w")), place_exprs)
def test_wildcard_destinations_never_decide_function_flows(rule_list, fn_dest, source):
    without_star = [r for r in rule_list if r.dest != STAR]
    query = (source.as_place(), fn_dest)
    assert get_min_perms(*query, PolicyEnv.of(rule_list)).triple == get_min_perms(
        *query, PolicyEnv.of(without_star)
    ).triple


@PROPERTY_SETTINGS
@given(rule_sets, st.lists(place_exprs, max_size=3), st.lists(query_dests, max_size=3))
def test_is_allowed_agrees_with_every_pair(rule_list, sources, dest_list):
    psi = PolicyEnv.of(rule_list)
    places = [p.as_place() for p in sources]
    result = is_allowed(places, dest_list, psi)
    assert result.allowed is all(get_min_perms(s, d, psi).permit for s in places for d in dest_list)
    if not result.allowed:
        assert not get_min_perms(result.witness.source, result.witness.dest, psi).permit


@PROPERTY_SETTINGS
@given(rule_sets, rule_sets, queries)
def test_inner_scope_shadows_identical_pairs(outer, inner, query):
    psi = PolicyEnv.of(outer).push()
    for rule in inner:
        psi = psi.declare(rule)
    inner_pairs = {r.pair for r in inner}
    flattened = [r for r in outer if r.pair not in inner_pairs] + inner
    assert get_min_perms(*query, psi).triple == get_min_perms(*query, PolicyEnv.of(flattened)).triple


def _specificity(access):
    # applicable operands lie on one prefix chain, so length orders them
    if access == STAR:
        return -1
    if isinstance(access, FnDest):
        return 0
    return len(access.ops)


def _reaches(operand, query):
    if operand == STAR:
        return isinstance(query, Place)
    if isinstance(operand, FnDest):
        return operand == query
    if not isinstance(query, Place):
        return False
    n = len(operand.ops)
    return operand.root == query.root and tuple(query.path.segments[:n]) == tuple(operand.ops)


def oracle_permission(scopes, source, dest):
    """Enumerate the applicable rules; of those no other rule refines, a deny wins, then the most specific."""
    effective = {}
    for scope in scopes:
        effective.update({rule.pair: rule for rule in scope})
    applicable = [r for r in effective.values() if _reaches(r.source, source) and _reaches(r.dest, dest)]
    if not applicable:
        return (STAR, STAR, True)

    def refined(rule):
        return any(
            other.pair != rule.pair
            and _specificity(other.source) >= _specificity(rule.source)
            and _specificity(other.dest) >= _specificity(rule.dest)
            for other in applicable
        )

    unrefined = [rule for rule in applicable if not refined(rule)]
    chosen = [rule for rule in unrefined if not rule.permit] or unrefined
    best = max(chosen, key=lambda r: (_specificity(r.source), _specificity(r.dest), str(r)))
    return (best.source, best.dest, best.permit)


def _scoped(scopes):
    psi = PolicyEnv()
    for depth, scope in enumerate(scopes):
        if depth:
            psi = psi.push()
        for rule in scope:
            psi = psi.declare(rule)
    return psi


@settings(max_examples=10_000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.lists(rule_sets, min_size=1, max_size=3), queries)
def test_resolution_matches_brute_force(scopes, query):
    assert get_min_perms(*query, _scoped(scopes)).triple == oracle_permission(scopes, *query)
