"""
Lattice laws and basic behaviour of the abstract domains
"""

from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st

from core.domains import (
    ABS_FALSE, ABS_NUM, ABS_TRUE, EMPTY_ENV, EMPTY_STORE, AbsEnv, AbsPrim, CallVar, MonoVar, Store,
    GrowingMap, abs_atomic_eval, show_flows,
)
from core.syntax import BoolLit, NumLit, PrimRef, VarRef, parse_program

addresses = st.one_of(
    st.sampled_from("abcxyz").map(MonoVar),
    st.builds(CallVar, st.sampled_from("xyz"), st.integers(min_value=0, max_value=4)),
)
values = st.sampled_from([ABS_TRUE, ABS_FALSE, ABS_NUM, AbsPrim("not"), AbsPrim("+")])
stores = st.dictionaries(addresses, st.frozensets(values, max_size=3), max_size=5).map(Store)


class TestJoinLaws:
    @hyp_settings(max_examples=1000)
    @given(stores, stores)
    def test_commutative(self, a, b):
        assert a.join(b) == b.join(a)

    @hyp_settings(max_examples=1000)
    @given(stores, stores, stores)
    def test_associative(self, a, b, c):
        assert a.join(b).join(c) == a.join(b.join(c))

    @hyp_settings(max_examples=1000)
    @given(stores)
    def test_idempotent(self, a):
        assert a.join(a) == a

    @hyp_settings(max_examples=500)
    @given(stores, stores)
    def test_join_is_upper_bound(self, a, b):
        joined = a.join(b)
        assert a.leq(joined) and b.leq(joined)

    @hyp_settings(max_examples=500)
    @given(stores)
    def test_empty_is_bottom(self, a):
        assert EMPTY_STORE.leq(a)
        assert a.join(EMPTY_STORE) == a

    @hyp_settings(max_examples=500)
    @given(stores, addresses, st.frozensets(values, max_size=3))
    def test_join_at_matches_join(self, a, addr, flows):
        assert a.join_at(addr, flows) == a.join(Store({addr: flows}))


class TestSetMap:
    def test_empty_sets_are_not_stored(self):
        s = Store({MonoVar("x"): frozenset()})
        assert len(s) == 0
        assert MonoVar("x") not in s
        assert s.lookup(MonoVar("x")) == frozenset()

    def test_join_at_returns_self_when_unchanged(self):
        s = Store({MonoVar("x"): {ABS_TRUE}})
        assert s.join_at(MonoVar("x"), {ABS_TRUE}) is s

    def test_keys_are_sorted(self):
        s = Store({CallVar("x", 2): {ABS_TRUE}, MonoVar("z"): {ABS_NUM}, CallVar("x", 1): {ABS_FALSE}})
        assert s.keys() == [MonoVar("z"), CallVar("x", 1), CallVar("x", 2)]

    def test_equal_stores_hash_equal(self):
        a = Store({MonoVar("x"): {ABS_TRUE}}).join_at(MonoVar("y"), {ABS_NUM})
        b = Store({MonoVar("y"): {ABS_NUM}, MonoVar("x"): {ABS_TRUE}})
        assert a == b and hash(a) == hash(b)


class TestGrowingMap:
    @hyp_settings(max_examples=300)
    @given(stores, st.lists(st.tuples(addresses, st.frozensets(values, max_size=3)), max_size=6))
    def test_in_place_joins_match_persistent_joins(self, start, updates):
        grow, expected = GrowingMap(start), start
        for addr, flows in updates:
            before = expected
            expected = expected.join_at(addr, flows)
            assert grow.join_at(addr, flows) == (expected != before)
        assert grow.freeze() == expected

    def test_snapshot_is_reused_until_growth(self):
        grow = GrowingMap(Store({MonoVar("x"): {ABS_TRUE}}))
        first = grow.freeze()
        assert grow.freeze() is first
        assert not grow.join_at(MonoVar("x"), {ABS_TRUE})
        assert grow.freeze() is first
        assert grow.join_at(MonoVar("x"), {ABS_FALSE})
        second = grow.freeze()
        assert second is not first
        assert first.lookup(MonoVar("x")) == {ABS_TRUE}
        assert isinstance(second, Store)

    def test_sorted_lookup_follows_growth(self):
        grow = GrowingMap(EMPTY_STORE)
        grow.join_at(MonoVar("x"), {ABS_TRUE})
        assert grow.sorted_lookup(MonoVar("x")) == (ABS_TRUE,)
        grow.join_at(MonoVar("x"), {ABS_FALSE})
        assert set(grow.sorted_lookup(MonoVar("x"))) == {ABS_TRUE, ABS_FALSE}


class TestEnv:
    def test_extend_and_restrict(self):
        env = EMPTY_ENV.extend("y", MonoVar("y")).extend("x", MonoVar("x"))
        assert [x for x, _ in env.items()] == ["x", "y"]
        assert env.restrict({"x"}) == AbsEnv.of({"x": MonoVar("x")})
        assert env.restrict({"x", "y", "z"}) is env

    def test_lookup_missing(self):
        assert EMPTY_ENV.lookup("x") is None


class TestAtomicEval:
    def test_literals(self):
        assert abs_atomic_eval(BoolLit(True), EMPTY_ENV, EMPTY_STORE) == {ABS_TRUE}
        assert abs_atomic_eval(NumLit(7), EMPTY_ENV, EMPTY_STORE) == {ABS_NUM}
        assert abs_atomic_eval(PrimRef("add1"), EMPTY_ENV, EMPTY_STORE) == {AbsPrim("add1")}

    def test_dead_variable_is_empty(self):
        env = AbsEnv.of({"x": MonoVar("x")})
        assert abs_atomic_eval(VarRef("x"), env, EMPTY_STORE) == frozenset()
        assert abs_atomic_eval(VarRef("q"), env, EMPTY_STORE) == frozenset()

    def test_closure_env_is_restricted(self, worked):
        lam = worked.root.arg
        env = AbsEnv.of({"id": MonoVar("id"), "y": MonoVar("y")})
        (clo,) = abs_atomic_eval(lam, env, EMPTY_STORE)
        assert clo.env == EMPTY_ENV

    def test_closure_keeps_free_variables(self):
        p = parse_program("(lambda (x) (lambda (y) x))")
        inner = p.root.ae.body.ae
        env = AbsEnv.of({"x": MonoVar("x"), "z": MonoVar("z")})
        (clo,) = abs_atomic_eval(inner, env, EMPTY_STORE)
        assert clo.env == AbsEnv.of({"x": MonoVar("x")})

    def test_show_flows_is_sorted(self):
        assert show_flows({ABS_NUM, ABS_FALSE, ABS_TRUE}) == ["#f", "#t", "num"]
