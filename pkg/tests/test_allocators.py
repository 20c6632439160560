"""
Tests for value and continuation allocation
"""

import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st

from core.abstract import Call, machine_moves
from core.allocators import StoreInterner, entry_of, kont_alloc, value_alloc
from core.domains import (
    AAC, ABS_FALSE, ABS_TRUE, EMPTY_ENV, EMPTY_KSTORE, EMPTY_STORE, HALT, P4F, AbsEnv, AbstractState,
    CallVar, Configuration, MonoVar, Store, TargetExp, TargetExpCall,
)
from core.fixpoint import analyze
from core.models import KontPolicy, PolicyPair, ValuePolicy
from core.syntax import parse_program
from tests.programs import DIAMOND_SOURCE, NESTED_SOURCE, WORKED_SOURCE

WORKED = parse_program(WORKED_SOURCE)
ID_ENV = AbsEnv.of({"id": MonoVar("id")})


def source_at(label: int, env: AbsEnv = ID_ENV, store: Store = EMPTY_STORE) -> AbstractState:
    return AbstractState(WORKED.exp(label), env, store, EMPTY_KSTORE, HALT)


class TestValueAlloc:
    def test_mono_uses_variable(self):
        assert value_alloc(ValuePolicy.MONO, "x", source_at(1)) == MonoVar("x")

    def test_1cfa_uses_source_label(self):
        assert value_alloc(ValuePolicy.CALL1, "x", source_at(1)) == CallVar("x", 1)
        assert value_alloc(ValuePolicy.CALL1, "x", source_at(2)) == CallVar("x", 2)

    @hyp_settings(max_examples=200)
    @given(st.sampled_from(list(ValuePolicy)), st.sampled_from(["x", "y", "z"]), st.integers(0, 4))
    def test_deterministic(self, policy, x, label):
        assert value_alloc(policy, x, source_at(label)) == value_alloc(policy, x, source_at(label))


class TestKontAlloc:
    target_env = AbsEnv.of({"x": MonoVar("x")})

    def test_naive(self):
        assert kont_alloc(KontPolicy.NAIVE, source_at(1), WORKED.exp(4), self.target_env) == TargetExp(4)

    def test_naive_1cfa(self):
        ka = kont_alloc(KontPolicy.NAIVE_1CFA, source_at(2), WORKED.exp(4), self.target_env)
        assert ka == TargetExpCall(4, 2)

    def test_p4f_names_target_state(self):
        ka = kont_alloc(KontPolicy.P4F, source_at(1), WORKED.exp(4), self.target_env)
        assert ka == P4F(4, self.target_env)
        assert kont_alloc(KontPolicy.P4F, source_at(2), WORKED.exp(4), self.target_env) == ka

    def test_aac_includes_source_and_store(self):
        interner = StoreInterner()
        ka = kont_alloc(KontPolicy.AAC, source_at(1), WORKED.exp(4), self.target_env, interner=interner)
        assert ka == AAC(4, self.target_env, 1, ID_ENV, 0)
        bigger = Store({MonoVar("x"): {ABS_TRUE}})
        other = kont_alloc(KontPolicy.AAC, source_at(1, store=bigger), WORKED.exp(4), self.target_env,
                           interner=interner)
        assert other.store_id == 1
        assert other != ka

    @hyp_settings(max_examples=200)
    @given(st.sampled_from(list(KontPolicy)), st.integers(0, 4), st.integers(0, 4))
    def test_never_halt(self, policy, source_label, target_label):
        ka = kont_alloc(policy, source_at(source_label), WORKED.exp(target_label), self.target_env,
                        interner=StoreInterner())
        assert ka != HALT


class TestStoreInterner:
    def test_structural_identity(self):
        interner = StoreInterner()
        a = Store({MonoVar("x"): {ABS_TRUE}})
        b = EMPTY_STORE.join_at(MonoVar("x"), {ABS_TRUE})
        assert interner.intern(EMPTY_STORE) == 0
        assert interner.intern(a) == 1
        assert interner.intern(b) == 1
        assert interner.intern(EMPTY_STORE) == 0
        assert len(interner) == 2

    def test_same_sequence_same_ids(self):
        stores = [Store({MonoVar("x"): {v}}) for v in (ABS_TRUE, ABS_FALSE, ABS_TRUE)]
        first, second = StoreInterner(), StoreInterner()
        assert [first.intern(s) for s in stores] == [second.intern(s) for s in stores] == [0, 1, 0]


class TestEntry:
    def test_entry_of_p4f_address(self):
        env = AbsEnv.of({"x": MonoVar("x")})
        assert entry_of(P4F(4, env), WORKED) == Configuration(WORKED.exp(4), env, P4F(4, env))

    @pytest.mark.parametrize("policy", list(KontPolicy))
    def test_result_is_hashable(self, policy):
        ka = kont_alloc(policy, source_at(1), WORKED.exp(4), EMPTY_ENV, interner=StoreInterner())
        assert len({ka, ka}) == 1


addresses = st.one_of(
    st.sampled_from("xyz").map(MonoVar),
    st.builds(CallVar, st.sampled_from("xyz"), st.integers(min_value=0, max_value=4)),
)
stores = st.dictionaries(addresses, st.frozensets(st.sampled_from([ABS_TRUE, ABS_FALSE]), max_size=2),
                         max_size=4).map(Store)


class TestPurity:
    @hyp_settings(max_examples=300)
    @given(st.sampled_from(list(ValuePolicy)), st.integers(0, 4), stores, stores)
    def test_value_alloc_ignores_store(self, policy, label, a, b):
        assert value_alloc(policy, "x", source_at(label, store=a)) == value_alloc(policy, "x", source_at(label, store=b))

    @hyp_settings(max_examples=300)
    @given(st.sampled_from([KontPolicy.NAIVE, KontPolicy.NAIVE_1CFA, KontPolicy.P4F]),
           st.integers(0, 4), stores, stores)
    def test_kont_alloc_ignores_store(self, policy, label, a, b):
        env = AbsEnv.of({"x": MonoVar("x")})
        first = kont_alloc(policy, source_at(label, store=a), WORKED.exp(4), env)
        assert kont_alloc(policy, source_at(label, store=b), WORKED.exp(4), env) == first

    @hyp_settings(max_examples=300)
    @given(stores)
    def test_aac_names_stores_structurally(self, a):
        interner = StoreInterner()
        rebuilt = EMPTY_STORE
        for addr, flows in reversed(list(a.items())):
            rebuilt = rebuilt.join_at(addr, flows)
        first = kont_alloc(KontPolicy.AAC, source_at(1, store=a), WORKED.exp(4), EMPTY_ENV, interner=interner)
        second = kont_alloc(KontPolicy.AAC, source_at(1, store=rebuilt), WORKED.exp(4), EMPTY_ENV,
                            interner=interner)
        assert first == second
        assert len(interner) == 1

    def test_aac_needs_an_interner(self):
        with pytest.raises(ValueError):
            kont_alloc(KontPolicy.AAC, source_at(1), WORKED.exp(4), EMPTY_ENV)


def call_sources(sources, value_policy):
    """(source state, target expression, target env) of every call move found from `sources`"""
    found = []
    for xi in sources:
        for c in sorted(xi.reachable, key=lambda c: c.sort_key()):
            source = AbstractState(c.exp, c.env, xi.store, xi.kstore, c.ka)
            for m in machine_moves(source, xi.store, value_policy).moves:
                if isinstance(m, Call):
                    found.append((source, m.exp, m.env))
    return found


@pytest.fixture(scope="module", params=list(ValuePolicy), ids=lambda v: v.value)
def calls(request):
    snapshots = []
    for text in (WORKED_SOURCE, NESTED_SOURCE, DIAMOND_SOURCE):
        analyze(parse_program(text), PolicyPair(value=request.param, kont=KontPolicy.P4F),
                observer=snapshots.append)
    return call_sources(snapshots, request.param)


class TestDiscrimination:
    def addrs(self, policy, subset, interner=None):
        return {kont_alloc(policy, s, e, env, interner=interner) for s, e, env in subset}

    @hyp_settings(max_examples=100, deadline=None)
    @given(st.randoms(use_true_random=False))
    def test_call_site_refines_target(self, calls, rnd):
        subset = [c for c in calls if rnd.random() < 0.5]
        assert len(self.addrs(KontPolicy.NAIVE, subset)) <= len(self.addrs(KontPolicy.NAIVE_1CFA, subset))

    @hyp_settings(max_examples=100, deadline=None)
    @given(st.randoms(use_true_random=False))
    def test_aac_refines_p4f(self, calls, rnd):
        subset = [c for c in calls if rnd.random() < 0.5]
        aac = self.addrs(KontPolicy.AAC, subset, StoreInterner())
        assert len(self.addrs(KontPolicy.P4F, subset)) <= len(aac)

    def test_calls_were_found(self, calls):
        assert len({(e.label, env) for _, e, env in calls}) >= 3
