"""
p4f-cfa - Fixed-Point Engine
Store-widened analysis over (configurations, value store, continuation
store), its worklist driver, flow queries, the per-state-store reference
semantics and the soundness replay against concrete runs.
"""

from __future__ import annotations

import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, NamedTuple, Optional, Set, Tuple

from config.settings import settings
from core.abstract import Transition, abs_inject, abs_step, return_transition, step_configuration
from core.allocators import StoreInterner, entry_of, value_alloc
from core.concrete import Bool, Clo, ConcreteRun, CStore, CValue, Halted, Num, Prim, PrimPartial
from core.domains import (
    ABS_NUM, EMPTY_ENV, EMPTY_FLOWS, EMPTY_KSTORE, EMPTY_STORE, HALT, P4F,
    AbsAddr, AbsBool, AbsClo, AbsEnv, AbsPrim, AbsPrimPartial, AbstractState, AbsValue,
    Configuration, FlowSet, GrowingMap, KontAddr, KStore, Store, show_flows,
)
from core.exceptions import ResourceLimit, UnknownVariable
from core.models import AnalysisReport, Metrics, PolicyPair, WorklistOrder
from core.syntax import Exp, Program

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnalysisResult:
    """
    A store-widened analysis result.

    Equality covers the reachable configurations, both stores and the
    values delivered to halt; metrics and bookkeeping are ignored.
    `diagnostics` lists, sorted and without repeats, the non-callable
    operators and non-boolean conditions met along the way.
    """

    reachable: FrozenSet[Configuration]
    store: Store
    kstore: KStore
    halt_flows: FlowSet = EMPTY_FLOWS
    metrics: Metrics = field(default_factory=Metrics, compare=False)
    program: Optional[Program] = field(default=None, compare=False, repr=False)
    policy: Optional[PolicyPair] = field(default=None, compare=False)
    interner: Optional[StoreInterner] = field(default=None, compare=False, repr=False)
    diagnostics: Tuple[str, ...] = field(default=(), compare=False)

    def configurations(self) -> List[Configuration]:
        return sorted(self.reachable, key=lambda c: c.sort_key())

    def leq(self, other: "AnalysisResult") -> bool:
        """Componentwise order of the widened state space"""
        return (
            self.reachable <= other.reachable
            and self.store.leq(other.store)
            and self.kstore.leq(other.kstore)
            and self.halt_flows <= other.halt_flows
        )


def initial_configuration(p: Program) -> Configuration:
    return Configuration(p.root, EMPTY_ENV, HALT)


def initial_result(p: Program, policy: PolicyPair, interner: Optional[StoreInterner] = None) -> AnalysisResult:
    """({(root, empty, halt)}, bottom, bottom)"""
    init = initial_configuration(p)
    return AnalysisResult(
        frozenset({init}), EMPTY_STORE, EMPTY_KSTORE,
        metrics=Metrics(configurations=1), program=p, policy=policy, interner=interner or StoreInterner(),
    )


def widened_transfer(
    xi: AnalysisResult,
    p: Program,
    policy: PolicyPair,
    interner: Optional[StoreInterner] = None,
) -> AnalysisResult:
    """
    One application of the widened transfer function

    Every reachable configuration is stepped against the current global
    stores; successors are added, all successor bindings are joined into the
    new globals, and the initial configuration is always re-added.
    """
    interner = interner or xi.interner or StoreInterner()
    reachable: Set[Configuration] = set(xi.reachable)
    reachable.add(initial_configuration(p))
    store, kstore, halt = GrowingMap(xi.store), GrowingMap(xi.kstore), xi.halt_flows
    diagnostics: Set[str] = set(xi.diagnostics)
    transitions = 0
    for c in xi.configurations():
        out = step_configuration(c, xi.store, xi.kstore, policy, interner)
        halt = halt | out.halted
        diagnostics.update(out.diagnostics)
        for t in out.transitions:
            transitions += 1
            reachable.add(t.target)
            for a, flows in t.value_updates:
                store.join_at(a, flows)
            for ka, k in t.kont_updates:
                kstore.join_at(ka, (k,))
    metrics = Metrics(
        configurations=len(reachable),
        states_visited=len(xi.reachable),
        transitions=transitions,
        iterations=1,
    )
    return AnalysisResult(
        frozenset(reachable), store.freeze(), kstore.freeze(), halt, metrics, p, policy, interner,
        diagnostics=tuple(sorted(diagnostics)),
    )


# ---------------------------------------------------------------------------
# Worklist driver
# ---------------------------------------------------------------------------


class _Worklist:
    """Next-pass queue without duplicates"""

    def __init__(self):
        self.items: List[Configuration] = []
        self._members: Set[Configuration] = set()

    def push(self, c: Configuration) -> None:
        if c not in self._members:
            self._members.add(c)
            self.items.append(c)

    def drain(self, order: WorklistOrder) -> List[Configuration]:
        batch = self.items if order == WorklistOrder.FIFO else self.items[::-1]
        self.items, self._members = [], set()
        return batch

    def __bool__(self) -> bool:
        return bool(self.items)


def analyze(
    p: Program,
    policy: PolicyPair,
    order: WorklistOrder = WorklistOrder.FIFO,
    observer: Optional[Callable[[AnalysisResult], None]] = None,
    max_configurations: Optional[int] = None,
    max_wall_seconds: Optional[float] = None,
    interner: Optional[StoreInterner] = None,
) -> AnalysisResult:
    """
    Least fixed point of the widened transfer function

    Configurations are processed in passes against working copies of the
    two stores. Store joins apply immediately and a configuration is queued
    again when an address it read grows. Calls under AAC read the whole
    store and are queued on any store change. When a continuation address
    gains a frame, the flows already returned through that address go to
    the new frame directly instead of re-stepping the returning
    configurations.

    Args:
        p: a validated program
        policy: value and continuation allocation policies
        order: processing order within a pass
        observer: called with a snapshot after every pass
        max_configurations: ceiling on reachable configurations
        max_wall_seconds: ceiling on elapsed time

    Raises:
        ResourceLimit: a ceiling was exceeded
    """
    max_configurations = max_configurations or settings.MAX_CONFIGURATIONS
    max_wall_seconds = max_wall_seconds or settings.MAX_WALL_SECONDS
    interner = interner or StoreInterner()
    started = time.perf_counter()

    init = initial_configuration(p)
    seen: Set[Configuration] = {init}
    store, kstore, halt = GrowingMap(EMPTY_STORE), GrowingMap(EMPTY_KSTORE), EMPTY_FLOWS
    # dicts as insertion-ordered sets keep the queue order independent of hashing
    readers: Dict[AbsAddr, Dict[Configuration, None]] = defaultdict(dict)
    kont_readers: Dict[KontAddr, Dict[Configuration, None]] = defaultdict(dict)
    whole_store_readers: Dict[Configuration, None] = {}
    returned: Dict[Configuration, FlowSet] = {}
    diagnostics: Set[str] = set()
    metrics = Metrics()
    worklist = _Worklist()

    def apply(t: Transition) -> None:
        metrics.transitions += 1
        store_changed = False
        for a, flows in t.value_updates:
            if store.join_at(a, flows):
                store_changed = True
                for d in readers.get(a, ()):
                    worklist.push(d)
        if store_changed:
            for d in whole_store_readers:
                worklist.push(d)
        for ka, k in t.kont_updates:
            if kstore.join_at(ka, (k,)):
                for d in kont_readers.get(ka, ()):
                    if d in returned:
                        apply(return_transition(d, k, returned[d], policy.value))
        if t.target not in seen:
            seen.add(t.target)
            worklist.push(t.target)

    def snapshot() -> AnalysisResult:
        return AnalysisResult(
            frozenset(seen), store.freeze(), kstore.freeze(), halt, metrics.model_copy(), p, policy, interner,
            diagnostics=tuple(sorted(diagnostics)),
        )

    worklist.push(init)
    while worklist:
        metrics.iterations += 1
        for c in worklist.drain(order):
            metrics.states_visited += 1
            out = step_configuration(c, store, kstore, policy, interner)
            for a in out.reads:
                readers[a][c] = None
            for ka in out.kont_reads:
                kont_readers[ka][c] = None
            if out.whole_store:
                whole_store_readers[c] = None
            if out.returned:
                returned[c] = out.returned
            halt = halt | out.halted
            diagnostics.update(out.diagnostics)
            for t in out.transitions:
                apply(t)

            if len(seen) > max_configurations:
                logger.warning("%s: configuration ceiling %d exceeded", policy.key, max_configurations)
                raise ResourceLimit("configurations", len(seen))
            elapsed = time.perf_counter() - started
            if elapsed > max_wall_seconds:
                logger.warning("%s: wall-time ceiling %.1fs exceeded", policy.key, max_wall_seconds)
                raise ResourceLimit("wall_seconds", round(elapsed, 3))

        metrics.configurations = len(seen)
        logger.debug(
            "%s pass %d: %d configurations, %d queued",
            policy.key, metrics.iterations, len(seen), len(worklist.items),
        )
        if observer is not None:
            observer(snapshot())

    metrics.configurations = len(seen)
    logger.info(
        "%s: fixed point after %d passes, %d configurations, %d states visited",
        policy.key, metrics.iterations, metrics.configurations, metrics.states_visited,
    )
    return snapshot()


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------


def flow_query(xi: AnalysisResult, x: str) -> Dict[AbsAddr, FlowSet]:
    """
    Every store entry whose address binds `x`

    Raises:
        UnknownVariable: no address in the store binds `x`
    """
    entries = {a: flows for a, flows in xi.store.items() if a.var == x}
    if not entries:
        raise UnknownVariable(x)
    return entries


def variable_flows(xi: AnalysisResult) -> Dict[str, FlowSet]:
    """Per-variable flow sets, joined across all addresses of the variable"""
    table: Dict[str, FlowSet] = {}
    for a, flows in xi.store.items():
        table[a.var] = table.get(a.var, EMPTY_FLOWS) | flows
    return dict(sorted(table.items()))


def missing_entries(xi: AnalysisResult) -> List[P4F]:
    """P4F addresses with continuations whose Entry configuration is unreachable"""
    missing = []
    for ka, _ in xi.kstore.items():
        if not isinstance(ka, P4F):
            continue
        if entry_of(ka, xi.program) not in xi.reachable:
            missing.append(ka)
    return missing


def build_report(xi: AnalysisResult, name: str, wall_ms: float = 0.0) -> AnalysisReport:
    """Report for JSON output"""
    flows: Dict[str, Dict[str, List[str]]] = {}
    for a, vs in xi.store.items():
        flows.setdefault(a.var, {})[str(a)] = show_flows(vs)
    return AnalysisReport(
        program=name,
        value_policy=xi.policy.value,
        kont_policy=xi.policy.kont,
        configurations=xi.metrics.configurations,
        states_visited=xi.metrics.states_visited,
        transitions=xi.metrics.transitions,
        iterations=xi.metrics.iterations,
        flows=dict(sorted(flows.items())),
        diagnostics=list(xi.diagnostics),
        wall_ms=round(wall_ms, 3),
    )


# ---------------------------------------------------------------------------
# Per-state-store reference semantics
# ---------------------------------------------------------------------------


def naive_collect(p: Program, policy: PolicyPair, state_limit: Optional[int] = None) -> FrozenSet[AbstractState]:
    """
    Fixed point of the collecting semantics with a store in every state

    Raises:
        ResourceLimit: more than `state_limit` states were reached
    """
    state_limit = state_limit or settings.NAIVE_STATE_LIMIT
    interner = StoreInterner()
    start = abs_inject(p)
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for s in frontier:
            for succ in abs_step(s, policy, interner):
                if succ not in seen:
                    seen.add(succ)
                    nxt.append(succ)
        if len(seen) > state_limit:
            raise ResourceLimit("naive_states", len(seen))
        frontier = nxt
    logger.debug("naive collecting semantics: %d states", len(seen))
    return frozenset(seen)


def collected_stores(states) -> Tuple[Store, KStore]:
    """Join of the stores of a set of states"""
    store, kstore = EMPTY_STORE, EMPTY_KSTORE
    for s in states:
        store = store.join(s.store)
        kstore = kstore.join(s.kstore)
    return store, kstore


# ---------------------------------------------------------------------------
# Soundness against concrete runs
# ---------------------------------------------------------------------------


class _Site(NamedTuple):
    exp: Exp
    env: AbsEnv = EMPTY_ENV
    store: Optional[Store] = None


class _Abstraction:
    """Maps concrete addresses and values into the abstract domains of one policy"""

    def __init__(self, program: Program, policy: PolicyPair, cstore: CStore):
        self.program = program
        self.policy = policy
        self.cstore = cstore
        self._addrs: Dict[int, AbsAddr] = {}

    def addr(self, a: int) -> AbsAddr:
        if a not in self._addrs:
            site = self.cstore.site(a)
            self._addrs[a] = value_alloc(self.policy.value, site.var, _Site(self.program.exp(site.label)))
        return self._addrs[a]

    def value(self, v: CValue) -> AbsValue:
        if isinstance(v, Clo):
            env = AbsEnv.of({x: self.addr(v.env[x]) for x in v.lam.free_vars})
            return AbsClo(v.lam, env)
        if isinstance(v, Bool):
            return AbsBool(v.value)
        if isinstance(v, Num):
            return ABS_NUM
        if isinstance(v, Prim):
            return AbsPrim(v.op)
        if isinstance(v, PrimPartial):
            return AbsPrimPartial(v.op, self.value(v.arg))
        raise TypeError(f"not a concrete value: {v!r}")


def soundness_violations(run: ConcreteRun, xi: AnalysisResult) -> List[str]:
    """
    Concrete bindings whose abstraction is missing from the analysis

    Each concrete address is mapped through the allocator applied to its
    binding site; the abstracted value must be in the store at that address.
    A halted run's final value must also reach halt.
    """
    alpha = _Abstraction(xi.program, xi.policy, run.store)
    problems = []
    for a, site, v in run.store.items():
        abs_addr = alpha.addr(a)
        abs_value = alpha.value(v)
        if abs_value not in xi.store.lookup(abs_addr):
            problems.append(f"{site.var}@{site.label}: {abs_value} not in {abs_addr}")
    if isinstance(run.outcome, Halted):
        final = alpha.value(run.outcome.value)
        if final not in xi.halt_flows:
            problems.append(f"halt: {final} not delivered")
    return problems
