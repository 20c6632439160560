"""
p4f-cfa - Unbounded-Stack Oracle
Store-widened analysis with explicit stacks, Dyck state graph extraction,
implied stacks of a continuation store and the precision checker that
compares finite-state results against the oracle.

The oracle is bounded: configurations deeper than the bound are recorded but
never stepped, and the result says whether the bound was ever hit.
"""

from __future__ import annotations

import hashlib
import logging
import time
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, List, NamedTuple, Optional, Set, Tuple, Union

import networkx

from config.settings import settings
from core.abstract import Call, Deliver, Jump, machine_moves, return_env
from core.allocators import value_alloc
from core.domains import (
    EMPTY_ENV, EMPTY_FLOWS, EMPTY_STORE, HALT,
    AbsAddr, AbsEnv, AbsFrame, AbsKont, Configuration, FlowSet, GrowingMap, KontAddr, KStore, Store, show_flows,
)
from core.exceptions import IncompleteOracle, ResourceLimit
from core.models import Metrics, PrecisionReport, PrecisionViolation, StoreViolation, ValuePolicy
from core.syntax import Exp, Program

logger = logging.getLogger(__name__)

Stack = Tuple[AbsFrame, ...]
ImpliedStack = Tuple[AbsKont, ...]


@dataclass(frozen=True)
class HatConfiguration:
    """(exp, env, stack) with the stack as an explicit tuple, top first"""

    exp: Exp
    env: AbsEnv
    kont: Stack = ()

    def __hash__(self) -> int:
        return self._hash

    @cached_property
    def _hash(self) -> int:
        return hash((self.exp.label, self.env, self.kont))

    @property
    def depth(self) -> int:
        return len(self.kont)

    def sort_key(self) -> tuple:
        return (self.exp.label, self.env.sort_key(), len(self.kont), tuple(f.sort_key() for f in self.kont))

    def __str__(self) -> str:
        frames = " ".join(str(f) for f in self.kont)
        return f"({self.exp.label}, {self.env}, [{frames}])"


@dataclass(frozen=True)
class OracleResult:
    reachable: FrozenSet[HatConfiguration]
    store: Store
    bound: int
    complete: bool
    halt_flows: FlowSet = EMPTY_FLOWS
    metrics: Metrics = field(default_factory=Metrics, compare=False)
    program: Optional[Program] = field(default=None, compare=False, repr=False)
    value_policy: Optional[ValuePolicy] = field(default=None, compare=False)

    def configurations(self) -> List[HatConfiguration]:
        return sorted(self.reachable, key=lambda c: c.sort_key())


# ---------------------------------------------------------------------------
# Edge actions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Push:
    frame: AbsFrame

    def sort_key(self) -> tuple:
        return (0, self.frame.sort_key())

    def __str__(self) -> str:
        return f"+{self.frame}"


@dataclass(frozen=True)
class Pop:
    frame: AbsFrame

    def sort_key(self) -> tuple:
        return (1, self.frame.sort_key())

    def __str__(self) -> str:
        return f"-{self.frame}"


@dataclass(frozen=True)
class Neutral:
    def sort_key(self) -> tuple:
        return (2,)

    def __str__(self) -> str:
        return "ε"


EdgeAction = Union[Push, Pop, Neutral]
NEUTRAL = Neutral()


@dataclass(frozen=True)
class OracleTransition:
    target: HatConfiguration
    action: EdgeAction
    value_updates: Tuple[Tuple[AbsAddr, FlowSet], ...] = ()


@dataclass
class OracleStep:
    transitions: List[OracleTransition] = field(default_factory=list)
    reads: Set[AbsAddr] = field(default_factory=set)
    halted: FlowSet = EMPTY_FLOWS


def oracle_step(c: HatConfiguration, store: Store, value_policy: ValuePolicy) -> OracleStep:
    """Transitions of one oracle configuration: calls push, returns pop, the rest keep the stack"""
    moves = machine_moves(c, store, value_policy)
    out = OracleStep(reads=moves.reads)
    for m in moves.moves:
        if isinstance(m, Call):
            out.transitions.append(OracleTransition(
                HatConfiguration(m.exp, m.env, (m.frame,) + c.kont),
                Push(m.frame),
                ((m.binding.addr, m.binding.flows),),
            ))
        elif isinstance(m, Jump):
            updates = ((m.binding.addr, m.binding.flows),) if m.binding else ()
            out.transitions.append(OracleTransition(HatConfiguration(m.exp, m.env, c.kont), NEUTRAL, updates))
        elif isinstance(m, Deliver):
            if not c.kont:
                out.halted = out.halted | m.flows
                continue
            frame = c.kont[0]
            a = value_alloc(value_policy, frame.bind, c)
            out.transitions.append(OracleTransition(
                HatConfiguration(frame.ret, return_env(frame, a), c.kont[1:]),
                Pop(frame),
                ((a, m.flows),),
            ))
    return out


def oracle_analyze(
    p: Program,
    value_policy: ValuePolicy,
    depth_bound: Optional[int] = None,
    max_configurations: Optional[int] = None,
    max_wall_seconds: Optional[float] = None,
) -> OracleResult:
    """
    Fixed point of the widened unbounded-stack transfer, up to a stack depth

    Configurations whose stack is deeper than `depth_bound` are added to the
    reachable set but not stepped; the result is then marked incomplete.

    Raises:
        ResourceLimit: the configuration or wall-time ceiling was exceeded
    """
    bound = settings.ORACLE_DEPTH_BOUND if depth_bound is None else depth_bound
    max_configurations = max_configurations or settings.MAX_CONFIGURATIONS
    max_wall_seconds = max_wall_seconds or settings.MAX_WALL_SECONDS
    started = time.perf_counter()

    init = HatConfiguration(p.root, EMPTY_ENV, ())
    seen: Set[HatConfiguration] = {init}
    store, halt = GrowingMap(EMPTY_STORE), EMPTY_FLOWS
    readers: Dict[AbsAddr, Dict[HatConfiguration, None]] = defaultdict(dict)
    complete = True
    metrics = Metrics()

    queue = deque([init])
    queued = {init}
    while queue:
        c = queue.popleft()
        queued.discard(c)
        if c.depth > bound:
            if complete:
                logger.info("oracle: stack bound %d hit at label %d", bound, c.exp.label)
            complete = False
            continue
        metrics.states_visited += 1
        out = oracle_step(c, store, value_policy)
        for a in out.reads:
            readers[a][c] = None
        halt = halt | out.halted
        for t in out.transitions:
            metrics.transitions += 1
            for a, flows in t.value_updates:
                if store.join_at(a, flows):
                    for d in readers.get(a, ()):
                        if d not in queued:
                            queued.add(d)
                            queue.append(d)
            if t.target not in seen:
                seen.add(t.target)
                queued.add(t.target)
                queue.append(t.target)
        if len(seen) > max_configurations:
            logger.warning("oracle: configuration ceiling %d exceeded", max_configurations)
            raise ResourceLimit("oracle_configurations", len(seen))
        elapsed = time.perf_counter() - started
        if elapsed > max_wall_seconds:
            raise ResourceLimit("wall_seconds", round(elapsed, 3))

    metrics.configurations = len(seen)
    logger.info("oracle (%s, bound %d): %d configurations, complete=%s",
                value_policy.value, bound, len(seen), complete)
    return OracleResult(frozenset(seen), store.freeze(), bound, complete, halt, metrics, p, value_policy)


# ---------------------------------------------------------------------------
# Dyck state graphs
# ---------------------------------------------------------------------------


class Vertex(NamedTuple):
    exp: Exp
    env: AbsEnv

    def sort_key(self) -> tuple:
        return (self.exp.label, self.env.sort_key())

    def dot_id(self) -> str:
        digest = hashlib.sha1(str(self.env).encode()).hexdigest()[:6]
        return f"{self.exp.label}@{digest}"


class DyckEdge(NamedTuple):
    src: Vertex
    action: EdgeAction
    dst: Vertex

    def sort_key(self) -> tuple:
        return (self.src.sort_key(), self.action.sort_key(), self.dst.sort_key())


@dataclass(frozen=True)
class DyckGraph:
    vertices: FrozenSet[Vertex]
    edges: FrozenSet[DyckEdge]

    def edges_of(self, kind: type) -> FrozenSet[DyckEdge]:
        return frozenset(e for e in self.edges if isinstance(e.action, kind))

    def to_networkx(self) -> networkx.MultiDiGraph:
        g = networkx.MultiDiGraph()
        for v in sorted(self.vertices, key=lambda v: v.sort_key()):
            g.add_node(v, label=v.dot_id())
        for e in sorted(self.edges, key=lambda e: e.sort_key()):
            g.add_edge(e.src, e.dst, key=str(e.action), action=e.action)
        return g

    def to_dot(self) -> str:
        out = "digraph dsg {\nnode [shape = \"box\"];\n"
        for v in sorted(self.vertices, key=lambda v: v.sort_key()):
            out += f'"{v.dot_id()}";\n'
        for e in sorted(self.edges, key=lambda e: e.sort_key()):
            label = str(e.action).replace('"', '\\"')
            out += f'"{e.src.dot_id()}" -> "{e.dst.dot_id()}" [label="{label}"];\n'
        out += "}\n"
        return out


def dsg_extract(xi: OracleResult) -> DyckGraph:
    """
    Dyck state graph of a complete oracle fixed point

    Raises:
        IncompleteOracle: the oracle hit its stack bound
    """
    if not xi.complete:
        raise IncompleteOracle(f"oracle hit its stack bound {xi.bound}")
    vertices = {Vertex(c.exp, c.env) for c in xi.reachable}
    edges = set()
    for c in xi.configurations():
        src = Vertex(c.exp, c.env)
        for t in oracle_step(c, xi.store, xi.value_policy).transitions:
            edges.add(DyckEdge(src, t.action, Vertex(t.target.exp, t.target.env)))
    return DyckGraph(frozenset(vertices), frozenset(edges))


def unmatched_pops(graph: DyckGraph) -> List[DyckEdge]:
    """Pop edges whose frame is pushed by no edge on a path reaching them"""
    g = networkx.DiGraph()
    g.add_nodes_from(graph.vertices)
    g.add_edges_from((e.src, e.dst) for e in graph.edges)
    pushes: Dict[AbsFrame, Set[Vertex]] = defaultdict(set)
    for e in graph.edges_of(Push):
        pushes[e.action.frame].add(e.dst)

    unmatched = []
    for e in sorted(graph.edges_of(Pop), key=lambda e: e.sort_key()):
        ancestors = networkx.ancestors(g, e.src) | {e.src}
        if not pushes.get(e.action.frame, set()) & ancestors:
            unmatched.append(e)
    return unmatched


# ---------------------------------------------------------------------------
# Implied stacks and precision
# ---------------------------------------------------------------------------


def implied_stacks(
    ka: KontAddr,
    kstore: KStore,
    depth_bound: int,
    limit: Optional[int] = None,
) -> Tuple[FrozenSet[ImpliedStack], bool]:
    """
    Stacks a continuation address implies through `kstore`, breadth first

    Halt implies the empty stack; any other address prepends each of its
    continuations to the stacks its tail implies. Chains ending at an address
    with no continuations imply nothing.

    Returns:
        (stacks, exhausted) where exhausted is False if any chain was cut at
        `depth_bound` or the enumeration stopped at `limit` stacks
    """
    limit = limit or settings.MAX_IMPLIED_STACKS
    stacks: Set[ImpliedStack] = set()
    exhausted = True
    queue = deque([(ka, ())])
    while queue:
        addr, prefix = queue.popleft()
        if addr == HALT:
            stacks.add(prefix)
            if len(stacks) >= limit and queue:
                exhausted = False
                break
            continue
        konts = kstore.lookup(addr)
        if not konts:
            continue
        if len(prefix) >= depth_bound:
            exhausted = False
            continue
        for k in sorted(konts, key=lambda k: k.sort_key()):
            queue.append((k.tail, prefix + (k,)))
    return frozenset(stacks), exhausted


def concretize_stack(psi: ImpliedStack) -> Stack:
    """Drop the tail addresses, keeping the frames top first"""
    return tuple(k.frame for k in psi)


def concretize_config(c: Configuration, psi: ImpliedStack) -> HatConfiguration:
    return HatConfiguration(c.exp, c.env, concretize_stack(psi))


def precision_check(finite, xi: OracleResult, depth_bound: Optional[int] = None) -> PrecisionReport:
    """
    Compare a finite-state result against a complete oracle

    Every reachable configuration, paired with each of its implied stacks,
    must be an oracle configuration, and every finite store entry must be
    contained in the oracle store.

    Raises:
        IncompleteOracle: the oracle hit its stack bound
    """
    if not xi.complete:
        raise IncompleteOracle(f"oracle hit its stack bound {xi.bound}; raise --oracle-depth")
    bound = xi.bound if depth_bound is None else depth_bound
    report = PrecisionReport(oracle_complete=True)

    implied: Dict[KontAddr, Tuple[FrozenSet[ImpliedStack], bool]] = {}
    for c in finite.configurations():
        if c.ka not in implied:
            implied[c.ka] = implied_stacks(c.ka, finite.kstore, bound)
        stacks, exhausted = implied[c.ka]
        if not exhausted:
            report.unexhausted_configs += 1
        for psi in sorted(stacks, key=lambda s: tuple(k.sort_key() for k in s)):
            report.checked_pairs += 1
            hat = concretize_config(c, psi)
            if hat not in xi.reachable:
                report.violations.append(PrecisionViolation(
                    config=str(c),
                    implied_stack=[str(k) for k in psi],
                    missing_oracle_config=str(hat),
                ))

    for a, flows in finite.store.items():
        oracle_flows = xi.store.lookup(a)
        if not flows <= oracle_flows:
            report.store_violations.append(StoreViolation(
                address=str(a), finite=show_flows(flows), oracle=show_flows(oracle_flows),
            ))

    if report.violations or report.store_violations:
        logger.info("precision check: %d configuration and %d store violations",
                    len(report.violations), len(report.store_violations))
    return report
