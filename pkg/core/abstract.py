"""
p4f-cfa - Finite-State Abstract Machine
Call, return, conditional and tail-call transitions over flow sets, with
continuations allocated in a continuation store.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple, Union

from core.allocators import StoreInterner, kont_alloc, value_alloc
from core.domains import (
    ABS_FALSE, ABS_NUM, ABS_TRUE, BOTH_BOOLS, EMPTY_ENV, EMPTY_FLOWS, EMPTY_KSTORE, EMPTY_STORE, HALT,
    AbsAddr, AbsBool, AbsClo, AbsEnv, AbsFrame, AbsKont, AbsNum, AbsPrim, AbsPrimPartial, AbstractState,
    AbsValue, Configuration, FlowSet, KontAddr, KStore, Store, abs_atomic_eval, atomic_reads, rebind,
    sorted_values,
)
from core.models import KontPolicy, PolicyPair, ValuePolicy
from core.syntax import PRIMITIVES, Exp, If, LetCall, Program, Return, TailCall, native_body


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------

_COMPARISONS = {"<", "="}


def abs_apply_prim(fn: Union[AbsPrim, AbsPrimPartial], args: FlowSet) -> FlowSet:
    """Result flows of applying a primitive to every value of `args`"""
    has_num = ABS_NUM in args
    if isinstance(fn, AbsPrimPartial):
        if not has_num:
            return EMPTY_FLOWS
        return BOTH_BOOLS if fn.op in _COMPARISONS else frozenset({ABS_NUM})
    op = fn.op
    if PRIMITIVES[op] == 2:
        return frozenset({AbsPrimPartial(op, ABS_NUM)}) if has_num else EMPTY_FLOWS
    if op == "not":
        return frozenset(AbsBool(not v.value) for v in args if isinstance(v, AbsBool))
    if not has_num:
        return EMPTY_FLOWS
    return BOTH_BOOLS if op == "zero?" else frozenset({ABS_NUM})


# ---------------------------------------------------------------------------
# Machine moves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Binding:
    addr: AbsAddr
    flows: FlowSet


@dataclass(frozen=True)
class Call:
    """Enter a closure or native body from a let-call, pushing `frame`"""
    exp: Exp
    env: AbsEnv
    binding: Binding
    frame: AbsFrame


@dataclass(frozen=True)
class Jump:
    """Move within the current continuation (branch or tail call)"""
    exp: Exp
    env: AbsEnv
    binding: Optional[Binding] = None


@dataclass(frozen=True)
class Deliver:
    """Return `flows` to the topmost frame"""
    flows: FlowSet


Move = Union[Call, Jump, Deliver]


@dataclass
class Moves:
    moves: List[Move] = field(default_factory=list)
    reads: Set[AbsAddr] = field(default_factory=set)
    diagnostics: List[str] = field(default_factory=list)


def _enter_closure(clo: AbsClo, args: FlowSet, source, value_policy: ValuePolicy) -> Tuple[AbsEnv, Binding]:
    lam = clo.lam
    a = value_alloc(value_policy, lam.param, source)
    return rebind(clo.env, lam.param, a, lam.body.free_vars), Binding(a, args)


def machine_moves(source, store: Store, value_policy: ValuePolicy) -> Moves:
    """
    Stack-independent moves out of (source.exp, source.env) against `store`

    Shared by the finite-state machine, the unbounded-stack oracle and
    Dyck graph extraction; each interprets Call/Jump/Deliver against its
    own representation of the stack.

    A primitive is applied like a closure whose body is native: the call
    binds the computed result to the native body's variable and enters that
    body, which returns it.
    """
    e, env = source.exp, source.env
    out = Moves()

    def ev(ae) -> FlowSet:
        a = atomic_reads(ae, env)
        if a is not None:
            out.reads.add(a)
        return abs_atomic_eval(ae, env, store)

    def ev_sorted(ae) -> tuple:
        a = atomic_reads(ae, env)
        if a is not None:
            out.reads.add(a)
            return store.sorted_lookup(a)
        return tuple(sorted_values(abs_atomic_eval(ae, env, store)))

    def enter(body: Exp, body_env: AbsEnv, binding: Binding) -> None:
        if isinstance(e, LetCall):
            frame = AbsFrame(e.bind, e.body, env.restrict(e.frame_live))
            out.moves.append(Call(body, body_env, binding, frame))
        else:
            out.moves.append(Jump(body, body_env, binding))

    if isinstance(e, (LetCall, TailCall)):
        fns, args = ev_sorted(e.fn), ev(e.arg)
        if not args:
            return out
        native: Dict[Return, Set[AbsValue]] = {}
        for f in fns:
            if isinstance(f, AbsClo):
                enter(f.lam.body, *_enter_closure(f, args, source, value_policy))
            elif isinstance(f, (AbsPrim, AbsPrimPartial)):
                body = native_body(f.op, isinstance(f, AbsPrimPartial))
                native.setdefault(body, set()).update(abs_apply_prim(f, args))
            else:
                out.diagnostics.append(f"{f} is not callable at {e.label}")
        for body, results in sorted(native.items(), key=lambda item: -item[0].label):
            if results:
                var = body.ae.name
                a = value_alloc(value_policy, var, source)
                enter(body, AbsEnv(((var, a),)), Binding(a, frozenset(results)))
    elif isinstance(e, Return):
        flows = ev(e.ae)
        if flows:
            out.moves.append(Deliver(flows))
    elif isinstance(e, If):
        flows = ev(e.cond)
        if ABS_TRUE in flows or ABS_NUM in flows:
            out.moves.append(Jump(e.then, env.restrict(e.then.free_vars)))
        if ABS_FALSE in flows or ABS_NUM in flows:
            out.moves.append(Jump(e.orelse, env.restrict(e.orelse.free_vars)))
        if any(not isinstance(v, (AbsBool, AbsNum)) for v in flows):
            out.diagnostics.append(f"non-boolean condition at {e.label}")
    return out


def return_env(frame: AbsFrame, a: AbsAddr) -> AbsEnv:
    """Environment of the return point after binding the returned value at `a`"""
    return rebind(frame.env, frame.bind, a, frame.ret.free_vars)


# ---------------------------------------------------------------------------
# Finite-state transitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    target: Configuration
    value_updates: Tuple[Tuple[AbsAddr, FlowSet], ...] = ()
    kont_updates: Tuple[Tuple[KontAddr, AbsKont], ...] = ()


@dataclass
class StepOutcome:
    """Transitions of one configuration plus what the step read"""
    transitions: List[Transition] = field(default_factory=list)
    reads: Set[AbsAddr] = field(default_factory=set)
    kont_reads: Set[KontAddr] = field(default_factory=set)
    whole_store: bool = False
    halted: FlowSet = EMPTY_FLOWS
    returned: FlowSet = EMPTY_FLOWS
    diagnostics: List[str] = field(default_factory=list)


def return_transition(config: Configuration, k: AbsKont, flows: FlowSet, value_policy: ValuePolicy) -> Transition:
    """Return `flows` from `config` through the continuation `k`"""
    a = value_alloc(value_policy, k.frame.bind, config)
    return Transition(Configuration(k.frame.ret, return_env(k.frame, a), k.tail), ((a, flows),))


def step_configuration(
    config: Configuration,
    store: Store,
    kstore: KStore,
    policy: PolicyPair,
    interner: Optional[StoreInterner] = None,
) -> StepOutcome:
    """
    Transitions of one configuration against the given stores

    `returned` holds the flows a Return delivered to a non-halt continuation
    address, so a driver can hand them to frames that arrive later.
    """
    source = AbstractState(config.exp, config.env, store, kstore, config.ka)
    moves = machine_moves(source, store, policy.value)
    out = StepOutcome(reads=moves.reads, diagnostics=moves.diagnostics)
    for m in moves.moves:
        if isinstance(m, Call):
            ka = kont_alloc(policy.kont, source, m.exp, m.env, None, interner)
            if policy.kont == KontPolicy.AAC:
                out.whole_store = True
            out.transitions.append(Transition(
                Configuration(m.exp, m.env, ka),
                ((m.binding.addr, m.binding.flows),),
                ((ka, AbsKont(m.frame, config.ka)),),
            ))
        elif isinstance(m, Jump):
            updates = ((m.binding.addr, m.binding.flows),) if m.binding else ()
            out.transitions.append(Transition(Configuration(m.exp, m.env, config.ka), updates))
        else:
            out.kont_reads.add(config.ka)
            if config.ka == HALT:
                out.halted = out.halted | m.flows
                continue
            out.returned = out.returned | m.flows
            for k in kstore.sorted_lookup(config.ka):
                out.transitions.append(return_transition(config, k, m.flows, policy.value))
    return out


def abs_step(
    state: AbstractState,
    policy: PolicyPair,
    interner: Optional[StoreInterner] = None,
) -> List[AbstractState]:
    """
    Successors of one abstract state, in canonical order

    Each successor carries the state's stores joined with the bindings and
    continuations its own transition produced.
    """
    outcome = step_configuration(state.configuration, state.store, state.kstore, policy, interner)
    successors: List[AbstractState] = []
    seen = set()
    for t in outcome.transitions:
        store, kstore = state.store, state.kstore
        for a, flows in t.value_updates:
            store = store.join_at(a, flows)
        for ka, k in t.kont_updates:
            kstore = kstore.join_at(ka, (k,))
        succ = AbstractState(t.target.exp, t.target.env, store, kstore, t.target.ka)
        if succ not in seen:
            seen.add(succ)
            successors.append(succ)
    return successors


def abs_inject(p: Program) -> AbstractState:
    """(root, empty env, bottom stores, halt)"""
    return AbstractState(p.root, EMPTY_ENV, EMPTY_STORE, EMPTY_KSTORE, HALT)
