"""
p4f-cfa - Allocation Policies
Value-address and continuation-address allocators.

Allocators only look at what they are given: value_alloc reads the
expression of the source state, kont_alloc the source state and the target
expression and environment of a call transition. AAC additionally reads the
source store, which it names through a StoreInterner.
"""

import threading
from typing import Dict, Optional, Protocol

from core.domains import (
    AAC, P4F, AbsAddr, AbsEnv, CallVar, Configuration, KontAddr, MonoVar, Store, TargetExp, TargetExpCall,
)
from core.models import KontPolicy, ValuePolicy
from core.syntax import Exp


class SourceState(Protocol):
    """What an allocator may inspect of the state performing the allocation"""

    exp: Exp
    env: AbsEnv
    store: Optional[Store]


class StoreInterner:
    """Assigns small integer identifiers to structurally equal stores"""

    def __init__(self):
        self._ids: Dict[Store, int] = {}
        self._last: tuple = (None, -1)
        self._lock = threading.Lock()

    def intern(self, store: Store) -> int:
        last_store, last_id = self._last
        if store is last_store:
            return last_id
        with self._lock:
            sid = self._ids.get(store)
            if sid is None:
                sid = len(self._ids)
                self._ids[store] = sid
            self._last = (store, sid)
        return sid

    def __len__(self) -> int:
        return len(self._ids)


def value_alloc(policy: ValuePolicy, x: str, state: SourceState) -> AbsAddr:
    """
    Abstract address for binding x in a transition out of `state`

    Args:
        policy: MONO uses the variable itself, CALL1 pairs it with the source expression label
        x: the variable being bound
        state: source state of the transition
    """
    if policy == ValuePolicy.MONO:
        return MonoVar(x)
    return CallVar(x, state.exp.label)


def kont_alloc(
    policy: KontPolicy,
    state: SourceState,
    target_exp: Exp,
    target_env: AbsEnv,
    target_store: Optional[Store] = None,
    interner: Optional[StoreInterner] = None,
) -> KontAddr:
    """
    Continuation address for a call from `state` into (target_exp, target_env)

    Never returns the halt address. `target_store` is accepted for the
    general allocator signature; none of the implemented policies reads it.

    Raises:
        ValueError: AAC allocation without an interner to name the source store
    """
    if policy == KontPolicy.NAIVE:
        return TargetExp(target_exp.label)
    if policy == KontPolicy.NAIVE_1CFA:
        return TargetExpCall(target_exp.label, state.exp.label)
    if policy == KontPolicy.P4F:
        return P4F(target_exp.label, target_env)
    if interner is None:
        raise ValueError("AAC continuation addresses need a StoreInterner")
    store_id = interner.intern(state.store.freeze())
    return AAC(target_exp.label, target_env, state.exp.label, state.env, store_id)


def entry_of(ka: P4F, program) -> Configuration:
    """The Entry configuration (e, env, (e, env)) a P4F address determines"""
    return Configuration(program.exp(ka.e), ka.env, ka)
