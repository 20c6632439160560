"""
p4f-cfa - Concrete Machine
Exact CESK-style interpreter used as ground truth for soundness tests.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Tuple, Union

from core.exceptions import StuckState, UnboundVariable
from core.models import TraceLine
from core.syntax import (
    PRIMITIVES, BoolLit, Exp, If, Lam, LetCall, NumLit, PrimRef, Program, Return, TailCall, VarRef, native_body,
)
from config.settings import settings

logger = logging.getLogger(__name__)

CAddr = int
CEnv = Mapping[str, CAddr]


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Clo:
    lam: Lam
    env: CEnv


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Prim:
    op: str


@dataclass(frozen=True)
class PrimPartial:
    """A curried binary primitive holding its first argument"""
    op: str
    arg: "CValue"


CValue = Union[Clo, Bool, Num, Prim, PrimPartial]


def show_value(v: CValue) -> str:
    if isinstance(v, Clo):
        return f"<closure ({v.lam.param}) @{v.lam.body.label}>"
    if isinstance(v, Bool):
        return "#t" if v.value else "#f"
    if isinstance(v, Num):
        return str(v.value)
    if isinstance(v, Prim):
        return v.op
    return f"({v.op} {show_value(v.arg)})"


# ---------------------------------------------------------------------------
# Store, frames, states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BindingSite:
    """Allocation context of a concrete address"""
    var: str
    label: int


class CStore:
    """
    Append-only store; addresses are serial numbers.

    Stores produced along one run share their arrays; a store only sees the
    first `size` entries, so older states keep their view of the heap.
    """

    __slots__ = ("_values", "_sites", "size")

    def __init__(self, values: List[CValue] = None, sites: List[BindingSite] = None, size: int = 0):
        self._values = values if values is not None else []
        self._sites = sites if sites is not None else []
        self.size = size

    def __len__(self) -> int:
        return self.size

    def __contains__(self, a: CAddr) -> bool:
        return 0 <= a < self.size

    def lookup(self, a: CAddr) -> CValue:
        if a not in self:
            raise KeyError(a)
        return self._values[a]

    def site(self, a: CAddr) -> BindingSite:
        if a not in self:
            raise KeyError(a)
        return self._sites[a]

    def extend(self, value: CValue, site: BindingSite) -> Tuple["CStore", CAddr]:
        values, sites = self._values, self._sites
        if self.size != len(values):
            # stepping an older state: branch off a private copy
            values, sites = values[: self.size], sites[: self.size]
        values.append(value)
        sites.append(site)
        return CStore(values, sites, self.size + 1), self.size

    def items(self) -> Iterator[Tuple[CAddr, BindingSite, CValue]]:
        for a in range(self.size):
            yield a, self._sites[a], self._values[a]


@dataclass(frozen=True)
class CFrame:
    bind: str
    ret: Exp
    env: CEnv


@dataclass(frozen=True)
class CKont:
    """Non-empty stack cell; the empty stack is None"""
    frame: CFrame
    rest: Optional["CKont"]
    depth: int

    def frames(self) -> Iterator[CFrame]:
        cell = self
        while cell is not None:
            yield cell.frame
            cell = cell.rest


def push(frame: CFrame, kont: Optional[CKont]) -> CKont:
    return CKont(frame, kont, kont_depth(kont) + 1)


def kont_depth(kont: Optional[CKont]) -> int:
    return 0 if kont is None else kont.depth


@dataclass(frozen=True)
class CState:
    exp: Exp
    env: CEnv
    store: CStore
    kont: Optional[CKont]


@dataclass(frozen=True)
class Halted:
    value: CValue


@dataclass(frozen=True)
class Stuck:
    reason: str


@dataclass(frozen=True)
class StepLimit:
    limit: int


Outcome = Union[Halted, Stuck, StepLimit]


@dataclass
class ConcreteRun:
    """Trace and outcome of one concrete execution"""
    trace: List[CState]
    outcome: Outcome
    final: CState
    steps: int = 0

    @property
    def store(self) -> CStore:
        return self.final.store


# ---------------------------------------------------------------------------
# Semantics
# ---------------------------------------------------------------------------


def inject(p: Program) -> CState:
    return CState(p.root, {}, CStore(), None)


def concrete_atomic_eval(ae, env: CEnv, store: CStore) -> CValue:
    """Evaluate an atomic expression"""
    if isinstance(ae, VarRef):
        if ae.name not in env or env[ae.name] not in store:
            raise UnboundVariable(ae.name)
        return store.lookup(env[ae.name])
    if isinstance(ae, Lam):
        return Clo(ae, env)
    if isinstance(ae, BoolLit):
        return Bool(ae.value)
    if isinstance(ae, NumLit):
        return Num(ae.value)
    if isinstance(ae, PrimRef):
        return Prim(ae.op)
    raise StuckState(f"non-atomic operand {ae!r}")


_ARITH = {
    "+": lambda a, b: Num(a + b),
    "-": lambda a, b: Num(a - b),
    "*": lambda a, b: Num(a * b),
    "<": lambda a, b: Bool(a < b),
    "=": lambda a, b: Bool(a == b),
}


def apply_primitive(fn: Union[Prim, PrimPartial], arg: CValue) -> CValue:
    """Apply a primitive (or partially applied primitive) to one argument"""
    if isinstance(fn, PrimPartial):
        if not isinstance(arg, Num) or not isinstance(fn.arg, Num):
            raise StuckState(f"{fn.op} expects numbers, got {show_value(arg)}")
        return _ARITH[fn.op](fn.arg.value, arg.value)
    op = fn.op
    if PRIMITIVES[op] == 2:
        if not isinstance(arg, Num):
            raise StuckState(f"{op} expects a number, got {show_value(arg)}")
        return PrimPartial(op, arg)
    if op == "not":
        if not isinstance(arg, Bool):
            raise StuckState(f"not expects a boolean, got {show_value(arg)}")
        return Bool(not arg.value)
    if not isinstance(arg, Num):
        raise StuckState(f"{op} expects a number, got {show_value(arg)}")
    if op == "add1":
        return Num(arg.value + 1)
    if op == "sub1":
        return Num(arg.value - 1)
    return Bool(arg.value == 0)


def _deliver(value: CValue, s: CState) -> Union[CState, Halted]:
    if s.kont is None:
        return Halted(value)
    frame = s.kont.frame
    store, a = s.store.extend(value, BindingSite(frame.bind, s.exp.label))
    return CState(frame.ret, {**frame.env, frame.bind: a}, store, s.kont.rest)


def _enter(fn: CValue, arg: CValue, s: CState, kont: Optional[CKont]) -> CState:
    if isinstance(fn, Clo):
        param = fn.lam.param
        store, a = s.store.extend(arg, BindingSite(param, s.exp.label))
        return CState(fn.lam.body, {**fn.env, param: a}, store, kont)
    if isinstance(fn, (Prim, PrimPartial)):
        body = native_body(fn.op, isinstance(fn, PrimPartial))
        var = body.ae.name
        store, a = s.store.extend(apply_primitive(fn, arg), BindingSite(var, s.exp.label))
        return CState(body, {var: a}, store, kont)
    raise StuckState(f"cannot apply {show_value(fn)} at {s.exp.label}")


def concrete_step(s: CState) -> Union[CState, Halted]:
    """
    One transition of the concrete machine

    Raises:
        StuckState: operator is not callable or a condition is not boolean
    """
    e = s.exp
    if isinstance(e, LetCall):
        fn = concrete_atomic_eval(e.fn, s.env, s.store)
        arg = concrete_atomic_eval(e.arg, s.env, s.store)
        return _enter(fn, arg, s, push(CFrame(e.bind, e.body, s.env), s.kont))
    if isinstance(e, Return):
        return _deliver(concrete_atomic_eval(e.ae, s.env, s.store), s)
    if isinstance(e, If):
        cond = concrete_atomic_eval(e.cond, s.env, s.store)
        if not isinstance(cond, Bool):
            raise StuckState(f"condition at {e.label} is {show_value(cond)}, not a boolean")
        return CState(e.then if cond.value else e.orelse, s.env, s.store, s.kont)
    if isinstance(e, TailCall):
        fn = concrete_atomic_eval(e.fn, s.env, s.store)
        arg = concrete_atomic_eval(e.arg, s.env, s.store)
        return _enter(fn, arg, s, s.kont)
    raise StuckState(f"unknown expression {e!r}")


def check_state(s: CState) -> None:
    """Assert the environment hygiene invariants of a state"""
    missing = s.exp.free_vars - set(s.env)
    assert not missing, f"free variables {sorted(missing)} unbound at {s.exp.label}"
    dangling = [a for a in s.env.values() if a not in s.store]
    assert not dangling, f"addresses {dangling} missing from the store at {s.exp.label}"


def concrete_run(
    p: Program,
    step_limit: Optional[int] = None,
    keep_trace: bool = True,
    check_invariants: bool = False,
) -> ConcreteRun:
    """
    Run a program from injection to completion

    Returns:
        ConcreteRun whose outcome is Halted, Stuck or StepLimit
    """
    limit = step_limit if step_limit is not None else settings.CONCRETE_STEP_LIMIT
    state = inject(p)
    trace = [state] if keep_trace else []
    steps = 0
    while True:
        if check_invariants:
            check_state(state)
        if steps >= limit:
            logger.info("concrete run hit the step limit %d", limit)
            return ConcreteRun(trace, StepLimit(limit), state, steps)
        try:
            nxt = concrete_step(state)
        except StuckState as e:
            return ConcreteRun(trace, Stuck(e.reason), state, steps)
        steps += 1
        if isinstance(nxt, Halted):
            return ConcreteRun(trace, nxt, state, steps)
        state = nxt
        if keep_trace:
            trace.append(state)


def trace_lines(run: ConcreteRun) -> List[str]:
    """Export a trace as JSON lines, one object per state"""
    lines = []
    seen = 0
    for s in run.trace:
        delta: Dict[int, str] = {}
        for a in range(seen, len(s.store)):
            delta[a] = show_value(s.store.lookup(a))
        seen = max(seen, len(s.store))
        line = TraceLine(
            label=s.exp.label,
            env=dict(sorted(s.env.items())),
            store_delta=delta,
            kont_depth=kont_depth(s.kont),
        )
        lines.append(line.model_dump_json())
    return lines
