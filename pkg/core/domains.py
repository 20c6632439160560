"""
p4f-cfa - Abstract Domains
Addresses, environments, values, continuations and the two store lattices
shared by the finite-state machine and the unbounded-stack oracle.

Every domain object exposes `sort_key()`; all iteration over sets and maps
goes through it so successor order and metrics are reproducible.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Dict, FrozenSet, Generic, Iterable, Iterator, Mapping, Optional, Tuple, TypeVar, Union

from core.syntax import BoolLit, Exp, Lam, NumLit, PrimRef, VarRef

# ---------------------------------------------------------------------------
# Value addresses
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class MonoVar:
    var: str

    def sort_key(self) -> tuple:
        return (0, self.var, -1)

    def __str__(self) -> str:
        return self.var


@dataclass(frozen=True, slots=True)
class CallVar:
    var: str
    site: int

    def sort_key(self) -> tuple:
        return (1, self.var, self.site)

    def __str__(self) -> str:
        return f"({self.var},{self.site})"


AbsAddr = Union[MonoVar, CallVar]


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=True)
class AbsEnv:
    """Finite map Var -> AbsAddr kept as a name-sorted tuple"""

    bindings: Tuple[Tuple[str, AbsAddr], ...] = ()

    def __hash__(self) -> int:
        return self._hash

    @cached_property
    def _hash(self) -> int:
        return hash(self.bindings)

    @cached_property
    def _map(self) -> Dict[str, AbsAddr]:
        return dict(self.bindings)

    @classmethod
    def of(cls, mapping: Mapping[str, AbsAddr]) -> "AbsEnv":
        return cls(tuple(sorted(mapping.items())))

    def lookup(self, x: str) -> Optional[AbsAddr]:
        return self._map.get(x)

    @cached_property
    def _names(self) -> Tuple[str, ...]:
        return tuple(x for x, _ in self.bindings)

    def extend(self, x: str, a: AbsAddr) -> "AbsEnv":
        i = bisect_left(self._names, x)
        b = self.bindings
        if i < len(b) and b[i][0] == x:
            return AbsEnv(b[:i] + ((x, a),) + b[i + 1:])
        return AbsEnv(b[:i] + ((x, a),) + b[i:])

    def restrict(self, names: Iterable[str]) -> "AbsEnv":
        keep = names if isinstance(names, (set, frozenset)) else set(names)
        if all(x in keep for x, _ in self.bindings):
            return self
        return AbsEnv(tuple((x, a) for x, a in self.bindings if x in keep))

    def domain(self) -> FrozenSet[str]:
        return frozenset(self._map)

    def items(self) -> Iterator[Tuple[str, AbsAddr]]:
        return iter(self.bindings)

    def __len__(self) -> int:
        return len(self.bindings)

    @cached_property
    def _sort_key(self) -> tuple:
        return tuple((x, a.sort_key()) for x, a in self.bindings)

    def sort_key(self) -> tuple:
        return self._sort_key

    def __str__(self) -> str:
        return "{" + ", ".join(f"{x}->{a}" for x, a in self.bindings) + "}"


EMPTY_ENV = AbsEnv()


@lru_cache(maxsize=1 << 16)
def rebind(env: AbsEnv, x: str, a: AbsAddr, live: FrozenSet[str]) -> AbsEnv:
    """`env` extended with x -> a, restricted to `live`"""
    return env.extend(x, a).restrict(live)


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbsClo:
    lam: Lam
    env: AbsEnv

    def __hash__(self) -> int:
        return self._hash

    @cached_property
    def _hash(self) -> int:
        return hash((self.lam.body.label, self.env))

    def sort_key(self) -> tuple:
        return (0, self.lam.body.label, self.env.sort_key())

    def __str__(self) -> str:
        return f"<closure ({self.lam.param}) @{self.lam.body.label} {self.env}>"


@dataclass(frozen=True)
class AbsBool:
    value: bool

    def sort_key(self) -> tuple:
        return (1, self.value)

    def __str__(self) -> str:
        return "#t" if self.value else "#f"


@dataclass(frozen=True)
class AbsNum:
    """The single abstract number"""

    def sort_key(self) -> tuple:
        return (2,)

    def __str__(self) -> str:
        return "num"


@dataclass(frozen=True)
class AbsPrim:
    op: str

    def sort_key(self) -> tuple:
        return (3, self.op)

    def __str__(self) -> str:
        return self.op


@dataclass(frozen=True)
class AbsPrimPartial:
    op: str
    arg: "AbsValue"

    def sort_key(self) -> tuple:
        return (4, self.op, self.arg.sort_key())

    def __str__(self) -> str:
        return f"({self.op} {self.arg})"


AbsValue = Union[AbsClo, AbsBool, AbsNum, AbsPrim, AbsPrimPartial]
FlowSet = FrozenSet[AbsValue]

ABS_NUM = AbsNum()
ABS_TRUE = AbsBool(True)
ABS_FALSE = AbsBool(False)
BOTH_BOOLS: FlowSet = frozenset({ABS_TRUE, ABS_FALSE})
EMPTY_FLOWS: FlowSet = frozenset()


def sorted_values(flows: Iterable[AbsValue]) -> list:
    return sorted(flows, key=lambda v: v.sort_key())


def show_flows(flows: Iterable[AbsValue]) -> list:
    return [str(v) for v in sorted_values(flows)]


# ---------------------------------------------------------------------------
# Continuation addresses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Halt:
    """The halt address; no allocator ever returns it"""

    def sort_key(self) -> tuple:
        return (0,)

    def __str__(self) -> str:
        return "halt"


@dataclass(frozen=True)
class TargetExp:
    e: int

    def sort_key(self) -> tuple:
        return (1, self.e)

    def __str__(self) -> str:
        return f"k{self.e}"


@dataclass(frozen=True)
class TargetExpCall:
    e: int
    source: int

    def sort_key(self) -> tuple:
        return (2, self.e, self.source)

    def __str__(self) -> str:
        return f"k({self.e},{self.source})"


@dataclass(frozen=True)
class P4F:
    e: int
    env: AbsEnv

    def __hash__(self) -> int:
        return self._hash

    @cached_property
    def _hash(self) -> int:
        return hash((self.e, self.env))

    def sort_key(self) -> tuple:
        return (3, self.e, self.env.sort_key())

    def __str__(self) -> str:
        return f"k({self.e},{self.env})"


@dataclass(frozen=True)
class AAC:
    e: int
    env: AbsEnv
    source: int
    source_env: AbsEnv
    store_id: int

    def __hash__(self) -> int:
        return self._hash

    @cached_property
    def _hash(self) -> int:
        return hash((self.e, self.env, self.source, self.source_env, self.store_id))

    def sort_key(self) -> tuple:
        return (4, self.e, self.env.sort_key(), self.source, self.source_env.sort_key(), self.store_id)

    def __str__(self) -> str:
        return f"k({self.e},{self.env},{self.source},{self.source_env},s{self.store_id})"


KontAddr = Union[Halt, TargetExp, TargetExpCall, P4F, AAC]
HALT = Halt()


# ---------------------------------------------------------------------------
# Frames and continuations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbsFrame:
    """Return point: bind the returned value to `bind` and continue at `ret`"""

    bind: str
    ret: Exp
    env: AbsEnv

    def __hash__(self) -> int:
        return self._hash

    @cached_property
    def _hash(self) -> int:
        return hash((self.bind, self.ret.label, self.env))

    @cached_property
    def _sort_key(self) -> tuple:
        return (self.ret.label, self.bind, self.env.sort_key())

    def sort_key(self) -> tuple:
        return self._sort_key

    def __str__(self) -> str:
        return f"({self.bind},{self.ret.label},{self.env})"


@dataclass(frozen=True)
class AbsKont:
    frame: AbsFrame
    tail: KontAddr

    def __hash__(self) -> int:
        return self._hash

    @cached_property
    def _hash(self) -> int:
        return hash((self.frame, self.tail))

    @cached_property
    def _sort_key(self) -> tuple:
        return (self.frame.sort_key(), self.tail.sort_key())

    def sort_key(self) -> tuple:
        return self._sort_key

    def __str__(self) -> str:
        return f"({self.frame},{self.tail})"


# ---------------------------------------------------------------------------
# Stores
# ---------------------------------------------------------------------------

K = TypeVar("K")
V = TypeVar("V")


def _sort_key(v) -> tuple:
    return v.sort_key()


class SetMap(Generic[K, V]):
    """
    Immutable finite map from keys to non-empty frozensets, ordered pointwise.

    Absent keys denote the empty set; no key is ever stored with an empty set.
    """

    __slots__ = ("_entries", "_hash", "_sorted")

    def __init__(self, entries: Mapping[K, Iterable[V]] = None):
        self._entries: Dict[K, FrozenSet[V]] = {}
        self._hash = None
        self._sorted: Dict[K, tuple] = {}
        if entries:
            for k, vs in entries.items():
                vs = frozenset(vs)
                if vs:
                    self._entries[k] = vs

    @classmethod
    def _wrap(cls, entries: Dict[K, FrozenSet[V]]):
        obj = cls.__new__(cls)
        obj._entries = entries
        obj._hash = None
        obj._sorted = {}
        return obj

    def lookup(self, key: K) -> FrozenSet[V]:
        return self._entries.get(key, frozenset())

    def __getitem__(self, key: K) -> FrozenSet[V]:
        return self.lookup(key)

    def sorted_lookup(self, key: K) -> tuple:
        """Values of one key in canonical order"""
        cached = self._sorted.get(key)
        if cached is None:
            cached = self._sorted[key] = tuple(sorted(self.lookup(key), key=_sort_key))
        return cached

    def freeze(self) -> "SetMap[K, V]":
        return self

    def __contains__(self, key: K) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def keys(self) -> list:
        return sorted(self._entries, key=lambda k: k.sort_key())

    def items(self) -> list:
        return [(k, self._entries[k]) for k in self.keys()]

    def join(self, other: "SetMap[K, V]") -> "SetMap[K, V]":
        """Pointwise union; the least upper bound of the two maps"""
        if not other._entries:
            return self
        if not self._entries:
            return other
        merged = dict(self._entries)
        for k, vs in other._entries.items():
            cur = merged.get(k)
            merged[k] = vs if cur is None else cur | vs
        return type(self)._wrap(merged)

    def join_at(self, key: K, values: Iterable[V]) -> "SetMap[K, V]":
        """Join values into one key; returns self when nothing changes"""
        values = frozenset(values)
        cur = self._entries.get(key, frozenset())
        if values <= cur:
            return self
        merged = dict(self._entries)
        merged[key] = cur | values
        return type(self)._wrap(merged)

    def leq(self, other: "SetMap[K, V]") -> bool:
        return all(vs <= other._entries.get(k, frozenset()) for k, vs in self._entries.items())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SetMap) and type(other) is type(self) and other._entries == self._entries

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._entries.items()))
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {{{', '.join(str(v) for v in sorted(vs, key=lambda v: v.sort_key()))}}}"
                         for k, vs in self.items())
        return f"{type(self).__name__}({body})"


class Store(SetMap[AbsAddr, AbsValue]):
    """Value store: AbsAddr -> FlowSet"""


class KStore(SetMap[KontAddr, AbsKont]):
    """Continuation store: KontAddr -> KontSet"""


class GrowingMap(Generic[K, V]):
    """
    Mutable working copy of a SetMap for fixed-point drivers.

    Joins happen in place and report whether anything grew. freeze() gives
    an immutable snapshot of the requested SetMap type, reused until the
    next growth.
    """

    __slots__ = ("_kind", "_entries", "_sorted", "_snapshot")

    def __init__(self, start: SetMap[K, V]):
        self._kind = type(start)
        self._entries: Dict[K, FrozenSet[V]] = dict(start._entries)
        self._sorted: Dict[K, tuple] = {}
        self._snapshot: Optional[SetMap[K, V]] = start

    def lookup(self, key: K) -> FrozenSet[V]:
        return self._entries.get(key, frozenset())

    def __getitem__(self, key: K) -> FrozenSet[V]:
        return self.lookup(key)

    def __contains__(self, key: K) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def sorted_lookup(self, key: K) -> tuple:
        cached = self._sorted.get(key)
        if cached is None:
            cached = self._sorted[key] = tuple(sorted(self.lookup(key), key=_sort_key))
        return cached

    def join_at(self, key: K, values: Iterable[V]) -> bool:
        cur = self._entries.get(key)
        if cur is None:
            grown = frozenset(values)
            if not grown:
                return False
        elif cur.issuperset(values):
            return False
        else:
            grown = cur.union(values)
        self._entries[key] = grown
        self._sorted.pop(key, None)
        self._snapshot = None
        return True

    def freeze(self) -> SetMap[K, V]:
        if self._snapshot is None:
            self._snapshot = self._kind._wrap(dict(self._entries))
        return self._snapshot


def store_join(a: Store, b: Store) -> Store:
    return a.join(b)


def kstore_join(a: KStore, b: KStore) -> KStore:
    return a.join(b)


EMPTY_STORE = Store()
EMPTY_KSTORE = KStore()


# ---------------------------------------------------------------------------
# States and configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbstractState:
    exp: Exp
    env: AbsEnv
    store: Store
    kstore: KStore
    ka: KontAddr

    @property
    def configuration(self) -> "Configuration":
        return Configuration(self.exp, self.env, self.ka)


@dataclass(frozen=True)
class Configuration:
    exp: Exp
    env: AbsEnv
    ka: KontAddr

    def __hash__(self) -> int:
        return self._hash

    @cached_property
    def _hash(self) -> int:
        return hash((self.exp.label, self.env, self.ka))

    def sort_key(self) -> tuple:
        return (self.exp.label, self.env.sort_key(), self.ka.sort_key())

    def __str__(self) -> str:
        return f"({self.exp.label}, {self.env}, {self.ka})"


# ---------------------------------------------------------------------------
# Atomic evaluation
# ---------------------------------------------------------------------------


def abs_atomic_eval(ae, env: AbsEnv, store: Store) -> FlowSet:
    """Flow set of an atomic expression; dead lookups give the empty set"""
    if isinstance(ae, VarRef):
        a = env.lookup(ae.name)
        return store.lookup(a) if a is not None else EMPTY_FLOWS
    if isinstance(ae, Lam):
        return frozenset({AbsClo(ae, env.restrict(ae.free_vars))})
    if isinstance(ae, BoolLit):
        return frozenset({AbsBool(ae.value)})
    if isinstance(ae, NumLit):
        return frozenset({ABS_NUM})
    if isinstance(ae, PrimRef):
        return frozenset({AbsPrim(ae.op)})
    return EMPTY_FLOWS


def atomic_reads(ae, env: AbsEnv) -> Optional[AbsAddr]:
    """The store address an atomic evaluation reads, if any"""
    if isinstance(ae, VarRef):
        return env.lookup(ae.name)
    return None
