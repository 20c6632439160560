"""
p4f-cfa - ANF Syntax
Reader, alpha-renaming parser, validator and printer for the input language.

    prog ::= exp
    exp  ::= ae | (let ([x call]) exp) | (let* ([x call] ...) exp)
           | (if ae exp exp) | call
    call ::= (ae ae)
    ae   ::= x | #t | #f | n | (lambda (x) exp) | prim-name
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Tuple, Union

from core.exceptions import ParseError, ScopeError

Var = str

# Arity of every primitive; binary primitives are curried
PRIMITIVES: Dict[str, int] = {
    "not": 1,
    "add1": 1,
    "sub1": 1,
    "zero?": 1,
    "+": 2,
    "-": 2,
    "*": 2,
    "<": 2,
    "=": 2,
}

KEYWORDS = frozenset({"let", "let*", "if", "lambda"})


# ---------------------------------------------------------------------------
# Abstract syntax
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class VarRef:
    name: Var


@dataclass(frozen=True, slots=True)
class BoolLit:
    value: bool


@dataclass(frozen=True, slots=True)
class NumLit:
    value: int


@dataclass(frozen=True, slots=True)
class PrimRef:
    op: str


@dataclass(frozen=True, eq=False)
class Lam:
    """Lambda abstraction; identified by its (uniquely labeled) body"""

    param: Var
    body: "Exp"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Lam) and other.body.label == self.body.label

    def __hash__(self) -> int:
        return hash(("lam", self.body.label))

    @cached_property
    def free_vars(self) -> FrozenSet[Var]:
        return self.body.free_vars - {self.param}


AtomicExp = Union[VarRef, Lam, BoolLit, NumLit, PrimRef]
ATOMIC_TYPES = (VarRef, Lam, BoolLit, NumLit, PrimRef)


class Exp:
    """Base of every labeled expression node; equality is label identity"""

    label: int

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Exp) and type(other) is type(self) and other.label == self.label

    def __hash__(self) -> int:
        return hash(self.label)

    def __lt__(self, other: "Exp") -> bool:
        return self.label < other.label


@dataclass(frozen=True, eq=False)
class LetCall(Exp):
    label: int
    bind: Var
    fn: AtomicExp
    arg: AtomicExp
    body: Exp

    @cached_property
    def free_vars(self) -> FrozenSet[Var]:
        return atomic_free_vars(self.fn) | atomic_free_vars(self.arg) | (self.body.free_vars - {self.bind})

    @cached_property
    def frame_live(self) -> FrozenSet[Var]:
        """Variables the return point needs besides the bound result"""
        return self.body.free_vars - {self.bind}


@dataclass(frozen=True, eq=False)
class Return(Exp):
    label: int
    ae: AtomicExp

    @cached_property
    def free_vars(self) -> FrozenSet[Var]:
        return atomic_free_vars(self.ae)


@dataclass(frozen=True, eq=False)
class If(Exp):
    label: int
    cond: AtomicExp
    then: Exp
    orelse: Exp

    @cached_property
    def free_vars(self) -> FrozenSet[Var]:
        return atomic_free_vars(self.cond) | self.then.free_vars | self.orelse.free_vars


@dataclass(frozen=True, eq=False)
class TailCall(Exp):
    label: int
    fn: AtomicExp
    arg: AtomicExp

    @cached_property
    def free_vars(self) -> FrozenSet[Var]:
        return atomic_free_vars(self.fn) | atomic_free_vars(self.arg)


@dataclass(frozen=True, eq=False)
class Program:
    """A parsed, alpha-renamed and labeled program"""

    root: Exp
    binder_table: Mapping[Var, int]
    label_table: Mapping[int, Exp]
    source: str = ""

    def exp(self, label: int) -> Exp:
        if label in _NATIVE_BY_LABEL:
            return _NATIVE_BY_LABEL[label]
        return self.label_table[label]

    @property
    def size(self) -> int:
        return len(self.label_table)

    def lambdas(self) -> List[Lam]:
        """Every lambda of the program, in label order of its body"""
        found = [ae for e in self.label_table.values() for ae in _operands(e) if isinstance(ae, Lam)]
        return sorted(found, key=lambda lam: lam.body.label)


# ---------------------------------------------------------------------------
# Native bodies
# ---------------------------------------------------------------------------


def _native_bodies() -> Dict[Tuple[str, bool], Return]:
    bodies: Dict[Tuple[str, bool], Return] = {}
    labels = itertools.count(-2, -1)
    for op, arity in PRIMITIVES.items():
        for partial in (False, True) if arity == 2 else (False,):
            var = f"({op} _)" if partial else f"({op})"
            bodies[op, partial] = Return(next(labels), VarRef(var))
    return bodies


# A primitive call enters one of these like a closure body: the call binds the
# computed result to the body's variable and the body returns it. Negative
# labels never collide with program labels, and the reader cannot produce
# the parenthesized variable names.
NATIVE_BODIES: Dict[Tuple[str, bool], Return] = _native_bodies()
_NATIVE_BY_LABEL: Dict[int, Return] = {body.label: body for body in NATIVE_BODIES.values()}


def native_body(op: str, partial: bool = False) -> Return:
    """Body entered by applying `op` (or its partial application when `partial`)"""
    return NATIVE_BODIES[op, partial]


def is_native(e: Exp) -> bool:
    return e.label in _NATIVE_BY_LABEL


def atomic_free_vars(ae) -> FrozenSet[Var]:
    if isinstance(ae, VarRef):
        return frozenset({ae.name})
    if isinstance(ae, Lam):
        return ae.free_vars
    if isinstance(ae, Exp):
        # only present in non-strict parses
        return ae.free_vars
    return frozenset()


def free_vars(e: Union[Exp, AtomicExp]) -> FrozenSet[Var]:
    """Free variables of an expression or atomic expression"""
    if isinstance(e, Exp):
        return e.free_vars
    return atomic_free_vars(e)


def _operands(e: Exp) -> List[object]:
    if isinstance(e, (LetCall, TailCall)):
        return [e.fn, e.arg]
    if isinstance(e, If):
        return [e.cond]
    if isinstance(e, Return):
        return [e.ae]
    return []


def children(e: Exp) -> Iterator[Exp]:
    """Direct sub-expressions in preorder, including lambda bodies"""
    for ae in _operands(e):
        if isinstance(ae, Lam):
            yield ae.body
        elif isinstance(ae, Exp):
            yield ae
    if isinstance(e, LetCall):
        yield e.body
    elif isinstance(e, If):
        yield e.then
        yield e.orelse


def walk(e: Exp) -> Iterator[Exp]:
    """Preorder traversal of every labeled node below (and including) e"""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(list(children(node))))


# ---------------------------------------------------------------------------
# Reader
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"(?P<ws>\s+)|(?P<comment>;[^\n]*)|(?P<open>[(\[])|(?P<close>[)\]])|(?P<atom>[^\s()\[\];]+)")
_INT_RE = re.compile(r"^[+-]?\d+$")
_CLOSERS = {"(": ")", "[": "]"}


@dataclass
class _SNode:
    line: int
    col: int
    atom: Optional[str] = None
    items: List["_SNode"] = field(default_factory=list)

    @property
    def is_list(self) -> bool:
        return self.atom is None

    @property
    def head(self) -> Optional[str]:
        if self.is_list and self.items and not self.items[0].is_list:
            return self.items[0].atom
        return None


def read_sexprs(source: str) -> List[_SNode]:
    """Read every top-level s-expression in source"""
    top: List[_SNode] = []
    stack: List[tuple] = []
    line, col = 1, 1
    pos = 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            raise ParseError(line, col, f"unexpected character {source[pos]!r}")
        text = match.group()
        kind = match.lastgroup
        if kind == "open":
            stack.append((_SNode(line, col), text))
        elif kind == "close":
            if not stack:
                raise ParseError(line, col, f"unbalanced '{text}'")
            node, opener = stack.pop()
            if _CLOSERS[opener] != text:
                raise ParseError(line, col, f"'{opener}' closed by '{text}'")
            (stack[-1][0].items if stack else top).append(node)
        elif kind == "atom":
            node = _SNode(line, col, atom=text)
            (stack[-1][0].items if stack else top).append(node)
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = match.end()
    if stack:
        node, opener = stack[-1]
        raise ParseError(node.line, node.col, f"unclosed '{opener}'")
    return top


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Builder:
    """Turns s-expressions into labeled Exp trees, renaming binders apart"""

    def __init__(self, strict: bool, taken: set):
        self.strict = strict
        self.labels = itertools.count()
        self.binder_table: Dict[Var, int] = {}
        self.label_table: Dict[int, Exp] = {}
        self.taken = taken

    def _register(self, e: Exp) -> Exp:
        self.label_table[e.label] = e
        return e

    def _fresh(self, name: str) -> Var:
        if name not in self.binder_table:
            return name
        for n in itertools.count(1):
            candidate = f"{name}.{n}"
            if candidate not in self.binder_table and candidate not in self.taken:
                return candidate

    def _binder(self, node: _SNode) -> str:
        if node.is_list or node.atom in KEYWORDS or node.atom in ("#t", "#f") or _INT_RE.match(node.atom):
            raise ParseError(node.line, node.col, "expected a variable name")
        return node.atom

    def exp(self, node: _SNode, scope: Dict[str, Var]) -> Exp:
        if not node.is_list:
            label = next(self.labels)
            return self._register(Return(label, self.atomic(node, scope)))
        if not node.items:
            raise ParseError(node.line, node.col, "empty application")
        head = node.head
        if head in ("let", "let*"):
            return self._let(node, scope, sequential=head == "let*")
        if head == "if":
            if len(node.items) != 4:
                raise ParseError(node.line, node.col, "if takes a condition and two branches")
            label = next(self.labels)
            cond = self.atomic(node.items[1], scope)
            then = self.exp(node.items[2], scope)
            orelse = self.exp(node.items[3], scope)
            return self._register(If(label, cond, then, orelse))
        if head == "lambda":
            label = next(self.labels)
            return self._register(Return(label, self.atomic(node, scope)))
        if len(node.items) != 2:
            raise ParseError(node.line, node.col, "calls are binary: an operator and exactly one argument")
        label = next(self.labels)
        fn = self.atomic(node.items[0], scope)
        arg = self.atomic(node.items[1], scope)
        return self._register(TailCall(label, fn, arg))

    def _let(self, node: _SNode, scope: Dict[str, Var], sequential: bool) -> Exp:
        if len(node.items) != 3 or not node.items[1].is_list:
            raise ParseError(node.line, node.col, f"malformed {node.head}")
        bindings = node.items[1].items
        if not bindings:
            raise ParseError(node.line, node.col, f"{node.head} needs at least one binding")
        for binding in bindings:
            if not binding.is_list or len(binding.items) != 2:
                raise ParseError(binding.line, binding.col, "a binding is [name expression]")
        return self._bind(bindings, 0, node.items[2], dict(scope), dict(scope), sequential)

    def _bind(self, bindings, i, body_node, rhs_scope, body_scope, sequential) -> Exp:
        if i == len(bindings):
            return self.exp(body_node, body_scope)
        name_node, rhs = bindings[i].items
        name = self._binder(name_node)
        bound = self._fresh(name)
        inner_scope = dict(body_scope)
        inner_scope[name] = bound
        next_rhs_scope = inner_scope if sequential else rhs_scope
        label = next(self.labels)

        if rhs.is_list and rhs.head != "lambda":
            if rhs.head in KEYWORDS:
                raise ParseError(rhs.line, rhs.col, "a let right-hand side must be a call or an atomic expression")
            if len(rhs.items) != 2:
                raise ParseError(rhs.line, rhs.col, "calls are binary: an operator and exactly one argument")
            fn = self.atomic(rhs.items[0], rhs_scope)
            arg = self.atomic(rhs.items[1], rhs_scope)
            self.binder_table[bound] = label
            body = self._bind(bindings, i + 1, body_node, next_rhs_scope, inner_scope, sequential)
            return self._register(LetCall(label, bound, fn, arg, body))

        # (let ([x ae]) body) is ((lambda (x) body) ae)
        self.binder_table[bound] = -1
        body = self._bind(bindings, i + 1, body_node, next_rhs_scope, inner_scope, sequential)
        self.binder_table[bound] = body.label
        arg = self.atomic(rhs, rhs_scope)
        return self._register(TailCall(label, Lam(bound, body), arg))

    def atomic(self, node: _SNode, scope: Dict[str, Var]):
        if not node.is_list:
            text = node.atom
            if text == "#t":
                return BoolLit(True)
            if text == "#f":
                return BoolLit(False)
            if _INT_RE.match(text):
                return NumLit(int(text))
            if text in scope:
                return VarRef(scope[text])
            if text in PRIMITIVES:
                return PrimRef(text)
            if text in KEYWORDS:
                raise ParseError(node.line, node.col, f"keyword '{text}' used as a value")
            raise ScopeError(text, node.line, node.col)
        if node.head == "lambda":
            if len(node.items) != 3 or not node.items[1].is_list or len(node.items[1].items) != 1:
                raise ParseError(node.line, node.col, "a lambda takes exactly one parameter and one body")
            name = self._binder(node.items[1].items[0])
            bound = self._fresh(name)
            inner = dict(scope)
            inner[name] = bound
            # reserve the name before the body is built so nested binders rename apart
            self.binder_table[bound] = -1
            body = self.exp(node.items[2], inner)
            self.binder_table[bound] = body.label
            return Lam(bound, body)
        if self.strict:
            raise ParseError(node.line, node.col, "operand must be an atomic expression")
        return self.exp(node, scope)


def _collect_names(nodes: List[_SNode]) -> set:
    names = set()
    stack = list(nodes)
    while stack:
        node = stack.pop()
        if node.is_list:
            stack.extend(node.items)
        else:
            names.add(node.atom)
    return names


def parse_program(source: str, strict: bool = True) -> Program:
    """
    Parse program text into a labeled Program

    Args:
        source: s-expression text holding exactly one expression
        strict: reject non-atomic operands instead of keeping them for validate_anf

    Returns:
        Program with binders renamed apart and labels assigned in preorder

    Raises:
        ParseError: malformed input
        ScopeError: reference to an unbound variable
    """
    nodes = read_sexprs(source)
    if len(nodes) != 1:
        if not nodes:
            raise ParseError(1, 1, "empty program")
        extra = nodes[1]
        raise ParseError(extra.line, extra.col, "a program is a single expression")
    builder = _Builder(strict, _collect_names(nodes))
    root = builder.exp(nodes[0], {})
    return Program(
        root=root,
        binder_table=dict(builder.binder_table),
        label_table=dict(sorted(builder.label_table.items())),
        source=source,
    )


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnfViolation:
    label: int
    position: str
    message: str


def validate_anf(p: Program) -> List[AnfViolation]:
    """Every violation of administrative normal form, in label order"""
    violations: List[AnfViolation] = []

    def check(label: int, position: str, ae) -> None:
        if not isinstance(ae, ATOMIC_TYPES):
            violations.append(AnfViolation(label, position, f"{position} of node {label} is not atomic"))

    for e in walk(p.root):
        if isinstance(e, (LetCall, TailCall)):
            check(e.label, "operator", e.fn)
            check(e.label, "operand", e.arg)
        elif isinstance(e, If):
            check(e.label, "condition", e.cond)
        elif isinstance(e, Return):
            check(e.label, "returned value", e.ae)
        else:
            violations.append(AnfViolation(getattr(e, "label", -1), "expression", f"unknown node {e!r}"))
    return sorted(violations, key=lambda v: v.label)


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------


def unparse(node) -> str:
    """Concrete syntax for an Exp or atomic expression"""
    if isinstance(node, VarRef):
        return node.name
    if isinstance(node, BoolLit):
        return "#t" if node.value else "#f"
    if isinstance(node, NumLit):
        return str(node.value)
    if isinstance(node, PrimRef):
        return node.op
    if isinstance(node, Lam):
        return f"(lambda ({node.param}) {unparse(node.body)})"
    if isinstance(node, LetCall):
        return f"(let ([{node.bind} ({unparse(node.fn)} {unparse(node.arg)})]) {unparse(node.body)})"
    if isinstance(node, Return):
        return unparse(node.ae)
    if isinstance(node, If):
        return f"(if {unparse(node.cond)} {unparse(node.then)} {unparse(node.orelse)})"
    if isinstance(node, TailCall):
        return f"({unparse(node.fn)} {unparse(node.arg)})"
    raise TypeError(f"not a syntax node: {node!r}")
