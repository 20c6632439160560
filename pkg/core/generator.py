"""
p4f-cfa - Program Generator
Seeded random ANF programs for soundness testing and synthetic scaling
families for the benchmark runner.
"""

import logging
import random
from typing import List, Optional

from config.settings import settings
from core.concrete import StepLimit, concrete_run
from core.syntax import PRIMITIVES, Program, parse_program

logger = logging.getLogger(__name__)

_PRIMS = sorted(PRIMITIVES)


class _Gen:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.counter = 0

    def fresh(self, prefix: str) -> str:
        self.counter += 1
        return f"{prefix}{self.counter}"

    def atomic(self, depth: int, scope: List[str], callable_bias: bool = False) -> str:
        rng = self.rng
        roll = rng.random()
        if scope and roll < (0.6 if callable_bias else 0.45):
            return rng.choice(scope)
        if depth > 0 and roll < (0.95 if callable_bias else 0.7):
            x = self.fresh("x")
            return f"(lambda ({x}) {self.exp(depth - 1, scope + [x])})"
        if roll < 0.8:
            return rng.choice(["#t", "#f"])
        if roll < 0.9:
            return str(rng.randint(0, 3))
        return rng.choice(_PRIMS)

    def exp(self, depth: int, scope: List[str]) -> str:
        rng = self.rng
        if depth <= 0:
            return self.atomic(0, scope)
        kind = rng.choices(["let", "if", "call", "return"], weights=[5, 2, 2, 1])[0]
        if kind == "let":
            y = self.fresh("y")
            fn = self.atomic(depth - 1, scope, callable_bias=True)
            arg = self.atomic(depth - 1, scope)
            body = self.exp(depth - 1, scope + [y])
            return f"(let ([{y} ({fn} {arg})]) {body})"
        if kind == "if":
            cond = self.atomic(0, scope)
            return f"(if {cond} {self.exp(depth - 1, scope)} {self.exp(depth - 1, scope)})"
        if kind == "call":
            return f"({self.atomic(depth - 1, scope, callable_bias=True)} {self.atomic(depth - 1, scope)})"
        return self.atomic(depth, scope)


def generate_program(rng: random.Random, depth: int = 3) -> str:
    """Source text of a random well-scoped ANF program"""
    return _Gen(rng).exp(depth, [])


def generate_terminating(
    count: int,
    seed: Optional[int] = None,
    depth: int = 3,
    step_limit: int = 10_000,
    max_attempts: Optional[int] = None,
) -> List[Program]:
    """
    `count` generated programs whose concrete run halts or gets stuck

    Programs still running after `step_limit` steps are discarded.
    """
    rng = random.Random(settings.RANDOM_SEED if seed is None else seed)
    max_attempts = max_attempts or count * 50
    programs: List[Program] = []
    attempts = 0
    while len(programs) < count and attempts < max_attempts:
        attempts += 1
        p = parse_program(generate_program(rng, depth))
        run = concrete_run(p, step_limit=step_limit, keep_trace=False)
        if isinstance(run.outcome, StepLimit):
            continue
        programs.append(p)
    logger.info("generated %d programs in %d attempts", len(programs), attempts)
    return programs


def nested_calls(n: int) -> str:
    """
    A chain of n functions, each calling the previous one from a non-tail
    position, applied to two different arguments
    """
    bindings = ["[f0 (lambda (x0) x0)]"]
    for i in range(1, n + 1):
        bindings.append(f"[f{i} (lambda (x{i}) (let ([r{i} (f{i - 1} x{i})]) r{i}))]")
    bindings.append(f"[a (f{n} #t)]")
    bindings.append(f"[b (f{n} #f)]")
    return "(let* (" + "\n       ".join(bindings) + ")\n  b)"
