"""Small programs shared across tests"""

from core.domains import SetMap
from core.fixpoint import AnalysisResult
from core.models import KontPolicy, PolicyPair, ValuePolicy

# Identity called from two let bindings
WORKED_SOURCE = "(let* ([id (lambda (x) x)] [y (id #t)] [z (id #f)]) z)"

# One call, one return
IDENTITY_SOURCE = "(let ([y ((lambda (x) x) #t)]) y)"

# Two branches calling id with different arguments; only the widened store
# lets #f reach p in the first branch
DIAMOND_SOURCE = """
(let* ([id (lambda (x) x)]
       [b (zero? 1)])
  (if b
      (let ([p (id #t)])
        (if p #t (let ([w (not #t)]) w)))
      (let ([q (id #f)])
        q)))
"""

# Pushes one frame per recursive call, forever
DEEP_SOURCE = "((lambda (f) (f f)) (lambda (g) (let ([r (g g)]) r)))"

# Two nested non-tail calls
NESTED_SOURCE = "(let ([a ((lambda (f) (let ([b (f #t)]) b)) (lambda (x) x))]) a)"


def pair(value: str, kont: str) -> PolicyPair:
    return PolicyPair(value=ValuePolicy(value), kont=KontPolicy(kont))


NON_AAC_PAIRS = [p for p in PolicyPair.all() if p.kont != KontPolicy.AAC]


def _keep(rnd, items, keep):
    return [x for x in sorted(items, key=lambda v: v.sort_key()) if rnd.random() < keep]


def shrink_map(rnd, m: SetMap, keep: float = 0.7) -> SetMap:
    """A random map below `m`: each value of each key survives with probability `keep`"""
    return type(m)({k: _keep(rnd, vs, keep) for k, vs in m.items()})


def shrink_result(rnd, xi: AnalysisResult, keep: float = 0.7) -> AnalysisResult:
    """A random analysis result below `xi`, componentwise"""
    return AnalysisResult(
        frozenset(_keep(rnd, xi.reachable, keep)),
        shrink_map(rnd, xi.store, keep),
        shrink_map(rnd, xi.kstore, keep),
        frozenset(_keep(rnd, xi.halt_flows, keep)),
        program=xi.program,
        policy=xi.policy,
        interner=xi.interner,
    )
