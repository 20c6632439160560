"""
p4f-cfa - Analysis Services
Parsing, analysis, precision checking and graph export behind one facade
shared by the HTTP routes and the command line.
"""

import logging
import time
from functools import lru_cache
from typing import Optional, Tuple

from config.settings import settings
from core.exceptions import ParseError
from core.fixpoint import AnalysisResult, analyze, build_report
from core.models import (
    AnalysisReport, AnalyzeRequest, AnalyzeResponse, KontPolicy, PolicyPair, PrecisionReport, ValuePolicy,
    WorklistOrder,
)
from core.oracle import DyckGraph, OracleResult, dsg_extract, oracle_analyze, precision_check
from core.syntax import Program, parse_program, validate_anf

logger = logging.getLogger(__name__)


class AnalysisService:
    """Runs analyses and oracle comparisons for one program at a time"""

    def __init__(self, oracle_cache_size: Optional[int] = None):
        size = settings.ORACLE_CACHE_SIZE if oracle_cache_size is None else oracle_cache_size
        # oracle fixed points keyed by (source, value policy, bound); least recently used go first
        self._cached_oracle = lru_cache(maxsize=size)(self._oracle_for_source)

    def parse(self, source: str) -> Program:
        """
        Parse and validate program text

        Raises:
            ParseError: malformed or non-ANF input
            ScopeError: unbound variable
        """
        program = parse_program(source, strict=False)
        violations = validate_anf(program)
        if violations:
            raise ParseError(0, 0, "; ".join(v.message for v in violations))
        return program

    def run(
        self,
        program: Program,
        value_policy: ValuePolicy,
        kont_policy: KontPolicy,
        order: WorklistOrder = WorklistOrder.FIFO,
    ) -> Tuple[AnalysisResult, float]:
        """Analyze a program; returns the result and the elapsed milliseconds"""
        policy = PolicyPair(value=value_policy, kont=kont_policy)
        started = time.perf_counter()
        result = analyze(program, policy, order=order)
        wall_ms = (time.perf_counter() - started) * 1000
        return result, wall_ms

    def report(
        self,
        program: Program,
        name: str,
        value_policy: ValuePolicy,
        kont_policy: KontPolicy,
    ) -> Tuple[AnalysisResult, AnalysisReport]:
        result, wall_ms = self.run(program, value_policy, kont_policy)
        return result, build_report(result, name, wall_ms)

    def oracle(self, program: Program, value_policy: ValuePolicy, depth: Optional[int] = None) -> OracleResult:
        bound = settings.ORACLE_DEPTH_BOUND if depth is None else depth
        if not program.source:
            return oracle_analyze(program, value_policy, bound)
        return self._cached_oracle(program.source, value_policy, bound)

    def _oracle_for_source(self, source: str, value_policy: ValuePolicy, bound: int) -> OracleResult:
        return oracle_analyze(self.parse(source), value_policy, bound)

    def oracle_cache_info(self):
        return self._cached_oracle.cache_info()

    def check_precision(self, result: AnalysisResult, depth: Optional[int] = None) -> PrecisionReport:
        """
        Compare a finite-state result with the bounded oracle

        Raises:
            IncompleteOracle: the oracle did not finish within the depth bound
        """
        xi = self.oracle(result.program, result.policy.value, depth)
        return precision_check(result, xi, depth)

    def dyck_graph(self, program: Program, value_policy: ValuePolicy, depth: Optional[int] = None) -> DyckGraph:
        return dsg_extract(self.oracle(program, value_policy, depth))

    def analyze_request(self, request: AnalyzeRequest) -> AnalyzeResponse:
        """Handle one analysis request end to end"""
        program = self.parse(request.source)
        result, report = self.report(program, request.name, request.value_policy, request.kont_policy)
        precision = None
        if request.check_precision:
            precision = self.check_precision(result, request.oracle_depth)
        return AnalyzeResponse(report=report, precision=precision)


# Singleton instance
analysis_service = AnalysisService()
