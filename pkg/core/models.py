"""
p4f-cfa - Data Models
Policy names, reports and request/response models.
"""

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class ValuePolicy(str, Enum):
    """Value-address allocation policies"""
    MONO = "mono"
    CALL1 = "1cfa"


class KontPolicy(str, Enum):
    """Continuation-address allocation policies"""
    NAIVE = "naive"
    NAIVE_1CFA = "naive-1cfa"
    AAC = "aac"
    P4F = "p4f"


class WorklistOrder(str, Enum):
    FIFO = "fifo"
    LIFO = "lifo"


class PolicyPair(BaseModel):
    """A value policy together with a continuation policy"""

    model_config = ConfigDict(frozen=True)

    value: ValuePolicy
    kont: KontPolicy

    @property
    def key(self) -> str:
        return f"{self.value.value}/{self.kont.value}"

    @classmethod
    def all(cls) -> List["PolicyPair"]:
        return [cls(value=v, kont=k) for v in ValuePolicy for k in KontPolicy]


class Metrics(BaseModel):
    """Cost counters of one fixed-point computation"""

    configurations: int = 0
    states_visited: int = 0
    transitions: int = 0
    iterations: int = 0


class AnalysisReport(BaseModel):
    """Result of one analysis run, as written to --json"""

    program: str
    value_policy: ValuePolicy
    kont_policy: KontPolicy
    configurations: int
    states_visited: int
    transitions: int
    iterations: int
    flows: Dict[str, Dict[str, List[str]]]
    diagnostics: List[str] = Field(default_factory=list)
    wall_ms: float


class TraceLine(BaseModel):
    """One concrete machine state, exported as a JSON line"""

    label: int
    env: Dict[str, int]
    store_delta: Dict[int, str]
    kont_depth: int


class PrecisionViolation(BaseModel):
    config: str
    implied_stack: List[str]
    missing_oracle_config: str


class StoreViolation(BaseModel):
    address: str
    finite: List[str]
    oracle: List[str]


class PrecisionReport(BaseModel):
    """Comparison of a finite-state result against the unbounded-stack oracle"""

    violations: List[PrecisionViolation] = Field(default_factory=list)
    store_violations: List[StoreViolation] = Field(default_factory=list)
    checked_pairs: int = 0
    unexhausted_configs: int = 0
    oracle_complete: bool = True

    @property
    def precise(self) -> bool:
        return not self.violations and not self.store_violations


class CorpusEntry(BaseModel):
    """A benchmark program of the corpus"""

    name: str
    source: str
    # the bounded oracle completes under every value policy
    expected_oracle_completes: bool = False
    notes: str = ""


class PolicyMetrics(BaseModel):
    """Metrics of one program under one policy pair"""

    value_policy: ValuePolicy
    kont_policy: KontPolicy
    configurations: int = 0
    states_visited: int = 0
    transitions: int = 0
    wall_ms: float = 0.0
    error: Optional[str] = None


class ComparisonRow(BaseModel):
    """One program of the comparison matrix"""

    program: str
    cells: List[PolicyMetrics]
    precision_equal_aac_p4f: Dict[str, bool] = Field(default_factory=dict)
    error: Optional[str] = None

    def cell(self, value: ValuePolicy, kont: KontPolicy) -> Optional[PolicyMetrics]:
        return next((c for c in self.cells if c.value_policy == value and c.kont_policy == kont), None)


class RatioSummary(BaseModel):
    """AAC / P4F cost ratios for one value policy"""

    value_policy: ValuePolicy
    programs: int
    configurations_geomean: float
    states_geomean: float
    configurations_max: float
    states_max: float


class MatrixSummary(BaseModel):
    ratios: List[RatioSummary]


class BenchReport(BaseModel):
    """Full benchmark output"""

    rows: List[ComparisonRow]
    summary: Optional[MatrixSummary] = None
    digest: str = ""


# API Models

class AnalyzeRequest(BaseModel):
    """Input model for the analysis endpoint"""

    source: str
    name: str = "input"
    value_policy: ValuePolicy = ValuePolicy.MONO
    kont_policy: KontPolicy = KontPolicy.P4F
    check_precision: bool = False
    oracle_depth: Optional[int] = None


class AnalyzeResponse(BaseModel):
    report: AnalysisReport
    precision: Optional[PrecisionReport] = None


class MatrixRequest(BaseModel):
    """Input model for the comparison matrix endpoint"""

    programs: Optional[List[str]] = None
    value_policies: List[ValuePolicy] = Field(default_factory=lambda: list(ValuePolicy))
    kont_policies: List[KontPolicy] = Field(default_factory=lambda: list(KontPolicy))


class HealthResponse(BaseModel):
    """Health check response"""

    status: str
    corpus_programs: List[str]


class RootResponse(BaseModel):
    """Root endpoint response"""

    message: str
    status: str
    version: str
    value_policies: List[str]
    kont_policies: List[str]
    corpus_size: int
