"""
p4f-cfa - Benchmark Service
Comparison matrix over the corpus, AAC/P4F ratio summaries and the CSV,
JSON, gnuplot and chart outputs.
"""

import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd
import plotly.graph_objects as go

from config.settings import settings
from core.exceptions import AnalysisError
from core.fixpoint import analyze, variable_flows
from core.domains import show_flows
from core.models import (
    BenchReport, ComparisonRow, CorpusEntry, KontPolicy, MatrixSummary, PolicyMetrics, PolicyPair, RatioSummary,
    ValuePolicy,
)
from core.syntax import parse_program

logger = logging.getLogger(__name__)


def run_entry(entry: CorpusEntry, pairs: List[PolicyPair]) -> ComparisonRow:
    """
    One matrix row: every policy pair on one program

    Failures are recorded in the row (parse errors) or in the cell (ceilings),
    never raised.
    """
    try:
        program = parse_program(entry.source)
    except AnalysisError as e:
        logger.warning("%s: %s", entry.name, e)
        return ComparisonRow(program=entry.name, cells=[], error=str(e))

    cells: List[PolicyMetrics] = []
    flows: Dict[str, Dict[str, List[str]]] = {}
    for pair in pairs:
        started = time.perf_counter()
        try:
            result = analyze(program, pair)
        except AnalysisError as e:
            logger.warning("%s under %s: %s", entry.name, pair.key, e)
            cells.append(PolicyMetrics(value_policy=pair.value, kont_policy=pair.kont, error=str(e)))
            continue
        wall_ms = (time.perf_counter() - started) * 1000
        cells.append(PolicyMetrics(
            value_policy=pair.value,
            kont_policy=pair.kont,
            configurations=result.metrics.configurations,
            states_visited=result.metrics.states_visited,
            transitions=result.metrics.transitions,
            wall_ms=round(wall_ms, 3),
        ))
        flows[pair.key] = {x: show_flows(vs) for x, vs in variable_flows(result).items()}

    equal: Dict[str, bool] = {}
    for value in ValuePolicy:
        aac = flows.get(PolicyPair(value=value, kont=KontPolicy.AAC).key)
        p4f = flows.get(PolicyPair(value=value, kont=KontPolicy.P4F).key)
        if aac is not None and p4f is not None:
            equal[value.value] = aac == p4f
    return ComparisonRow(program=entry.name, cells=cells, precision_equal_aac_p4f=equal)


def _geomean(values: np.ndarray) -> float:
    return float(np.exp(np.mean(np.log(values))))


class BenchService:
    """Runs the comparison matrix and writes its reports"""

    def run_matrix(
        self,
        entries: Iterable[CorpusEntry],
        pairs: Optional[List[PolicyPair]] = None,
        workers: Optional[int] = None,
    ) -> List[ComparisonRow]:
        """
        One row per program, in corpus order

        With more than one worker, programs run in separate processes; rows
        are still assembled in corpus order.
        """
        entries = list(entries)
        pairs = pairs or PolicyPair.all()
        workers = workers or settings.BENCH_WORKERS
        if workers > 1 and len(entries) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(run_entry, entries, [pairs] * len(entries)))
        return [run_entry(entry, pairs) for entry in entries]

    def summarize(self, rows: List[ComparisonRow]) -> MatrixSummary:
        """Geometric-mean and maximum AAC/P4F ratios per value policy"""
        ratios = []
        for value in ValuePolicy:
            configs, states = [], []
            for row in rows:
                aac, p4f = row.cell(value, KontPolicy.AAC), row.cell(value, KontPolicy.P4F)
                if aac is None or p4f is None or aac.error or p4f.error or not p4f.configurations:
                    continue
                configs.append(aac.configurations / p4f.configurations)
                states.append(aac.states_visited / p4f.states_visited)
            if not configs:
                continue
            configs_arr, states_arr = np.array(configs), np.array(states)
            ratios.append(RatioSummary(
                value_policy=value,
                programs=len(configs),
                configurations_geomean=round(_geomean(configs_arr), 4),
                states_geomean=round(_geomean(states_arr), 4),
                configurations_max=round(float(configs_arr.max()), 4),
                states_max=round(float(states_arr.max()), 4),
            ))
        return MatrixSummary(ratios=ratios)

    def digest(self, rows: List[ComparisonRow]) -> str:
        """Hash of the rows with timings removed"""
        payload = [row.model_dump(mode="json", exclude={"cells": {"__all__": {"wall_ms"}}}) for row in rows]
        text = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()

    def build_report(self, rows: List[ComparisonRow]) -> BenchReport:
        return BenchReport(rows=rows, summary=self.summarize(rows), digest=self.digest(rows))

    def to_frame(self, rows: List[ComparisonRow]) -> pd.DataFrame:
        """Long table: one line per program and policy pair"""
        records = []
        for row in rows:
            if row.error:
                records.append({"program": row.program, "error": row.error})
            for cell in row.cells:
                record = {"program": row.program}
                record.update(cell.model_dump(mode="json"))
                records.append(record)
        columns = [
            "program", "value_policy", "kont_policy", "configurations", "states_visited", "transitions", "wall_ms",
            "error",
        ]
        return pd.DataFrame.from_records(records, columns=columns)

    def write_csv(self, rows: List[ComparisonRow], path: Path) -> Path:
        self.to_frame(rows).to_csv(path, index=False)
        return path

    def write_json(self, report: BenchReport, path: Path) -> Path:
        Path(path).write_text(report.model_dump_json(indent=2))
        return path

    def write_gnuplot(self, rows: List[ComparisonRow], path: Path) -> Path:
        """
        Whitespace-separated data for a clustered histogram: one block per
        value policy, one line per program with AAC and P4F counts
        """
        df = self.to_frame(rows)
        df = df[df["kont_policy"].isin([KontPolicy.AAC.value, KontPolicy.P4F.value]) & df["error"].isna()]
        with open(path, "w") as out:
            for value in ValuePolicy:
                block = df[df["value_policy"] == value.value]
                if block.empty:
                    continue
                table = block.pivot(index="program", columns="kont_policy", values=["configurations", "states_visited"])
                table.columns = [f"{kind}_{kont}" for kind, kont in table.columns]
                table = table.reindex([r.program for r in rows if r.program in table.index])
                out.write(f"# value policy {value.value}\n")
                table.to_csv(out, sep=" ")
                out.write("\n\n")
        return path

    def write_chart(self, rows: List[ComparisonRow], path: Path, value: ValuePolicy = ValuePolicy.MONO) -> Path:
        """Grouped bar chart of AAC and P4F costs per program, log scale"""
        fig = go.Figure()
        for kont in (KontPolicy.AAC, KontPolicy.P4F):
            for metric, label in (("configurations", "Configurations"), ("states_visited", "States")):
                programs, counts = [], []
                for row in rows:
                    cell = row.cell(value, kont)
                    if cell is not None and not cell.error:
                        programs.append(row.program)
                        counts.append(getattr(cell, metric))
                fig.add_trace(go.Bar(name=f"{kont.value.upper()} {label}", x=programs, y=counts))
        fig.update_layout(
            barmode="group",
            title=f"AAC vs P4F ({value.value})",
            yaxis_type="log",
            yaxis_title="count",
        )
        fig.write_html(str(path), include_plotlyjs="cdn")
        return path


# Singleton instance
bench_service = BenchService()
