"""
p4f-cfa - Corpus Routes
"""

from typing import List

from fastapi import APIRouter, HTTPException
from fastapi.responses import HTMLResponse

from api.routes.analysis import http_error
from core.bench_service import bench_service
from core.corpus import CorpusNotFound, corpus_service
from core.exceptions import AnalysisError
from core.models import (
    AnalysisReport, BenchReport, CorpusEntry, KontPolicy, MatrixRequest, PolicyPair, ValuePolicy,
)
from core.services import analysis_service

router = APIRouter(prefix="/corpus", tags=["corpus"])


# Specific routes before dynamic routes


@router.get("", response_model=dict)
def list_corpus():
    """List the benchmark programs"""
    entries: List[CorpusEntry] = corpus_service.list_entries()
    return {
        "total": len(entries),
        "source": str(corpus_service.corpus_dir),
        "programs": [e.model_dump(exclude={"source"}) for e in entries],
    }


@router.post("/matrix", response_model=BenchReport)
def run_matrix(request: MatrixRequest):
    """
    Comparison matrix for the chosen programs and policies

    Example request body:
    {
        "programs": ["mj09", "eta"],
        "value_policies": ["mono"],
        "kont_policies": ["aac", "p4f"]
    }
    """
    try:
        names = request.programs or corpus_service.get_names()
        entries = [corpus_service.get_entry(name) for name in names]
    except CorpusNotFound as e:
        raise HTTPException(status_code=404, detail=str(e))
    pairs = [PolicyPair(value=v, kont=k) for v in request.value_policies for k in request.kont_policies]
    rows = bench_service.run_matrix(entries, pairs, workers=1)
    return bench_service.build_report(rows)


@router.get("/table", response_class=HTMLResponse)
def matrix_table(value_policy: ValuePolicy = ValuePolicy.MONO):
    """AAC against P4F for every corpus program as an HTML table"""
    pairs = [PolicyPair(value=value_policy, kont=k) for k in (KontPolicy.AAC, KontPolicy.P4F)]
    rows = bench_service.run_matrix(corpus_service.list_entries(), pairs, workers=1)

    html = """
    <!DOCTYPE html>
    <html>
    <head>
        <title>p4f-cfa - AAC vs P4F</title>
        <style>
            body { font-family: sans-serif; margin: 20px; }
            table { border-collapse: collapse; }
            th, td { padding: 6px 12px; border-bottom: 1px solid #ddd; text-align: right; }
            th { background: #eee; }
            td.program { text-align: left; font-weight: bold; }
            .error { color: #c62828; }
        </style>
    </head>
    <body>
        <h1>AAC vs P4F</h1>
        <table>
            <thead>
                <tr>
                    <th>Program</th>
                    <th>AAC configurations</th>
                    <th>P4F configurations</th>
                    <th>AAC states</th>
                    <th>P4F states</th>
                    <th>Same flows</th>
                </tr>
            </thead>
            <tbody>
    """
    for row in rows:
        aac, p4f = row.cell(value_policy, KontPolicy.AAC), row.cell(value_policy, KontPolicy.P4F)
        if row.error or aac is None or p4f is None or aac.error or p4f.error:
            detail = row.error or (aac and aac.error) or (p4f and p4f.error) or "missing"
            html += f"""
                <tr><td class="program">{row.program}</td><td colspan="5" class="error">{detail}</td></tr>
            """
            continue
        same = row.precision_equal_aac_p4f.get(value_policy.value)
        html += f"""
                <tr>
                    <td class="program">{row.program}</td>
                    <td>{aac.configurations:,}</td>
                    <td>{p4f.configurations:,}</td>
                    <td>{aac.states_visited:,}</td>
                    <td>{p4f.states_visited:,}</td>
                    <td>{"yes" if same else "no"}</td>
                </tr>
        """
    html += """
            </tbody>
        </table>
    </body>
    </html>
    """
    return html


# Dynamic route last
@router.get("/{name}/report", response_model=AnalysisReport)
def program_report(
    name: str,
    value_policy: ValuePolicy = ValuePolicy.MONO,
    kont_policy: KontPolicy = KontPolicy.P4F,
):
    """Analysis report of one corpus program"""
    try:
        program = corpus_service.get_program(name)
        _, report = analysis_service.report(program, name, value_policy, kont_policy)
        return report
    except CorpusNotFound as e:
        raise HTTPException(status_code=404, detail=str(e))
    except AnalysisError as e:
        raise http_error(e)
