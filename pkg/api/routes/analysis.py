"""
p4f-cfa - Analysis Routes
"""

from fastapi import APIRouter, HTTPException

from core.exceptions import AnalysisError, IncompleteOracle, ParseError, ResourceLimit, ScopeError, UnknownVariable
from core.models import AnalyzeRequest, AnalyzeResponse
from core.services import analysis_service

router = APIRouter(prefix="/analysis", tags=["analysis"])


def http_error(e: AnalysisError) -> HTTPException:
    """Map a domain error to its HTTP status"""
    if isinstance(e, (ParseError, ScopeError)):
        return HTTPException(status_code=400, detail=str(e))
    if isinstance(e, UnknownVariable):
        return HTTPException(status_code=404, detail=str(e))
    if isinstance(e, IncompleteOracle):
        return HTTPException(status_code=422, detail=str(e))
    if isinstance(e, ResourceLimit):
        return HTTPException(status_code=503, detail=str(e))
    return HTTPException(status_code=500, detail=f"Analysis failed: {e}")


@router.post("", response_model=AnalyzeResponse)
def analyze_source(request: AnalyzeRequest):
    """
    Analyze a program under one policy pair

    Example request body:
    {
        "source": "(let* ([id (lambda (x) x)] [y (id #t)] [z (id #f)]) z)",
        "value_policy": "1cfa",
        "kont_policy": "p4f",
        "check_precision": true
    }
    """
    try:
        return analysis_service.analyze_request(request)
    except AnalysisError as e:
        raise http_error(e)
