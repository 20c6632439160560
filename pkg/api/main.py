"""
p4f-cfa - Analysis API
"""

from fastapi import FastAPI

from api.routes import analysis, corpus
from core.corpus import corpus_service
from core.models import HealthResponse, KontPolicy, RootResponse, ValuePolicy
from config.settings import settings

app = FastAPI(
    title=settings.APP_NAME,
    description=settings.APP_DESCRIPTION,
    version=settings.APP_VERSION,
    license_info={
        "name": "MIT",
    },
)

# Include routers
app.include_router(analysis.router)
app.include_router(corpus.router)


@app.get("/", response_model=RootResponse)
def root():
    """Root endpoint - API information"""
    return RootResponse(
        message="p4f-cfa - where returns flow home",
        status="ready",
        version=settings.APP_VERSION,
        value_policies=[v.value for v in ValuePolicy],
        kont_policies=[k.value for k in KontPolicy],
        corpus_size=len(corpus_service),
    )


@app.get("/health", response_model=HealthResponse)
def health_check():
    """Health check endpoint"""
    return HealthResponse(
        status="healthy",
        corpus_programs=corpus_service.get_names(),
    )
