"""FastAPI application wrapping one analysis session."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import schemas
from .session import AnalysisSession, SessionError


def create_app(session: AnalysisSession) -> FastAPI:
    app = FastAPI(title="escape-service")
    # The companion UI is served as static files from another origin.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(SessionError)
    async def session_error_handler(_request: Request, exc: SessionError) -> JSONResponse:
        body = schemas.ErrorBody(error=exc.error, detail=exc.detail, entity_id=exc.entity_id)
        return JSONResponse(status_code=exc.status, content=body.model_dump())

    @app.get("/api/overview", response_model=schemas.OverviewResponse)
    def overview():
        return session.overview()

    @app.post("/api/pair", response_model=schemas.PairResponse)
    def select_pair(req: schemas.PairRequest):
        return session.select_pair(req.negative, req.positive)

    @app.get("/api/instances", response_model=schemas.PairResponse)
    def instances(cases: str = "", brier_min: float = 0.0, brier_max: float = 1.0):
        case_list = [c for c in cases.split(",") if c] if cases else None
        return session.instances(case_list, brier_min, brier_max)

    @app.get("/api/instances/{instance_id}/neighbors", response_model=schemas.NeighborsResponse)
    def neighbors(instance_id: str, k: int = 5):
        return session.neighbors(instance_id, k)

    @app.post("/api/segments/workspace", response_model=schemas.WorkspaceResponse)
    def segment_workspace(req: schemas.WorkspaceRequest):
        return session.segment_workspace(req.cases)

    @app.post("/api/concepts", response_model=schemas.ConceptCreatedResponse)
    def create_concept(req: schemas.ConceptRequest):
        return session.create_concept(req.name, req.segment_ids)

    @app.delete("/api/concepts/{concept_id}")
    def delete_concept(concept_id: str):
        session.delete_concept(concept_id)
        return {"deleted": concept_id, "seed": session.seed}

    @app.get("/api/concepts", response_model=schemas.ConceptOverviewResponse)
    def concept_overview():
        return session.concept_overview()

    @app.get("/api/concepts/{concept_id}", response_model=schemas.ConceptDetailResponse)
    def concept_detail(concept_id: str):
        return session.concept_detail(concept_id)

    @app.get("/api/concepts/{concept_id}/curve", response_model=schemas.CurveResponse)
    def concept_curve(concept_id: str, evaluate: bool = False):
        return session.curve(concept_id, evaluate)

    @app.get("/api/concepts/{concept_id}/recommend", response_model=schemas.RecommendResponse)
    def concept_recommend(concept_id: str, t: float = 0.5):
        return session.recommend(concept_id, t)

    @app.post("/api/debias", response_model=schemas.ApplyResponse)
    def apply_debias(req: schemas.DebiasRequest):
        return session.apply_debias(req.concept_id, req.n)

    return app
