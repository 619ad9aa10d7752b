"""HTTP front end: one POST route per experiment, identical payloads to
the CLI.  Run with `uvicorn sglab.service:app`."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__, experiments
from .errors import SglabError
from .schemas import (
    BoundsRequest,
    BoundsResponse,
    EvolveRequest,
    EvolveResponse,
    LateGapRequest,
    LateGapResponse,
    LocalizeRequest,
    LocalizeResponse,
    MidSpectrumRequest,
    MidSpectrumResponse,
    MinGapRequest,
    MinGapResponse,
    NeighborStatsRequest,
    NeighborStatsResponse,
    SpectrumRequest,
    SpectrumResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="sglab", version=__version__)

    @app.exception_handler(SglabError)
    async def _domain_error(request: Request, exc: SglabError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/spectrum", response_model=SpectrumResponse)
    def spectrum(req: SpectrumRequest):
        return experiments.run_spectrum(req)

    @app.post("/min-gap", response_model=MinGapResponse)
    def min_gap(req: MinGapRequest):
        return experiments.run_min_gap(req)

    @app.post("/bounds", response_model=BoundsResponse)
    def bounds(req: BoundsRequest):
        return experiments.run_bounds(req)

    @app.post("/localize", response_model=LocalizeResponse)
    def localize(req: LocalizeRequest):
        return experiments.run_localize(req)

    @app.post("/theorem3", response_model=LateGapResponse)
    def theorem3(req: LateGapRequest):
        return experiments.run_late_gap(req)

    @app.post("/evolve", response_model=EvolveResponse)
    def evolve(req: EvolveRequest):
        return experiments.run_evolve(req)

    @app.post("/mid-spectrum", response_model=MidSpectrumResponse)
    def mid_spectrum(req: MidSpectrumRequest):
        return experiments.run_mid_spectrum(req)

    @app.post("/neighbor-stats", response_model=NeighborStatsResponse)
    def neighbor_stats(req: NeighborStatsRequest):
        return experiments.run_neighbor_stats(req)

    return app


app = create_app()
