"""FastAPI application exposing the solver commands as POST endpoints."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import ConvergenceError, LimitUnstableError, VardpError
from . import handlers
from .schemas import (
    CycleRequest,
    HealthResponse,
    KoopmanRequest,
    LimitRequest,
    RegularityRequest,
    Report,
    SolveRequest,
    TranslationRequest,
    VerifyDiscountRequest,
)

ROUTES = {
    "solve-bellman": "/solve/bellman",
    "solve-transfer": "/solve/transfer",
    "solve-koopman": "/solve/koopman",
    "limit-subaction": "/limit/subaction",
    "limit-eigenpair": "/limit/eigenpair",
    "verify-discount": "/verify/discount",
    "verify-regularity": "/verify/regularity",
    "oracle-cycle": "/oracle/cycle",
    "check-translation": "/check/translation",
}


def _guard(handler, req) -> Report:
    try:
        return handler(req)
    except (ConvergenceError, LimitUnstableError) as exc:
        raise HTTPException(status_code=409, detail=str(exc))
    except VardpError as exc:
        raise HTTPException(status_code=422, detail=str(exc))


def create_app() -> FastAPI:
    app = FastAPI(title="vardp", version=__version__,
                  description="Variable-discount dynamic programming solver service")

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", package="vardp", version=__version__)

    @app.post(ROUTES["solve-bellman"], response_model=Report)
    def solve_bellman(req: SolveRequest) -> Report:
        return _guard(handlers.handle_solve_bellman, req)

    @app.post(ROUTES["solve-transfer"], response_model=Report)
    def solve_transfer(req: SolveRequest) -> Report:
        return _guard(handlers.handle_solve_transfer, req)

    @app.post(ROUTES["solve-koopman"], response_model=Report)
    def solve_koopman(req: KoopmanRequest) -> Report:
        return _guard(handlers.handle_solve_koopman, req)

    @app.post(ROUTES["limit-subaction"], response_model=Report)
    def limit_subaction(req: LimitRequest) -> Report:
        return _guard(handlers.handle_limit_subaction, req)

    @app.post(ROUTES["limit-eigenpair"], response_model=Report)
    def limit_eigenpair(req: LimitRequest) -> Report:
        return _guard(handlers.handle_limit_eigenpair, req)

    @app.post(ROUTES["verify-discount"], response_model=Report)
    def verify_discount(req: VerifyDiscountRequest) -> Report:
        return _guard(handlers.handle_verify_discount, req)

    @app.post(ROUTES["verify-regularity"], response_model=Report)
    def verify_regularity(req: RegularityRequest) -> Report:
        return _guard(handlers.handle_verify_regularity, req)

    @app.post(ROUTES["oracle-cycle"], response_model=Report)
    def oracle_cycle(req: CycleRequest) -> Report:
        return _guard(handlers.handle_oracle_cycle, req)

    @app.post(ROUTES["check-translation"], response_model=Report)
    def check_translation(req: TranslationRequest) -> Report:
        return _guard(handlers.handle_check_translation, req)

    return app


app = create_app()
