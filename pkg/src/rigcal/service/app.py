"""FastAPI application exposing solve, simulate, evaluate, and sweep.

Error mapping: schema violations are FastAPI's usual 422; semantically
invalid data (bad rotations, camera mismatches) is 400; degenerate motion is
409 with the singular-value ratio in the detail.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from .. import __version__
from ..bench import SweepConfig, SweepKind, run_sweep
from ..errors import DegenerateMotionError, InvalidProblemError, ParseError
from ..metrics import consistency_error, gt_error
from ..solver import relative_extrinsics, solve
from ..synth import NoiseConfig, RigConfig, generate_measurements, generate_rig, perturb
from .schemas import (
    EvaluateRequest,
    EvaluateResponse,
    GroundTruthModel,
    HealthResponse,
    PoseModel,
    ProblemModel,
    SimulateRequest,
    SimulateResponse,
    SolutionModel,
    SolveRequest,
    SolveResponse,
    SweepRequest,
)
from ..model import pose_to_obj


def create_app() -> FastAPI:
    app = FastAPI(
        title="rigcal",
        version=__version__,
        description="Closed-form joint multi-camera / tracker extrinsic calibration",
    )

    @app.exception_handler(InvalidProblemError)
    @app.exception_handler(ParseError)
    async def _invalid_handler(request: Request, exc: Exception) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(DegenerateMotionError)
    async def _degenerate_handler(
        request: Request, exc: DegenerateMotionError
    ) -> JSONResponse:
        return JSONResponse(
            status_code=409,
            content={
                "detail": str(exc),
                "error": "degenerate_motion",
                "singular_value_ratio": exc.ratio,
            },
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse()

    @app.post("/solve", response_model=SolveResponse, response_model_exclude_none=True)
    def solve_endpoint(request: SolveRequest) -> SolveResponse:
        solution = solve(request.problem.to_core())
        extrinsics = None
        if request.reference is not None:
            extrinsics = {
                cid: PoseModel.model_validate(pose_to_obj(pose))
                for cid, pose in relative_extrinsics(solution, request.reference).items()
            }
        return SolveResponse(
            solution=SolutionModel.from_core(solution), relative_extrinsics=extrinsics
        )

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate_endpoint(request: SimulateRequest) -> SimulateResponse:
        config = RigConfig(camera_count=request.cameras, seed=request.seed)
        gt = generate_rig(config)
        problem = generate_measurements(
            gt, request.measurements, request.seed, distance_range=config.target_distance_range
        )
        if request.noise > 0.0:
            problem = perturb(problem, NoiseConfig(ratio=request.noise, seed=request.seed))
        return SimulateResponse(
            problem=ProblemModel.from_core(problem),
            ground_truth=GroundTruthModel.from_core(gt),
        )

    @app.post("/evaluate", response_model=EvaluateResponse, response_model_exclude_none=True)
    def evaluate_endpoint(request: EvaluateRequest) -> EvaluateResponse:
        problem = request.problem.to_core()
        solution = request.solution.to_core()
        report = consistency_error(problem, solution)
        gt_errors = None
        if request.ground_truth is not None:
            gt_errors = gt_error(solution, request.ground_truth.to_core())
        return EvaluateResponse.from_report(report, gt_errors)

    @app.post("/sweep")
    def sweep_endpoint(request: SweepRequest) -> PlainTextResponse:
        config = SweepConfig(
            kind=SweepKind(request.kind),
            seed=request.seed,
            trials=request.trials,
            measure_time=request.timing,
        )
        report = run_sweep(config)
        return PlainTextResponse(report.to_csv(), media_type="text/csv")

    return app


app = create_app()
