"""Pydantic request/response models for the HTTP service.

The wire format mirrors the dataset files: poses as unit quaternions
(w, x, y, z) plus translations in meters. Conversion to core objects goes
through the same validation as file loading, so the service rejects exactly
what the loader rejects.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from .. import __version__
from ..metrics import ErrorReport, GroundTruthErrors
from ..model import (
    CalibrationProblem,
    GroundTruth,
    Solution,
    pose_to_obj,
    problem_from_obj,
    problem_to_obj,
    solution_from_obj,
    solution_to_obj,
)


class PoseModel(BaseModel):
    q: list[float] = Field(min_length=4, max_length=4, description="unit quaternion w,x,y,z")
    t: list[float] = Field(min_length=3, max_length=3, description="translation, meters")


class MeasurementModel(BaseModel):
    a: PoseModel
    b: PoseModel


class CameraSeriesModel(BaseModel):
    camera_id: str
    measurements: list[MeasurementModel]


class ProblemModel(BaseModel):
    direction: Literal["eye_to_base", "eye_on_hand"] = "eye_to_base"
    cameras: list[CameraSeriesModel]

    def to_core(self) -> CalibrationProblem:
        return problem_from_obj(self.model_dump())

    @classmethod
    def from_core(cls, problem: CalibrationProblem) -> "ProblemModel":
        return cls.model_validate(problem_to_obj(problem))


class DiagnosticsModel(BaseModel):
    smallest_singular_value: float
    second_smallest: float
    rotation_residual_deg: float
    translation_residual_m: float


class SolutionModel(BaseModel):
    y: PoseModel
    x: dict[str, PoseModel]
    diagnostics: DiagnosticsModel | None = None

    def to_core(self) -> Solution:
        return solution_from_obj(self.model_dump(exclude_none=True))

    @classmethod
    def from_core(cls, solution: Solution | GroundTruth) -> "SolutionModel":
        return cls.model_validate(solution_to_obj(solution))


class GroundTruthModel(BaseModel):
    y: PoseModel
    x: dict[str, PoseModel]

    def to_core(self) -> GroundTruth:
        sol = solution_from_obj(self.model_dump())
        return GroundTruth(y=sol.y, x=sol.x)

    @classmethod
    def from_core(cls, gt: GroundTruth) -> "GroundTruthModel":
        return cls.model_validate(solution_to_obj(gt))


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str = __version__


class SolveRequest(BaseModel):
    problem: ProblemModel
    reference: str | None = Field(
        default=None, description="camera id; also return chained extrinsics to it"
    )


class SolveResponse(BaseModel):
    solution: SolutionModel
    relative_extrinsics: dict[str, PoseModel] | None = None


class SimulateRequest(BaseModel):
    cameras: int = Field(ge=1, le=16)
    measurements: int = Field(ge=3)
    noise: float = Field(default=0.0, ge=0.0, le=0.3)
    seed: int = Field(ge=0)


class SimulateResponse(BaseModel):
    problem: ProblemModel
    ground_truth: GroundTruthModel


class CameraErrorModel(BaseModel):
    e_rot_deg: float
    e_trans_m: float


class PoseErrorModel(BaseModel):
    rot_deg: float
    trans_m: float


class GroundTruthErrorsModel(BaseModel):
    y: PoseErrorModel
    per_camera: dict[str, PoseErrorModel]

    @classmethod
    def from_core(cls, errors: GroundTruthErrors) -> "GroundTruthErrorsModel":
        return cls(
            y=PoseErrorModel(rot_deg=errors.y[0], trans_m=errors.y[1]),
            per_camera={
                cid: PoseErrorModel(rot_deg=rot, trans_m=trans)
                for cid, (rot, trans) in errors.per_camera.items()
            },
        )


class EvaluateRequest(BaseModel):
    problem: ProblemModel
    solution: SolutionModel
    ground_truth: GroundTruthModel | None = None


class EvaluateResponse(BaseModel):
    e_rot_deg: float
    e_trans_m: float
    n_pairs: int
    per_camera: dict[str, CameraErrorModel]
    ground_truth_errors: GroundTruthErrorsModel | None = None

    @classmethod
    def from_report(
        cls, report: ErrorReport, gt_errors: GroundTruthErrors | None = None
    ) -> "EvaluateResponse":
        return cls(
            e_rot_deg=report.e_rot,
            e_trans_m=report.e_trans,
            n_pairs=report.n_pairs,
            per_camera={
                cid: CameraErrorModel(e_rot_deg=rot, e_trans_m=trans)
                for cid, (rot, trans) in report.per_camera.items()
            },
            ground_truth_errors=(
                GroundTruthErrorsModel.from_core(gt_errors) if gt_errors is not None else None
            ),
        )


class SweepRequest(BaseModel):
    kind: Literal["noise", "cameras", "measurements"]
    trials: int = Field(default=100, ge=1)
    seed: int = Field(ge=0)
    timing: bool = False
