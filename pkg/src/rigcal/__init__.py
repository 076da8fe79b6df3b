"""Joint extrinsic calibration of fixed multi-camera rigs against a tracker.

Estimates one shared hand-to-target transform and one extrinsic transform per
camera from synchronized pose pairs, in closed form, and ships a synthetic
benchmark harness, a CLI, and an HTTP service around the solver.
"""

__version__ = "0.1.0"

from .errors import (
    CameraMismatchError,
    DegenerateInputError,
    DegenerateMotionError,
    InvalidProblemError,
    ParseError,
)
from .geometry import Pose
from .metrics import ErrorReport, GroundTruthErrors, consistency_error, gt_error
from .model import (
    CalibrationProblem,
    CameraSeries,
    Diagnostics,
    Direction,
    GroundTruth,
    MeasurementPair,
    Solution,
    load_ground_truth,
    load_problem,
    load_solution,
    save_ground_truth,
    save_problem,
    save_solution,
)
from .solver import (
    average_y,
    relative_extrinsics,
    solve,
    solve_single_baseline,
)
from .synth import NoiseConfig, RigConfig, generate_measurements, generate_rig, perturb

__all__ = [
    "CalibrationProblem",
    "CameraMismatchError",
    "CameraSeries",
    "DegenerateInputError",
    "DegenerateMotionError",
    "Diagnostics",
    "Direction",
    "ErrorReport",
    "GroundTruth",
    "GroundTruthErrors",
    "InvalidProblemError",
    "MeasurementPair",
    "NoiseConfig",
    "ParseError",
    "Pose",
    "RigConfig",
    "Solution",
    "average_y",
    "consistency_error",
    "generate_measurements",
    "generate_rig",
    "gt_error",
    "load_ground_truth",
    "load_problem",
    "load_solution",
    "perturb",
    "relative_extrinsics",
    "save_ground_truth",
    "save_problem",
    "save_solution",
    "solve",
    "solve_single_baseline",
]
