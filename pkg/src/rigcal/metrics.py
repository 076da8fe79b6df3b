"""Consistency error metrics and ground-truth comparison metrics.

The consistency metric scores how well an estimate closes the loop constraint
a . x = y . b over all measured pairs, without needing ground truth: rotation
error is the mean angle of (R_y R_b)^T (R_a R_x) and translation error the
mean norm of (R_a t_x + t_a) - (R_y t_b + t_y). Pairs are weighted equally
across cameras, which reduces to the per-camera double mean when all series
have equal length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CameraMismatchError
from .geometry import Pose, rotation_angle
from .model import CalibrationProblem, Direction, GroundTruth, Solution


@dataclass(frozen=True)
class ErrorReport:
    e_rot: float  # degrees
    e_trans: float  # meters
    per_camera: dict[str, tuple[float, float]]
    n_pairs: int


@dataclass(frozen=True)
class GroundTruthErrors:
    """Geodesic rotation distance (deg) and translation distance (m) per pose."""

    y: tuple[float, float]
    per_camera: dict[str, tuple[float, float]]


def _base_form(problem: CalibrationProblem, y: Pose, x: dict[str, Pose]):
    """Yield (camera_id, ra, ta, rb, tb, rx, tx) in the eye-to-base constraint form.

    Eye-on-hand data satisfies the same constraint after inverting both
    measurement poses, swapping their roles, and inverting the estimates, so
    a single scoring path covers both directions.
    """
    for series in problem.sorted_cameras():
        if series.camera_id not in x:
            raise CameraMismatchError(f"solution is missing camera '{series.camera_id}'")
        arrays = series.stacked
        if problem.direction == Direction.EYE_TO_BASE:
            ra, ta, rb, tb = arrays
            pose_x = x[series.camera_id]
            pose_y = y
        else:
            # invert a and b poses batch-wise, then use (b^-1, a^-1) as (a, b)
            rb = np.swapaxes(arrays.ra, -1, -2)
            tb = -np.einsum("nij,nj->ni", rb, arrays.ta)
            ra = np.swapaxes(arrays.rb, -1, -2)
            ta = -np.einsum("nij,nj->ni", ra, arrays.tb)
            pose_x = x[series.camera_id].inverse()
            pose_y = y.inverse()
        yield series.camera_id, ra, ta, rb, tb, pose_x, pose_y


def consistency_error(problem: CalibrationProblem, solution: Solution | GroundTruth) -> ErrorReport:
    """Loop-closure errors of an estimate on a problem, per camera and overall."""
    per_camera: dict[str, tuple[float, float]] = {}
    rot_sum = 0.0
    trans_sum = 0.0
    n_total = 0
    for cid, ra, ta, rb, tb, pose_x, pose_y in _base_form(problem, solution.y, solution.x):
        lhs_r = ra @ pose_x.r
        rhs_r = pose_y.r @ rb
        angles = rotation_angle(np.swapaxes(rhs_r, -1, -2) @ lhs_r)
        lhs_t = np.einsum("nij,j->ni", ra, pose_x.t) + ta
        rhs_t = np.einsum("ij,nj->ni", pose_y.r, tb) + pose_y.t
        dists = np.linalg.norm(lhs_t - rhs_t, axis=-1)
        per_camera[cid] = (float(np.mean(angles)), float(np.mean(dists)))
        rot_sum += float(np.sum(angles))
        trans_sum += float(np.sum(dists))
        n_total += angles.shape[0]
    return ErrorReport(
        e_rot=rot_sum / n_total,
        e_trans=trans_sum / n_total,
        per_camera=per_camera,
        n_pairs=n_total,
    )


def gt_error(solution: Solution | GroundTruth, gt: GroundTruth) -> GroundTruthErrors:
    """Per-pose distance between an estimate and the generator's ground truth."""
    if set(solution.x) != set(gt.x):
        missing = set(gt.x) ^ set(solution.x)
        raise CameraMismatchError(f"camera sets differ on {sorted(missing)}")
    def pose_distance(est: Pose, ref: Pose) -> tuple[float, float]:
        return (
            float(rotation_angle(est.r.T @ ref.r)),
            float(np.linalg.norm(est.t - ref.t)),
        )
    return GroundTruthErrors(
        y=pose_distance(solution.y, gt.y),
        per_camera={cid: pose_distance(solution.x[cid], gt.x[cid]) for cid in sorted(gt.x)},
    )
