"""Synthetic rig and measurement generation with a seeded noise model.

All sampling goes through PCG64 generators keyed by (seed, stream, camera,
measurement) tuples via numpy's SeedSequence, so every draw is independent of
iteration order and trials can be generated concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Pose, project_to_so3, quat_to_matrix, rotation_about_axis, rotation_angle
from .model import (
    CalibrationProblem,
    CameraSeries,
    Direction,
    GroundTruth,
    MeasurementPair,
)

# Stream tags keeping rig, measurement, and noise draws on disjoint substreams.
_RIG_STREAM = 0
_MEASUREMENT_STREAM = 1
_NOISE_STREAM = 2

# Cameras may tilt away from their nominal outward-facing attitude by up to this.
_MAX_TILT_RAD = math.radians(10.0)

# Marker frames sit on the physical target board, so the marker-to-target
# offset is small; 0.3 m bounds the translation magnitude.
_MAX_Y_TRANSLATION = 0.3

MAX_NOISE_RATIO = 0.3


@dataclass(frozen=True)
class RigConfig:
    """Layout of the simulated fixed-camera rig around the tracking origin."""

    camera_count: int
    seed: int
    radius_range: tuple[float, float] = (0.4, 0.65)
    planar: bool = True
    target_distance_range: tuple[float, float] = (0.5, 3.0)

    def __post_init__(self):
        if not 1 <= self.camera_count <= 16:
            raise ValueError(f"camera_count must be in [1, 16], got {self.camera_count}")
        lo, hi = self.radius_range
        if not (0.0 < lo <= hi):
            raise ValueError(f"radius_range must be positive and ordered, got {self.radius_range}")
        lo, hi = self.target_distance_range
        if not (0.0 < lo <= hi):
            raise ValueError(
                f"target_distance_range must be positive and ordered, "
                f"got {self.target_distance_range}"
            )


@dataclass(frozen=True)
class NoiseConfig:
    """Proportional measurement noise; ratio is the maximum relative magnitude."""

    ratio: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.ratio <= MAX_NOISE_RATIO:
            raise ValueError(f"noise ratio must be in [0, {MAX_NOISE_RATIO}], got {self.ratio}")


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(key)


def _random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _random_rotation(rng: np.random.Generator) -> np.ndarray:
    # normalized 4d gaussian = uniform quaternion = uniform rotation
    q = rng.normal(size=4)
    return quat_to_matrix(q / np.linalg.norm(q))


def camera_id_for(index: int) -> str:
    """Zero-padded id so lexicographic order matches camera index order."""
    return f"cam{index:02d}"


def generate_rig(config: RigConfig) -> GroundTruth:
    """Place cameras on a ring facing outward and draw the marker-to-target pose.

    Camera j sits at azimuth 2*pi*j/m with radius drawn from radius_range and,
    unless planar, a random height; its optical (+z) axis points outward with
    a small random tilt. x[j] is the base-to-camera transform, y the
    marker-to-target transform. Deterministic in the seed.
    """
    m = config.camera_count
    x: dict[str, Pose] = {}
    for j in range(m):
        rng = _rng(config.seed, _RIG_STREAM, j)
        azimuth = 2.0 * math.pi * j / m
        radius = rng.uniform(*config.radius_range)
        height = 0.0 if config.planar else rng.uniform(-0.3, 0.3)
        outward = np.array([math.cos(azimuth), math.sin(azimuth), 0.0])
        center = radius * outward + np.array([0.0, 0.0, height])
        # camera axes in the base frame: +z outward, +x tangent to the ring, +y down-ish
        z_axis = outward
        x_axis = np.array([-math.sin(azimuth), math.cos(azimuth), 0.0])
        y_axis = np.cross(z_axis, x_axis)
        cam_to_base_r = np.column_stack([x_axis, y_axis, z_axis])
        tilt = rotation_about_axis(_random_unit_vector(rng), rng.uniform(0.0, _MAX_TILT_RAD))
        cam_to_base = Pose(project_to_so3(cam_to_base_r @ tilt), center)
        x[camera_id_for(j)] = cam_to_base.inverse()
    rng_y = _rng(config.seed, _RIG_STREAM, m)
    y_t = _random_unit_vector(rng_y) * _MAX_Y_TRANSLATION * rng_y.uniform() ** (1.0 / 3.0)
    y = Pose(_random_rotation(rng_y), y_t)
    return GroundTruth(y=y, x=x)


# Target boards face back toward the lens: a 180 degree flip about the camera
# x axis, before the random attitude perturbation.
_FACING = np.diag([1.0, -1.0, -1.0])


def _sample_target_in_camera(rng: np.random.Generator, distance_range, max_face_rad) -> Pose:
    d = rng.uniform(*distance_range)
    spin = rotation_about_axis(_random_unit_vector(rng), rng.uniform(0.0, max_face_rad))
    return Pose(_FACING @ spin, np.array([0.0, 0.0, d]))


def generate_measurements(
    gt: GroundTruth,
    n_per_camera: int,
    seed: int,
    distance_range: tuple[float, float] = (0.5, 3.0),
    max_facing_deg: float = 45.0,
) -> CalibrationProblem:
    """Generate an exactly consistent noise-free eye-to-base problem.

    For each camera, n target poses are sampled in front of it (center along
    the optical axis within distance_range, attitude within max_facing_deg of
    facing the lens), converted to marker poses b in the tracking frame, and
    the camera observation is then set to a = y . b . x^-1 so the loop
    constraint holds to machine precision.
    """
    if n_per_camera < 3:
        raise ValueError(f"n_per_camera must be at least 3, got {n_per_camera}")
    max_face_rad = math.radians(max_facing_deg)
    y_inv = gt.y.inverse()
    cameras = []
    for j, cid in enumerate(sorted(gt.x)):
        x = gt.x[cid]
        x_inv = x.inverse()
        pairs = []
        for i in range(n_per_camera):
            rng = _rng(seed, _MEASUREMENT_STREAM, j, i)
            target_to_cam = _sample_target_in_camera(rng, distance_range, max_face_rad)
            a_sampled = target_to_cam.inverse()
            b = y_inv @ a_sampled @ x
            a = gt.y @ b @ x_inv
            pairs.append(MeasurementPair(a=a, b=b, index=i))
        cameras.append(CameraSeries(camera_id=cid, measurements=tuple(pairs)))
    return CalibrationProblem(cameras=tuple(cameras), direction=Direction.EYE_TO_BASE)


def _perturb_pose(pose: Pose, ratio: float, rng: np.random.Generator) -> Pose:
    t = pose.t + ratio * rng.uniform(-1.0, 1.0, size=3) * np.abs(pose.t)
    theta = math.radians(rotation_angle(pose.r))
    axis = _random_unit_vector(rng)
    delta = rotation_about_axis(axis, ratio * rng.uniform() * theta)
    return Pose(project_to_so3(delta @ pose.r), t)


def perturb(problem: CalibrationProblem, noise: NoiseConfig) -> CalibrationProblem:
    """Apply proportional noise to every measurement pose (both a and b).

    Each translation component gets ratio * U(-1, 1) of its own magnitude
    added; each rotation is pre-multiplied by a random-axis perturbation
    whose angle is ratio * U(0, 1) of the pose's own rotation angle, keeping
    the noise scale-free in both parts. ratio 0 returns the problem unchanged.
    """
    if noise.ratio == 0.0:
        return problem
    rank = {cid: j for j, cid in enumerate(problem.camera_ids)}
    cameras = []
    for series in problem.cameras:
        j = rank[series.camera_id]
        pairs = []
        for i, pair in enumerate(series.measurements):
            rng = _rng(noise.seed, _NOISE_STREAM, j, i)
            pairs.append(
                MeasurementPair(
                    a=_perturb_pose(pair.a, noise.ratio, rng),
                    b=_perturb_pose(pair.b, noise.ratio, rng),
                    index=pair.index,
                )
            )
        cameras.append(CameraSeries(camera_id=series.camera_id, measurements=tuple(pairs)))
    return CalibrationProblem(cameras=tuple(cameras), direction=problem.direction)
