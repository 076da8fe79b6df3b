"""Problem/solution data model, validation, and dataset file I/O.

Dataset and solution files are canonical JSON: camera entries sorted by id,
fixed field order, floats printed with 17 significant digits so that two
saves of the same data are byte-identical and a save/load round trip is
lossless.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import InvalidProblemError, ParseError
from .geometry import Pose, matrix_to_quat, project_to_so3, quat_to_matrix, rotation_defect

# Minimum pose pairs per camera for the calibration to be solvable at all.
MIN_MEASUREMENTS = 3

# Rotations whose orthonormality defect stays below this are re-orthonormalized
# on load; anything worse is rejected as corrupt data.
LOAD_ORTHO_TOL = 1e-6


class Direction(str, Enum):
    """Which side of the rig is fixed: cameras in the world, or on the hand."""

    EYE_TO_BASE = "eye_to_base"
    EYE_ON_HAND = "eye_on_hand"


@dataclass(frozen=True)
class MeasurementPair:
    """One synchronized observation: camera-to-target pose a, base-to-marker pose b."""

    a: Pose
    b: Pose
    index: int = 0


class SeriesArrays(NamedTuple):
    """Measurements of one camera stacked into arrays for vectorized math."""

    ra: np.ndarray  # (n, 3, 3)
    ta: np.ndarray  # (n, 3)
    rb: np.ndarray  # (n, 3, 3)
    tb: np.ndarray  # (n, 3)


@dataclass(frozen=True)
class CameraSeries:
    camera_id: str
    measurements: tuple[MeasurementPair, ...]

    def __post_init__(self):
        object.__setattr__(self, "measurements", tuple(self.measurements))

    def __len__(self) -> int:
        return len(self.measurements)

    @cached_property
    def stacked(self) -> SeriesArrays:
        ra = np.stack([m.a.r for m in self.measurements])
        ta = np.stack([m.a.t for m in self.measurements])
        rb = np.stack([m.b.r for m in self.measurements])
        tb = np.stack([m.b.t for m in self.measurements])
        for arr in (ra, ta, rb, tb):
            arr.setflags(write=False)
        return SeriesArrays(ra, ta, rb, tb)


@dataclass(frozen=True)
class CalibrationProblem:
    cameras: tuple[CameraSeries, ...]
    direction: Direction = Direction.EYE_TO_BASE

    def __post_init__(self):
        object.__setattr__(self, "cameras", tuple(self.cameras))
        object.__setattr__(self, "direction", Direction(self.direction))

    @property
    def camera_ids(self) -> list[str]:
        """Camera ids in sorted order, the canonical ordering used everywhere."""
        return sorted(s.camera_id for s in self.cameras)

    def series_by_id(self) -> dict[str, CameraSeries]:
        return {s.camera_id: s for s in self.cameras}

    def sorted_cameras(self) -> list[CameraSeries]:
        return sorted(self.cameras, key=lambda s: s.camera_id)

    def n_pairs(self) -> int:
        return sum(len(s) for s in self.cameras)

    def validate(self) -> None:
        """Raise InvalidProblemError on any documented invariant violation."""
        if not self.cameras:
            raise InvalidProblemError("problem has no cameras")
        seen: set[str] = set()
        for series in self.cameras:
            if series.camera_id in seen:
                raise InvalidProblemError(f"duplicate camera_id '{series.camera_id}'")
            seen.add(series.camera_id)
            if len(series) < MIN_MEASUREMENTS:
                raise InvalidProblemError(
                    f"camera '{series.camera_id}' has {len(series)} measurements, "
                    f"needs at least {MIN_MEASUREMENTS}"
                )


@dataclass(frozen=True)
class Diagnostics:
    smallest_singular_value: float
    second_smallest: float
    rotation_residual_deg: float
    translation_residual_m: float


@dataclass(frozen=True)
class Solution:
    """Estimated shared pose y and per-camera poses x (keyed by camera_id).

    For eye-to-base problems y is the marker-to-target transform and x[j] the
    base-to-camera transform; for eye-on-hand problems y is the base-to-target
    transform and x[j] the hand-to-camera transform. diagnostics is None for
    externally supplied estimates (e.g. ground-truth files).
    """

    y: Pose
    x: dict[str, Pose]
    diagnostics: Diagnostics | None = None


@dataclass(frozen=True)
class GroundTruth:
    """Same shape as Solution minus diagnostics; produced by the synthetic rig."""

    y: Pose
    x: dict[str, Pose]


# ---------------------------------------------------------------------------
# canonical JSON emission

def _fmt_float(x) -> str:
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    return format(x, ".17g")


def _scalar(v) -> str:
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _fmt_float(v)
    raise TypeError(f"unsupported scalar type {type(v)!r}")


def _emit(value, buf: list[str], depth: int) -> None:
    pad = "  " * (depth + 1)
    if isinstance(value, Mapping):
        items = list(value.items())
        if not items:
            buf.append("{}")
            return
        buf.append("{\n")
        for i, (k, v) in enumerate(items):
            buf.append(f"{pad}{json.dumps(str(k))}: ")
            _emit(v, buf, depth + 1)
            buf.append(",\n" if i < len(items) - 1 else "\n")
        buf.append("  " * depth + "}")
    elif isinstance(value, (list, tuple, np.ndarray)):
        seq = list(value)
        if all(not isinstance(v, (Mapping, list, tuple, np.ndarray)) for v in seq):
            buf.append("[" + ", ".join(_scalar(v) for v in seq) + "]")
        else:
            buf.append("[\n")
            for i, v in enumerate(seq):
                buf.append(pad)
                _emit(v, buf, depth + 1)
                buf.append(",\n" if i < len(seq) - 1 else "\n")
            buf.append("  " * depth + "]")
    else:
        buf.append(_scalar(value))


def dumps_canonical(value) -> str:
    """Serialize to canonical JSON text (deterministic bytes for equal data)."""
    buf: list[str] = []
    _emit(value, buf, 0)
    buf.append("\n")
    return "".join(buf)


# ---------------------------------------------------------------------------
# pose <-> JSON object

def pose_to_obj(pose: Pose) -> dict:
    return {"q": matrix_to_quat(pose.r).tolist(), "t": pose.t.tolist()}


def _check_vector(raw, length: int, where: str) -> np.ndarray:
    try:
        v = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise InvalidProblemError(f"{where}: expected a numeric {length}-vector") from None
    if v.shape != (length,):
        raise InvalidProblemError(f"{where}: expected a {length}-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidProblemError(f"{where}: entries must be finite")
    return v


def pose_from_obj(obj, where: str) -> Pose:
    """Decode a pose given as {"q", "t"} (unit quaternion) or {"m"} (4x4 row-major).

    Rotations within LOAD_ORTHO_TOL of orthonormal are re-orthonormalized;
    anything beyond that tolerance, or with negative determinant, is rejected.
    """
    if not isinstance(obj, Mapping):
        raise InvalidProblemError(f"{where}: pose must be an object")
    if "m" in obj:
        m = np.asarray(obj["m"], dtype=float)
        if m.shape == (16,):
            m = m.reshape(4, 4)
        if m.shape != (4, 4):
            raise InvalidProblemError(f"{where}: matrix pose must be 4x4, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidProblemError(f"{where}: entries must be finite")
        if not np.allclose(m[3], [0.0, 0.0, 0.0, 1.0], atol=1e-9):
            raise InvalidProblemError(f"{where}: bottom row must be (0, 0, 0, 1)")
        r, t = m[:3, :3], m[:3, 3]
        det = np.linalg.det(r)
        if det <= 0.0:
            raise InvalidProblemError(f"{where}: rotation has determinant {det:.6f}, not +1")
        if rotation_defect(r) > LOAD_ORTHO_TOL or abs(det - 1.0) > LOAD_ORTHO_TOL:
            raise InvalidProblemError(
                f"{where}: rotation block is not orthonormal within {LOAD_ORTHO_TOL:g} "
                f"(defect={rotation_defect(r):.3e}, det={det:.6f})"
            )
        return Pose(project_to_so3(r), t)
    if "q" not in obj or "t" not in obj:
        raise InvalidProblemError(f"{where}: pose needs 'q' and 't' (or 'm') fields")
    q = _check_vector(obj["q"], 4, f"{where}.q")
    t = _check_vector(obj["t"], 3, f"{where}.t")
    norm = np.linalg.norm(q)
    if abs(norm - 1.0) > LOAD_ORTHO_TOL:
        raise InvalidProblemError(
            f"{where}: quaternion norm {norm:.8f} is not 1 within {LOAD_ORTHO_TOL:g}"
        )
    return Pose(quat_to_matrix(q), t)


# ---------------------------------------------------------------------------
# problem files

def problem_to_obj(problem: CalibrationProblem) -> dict:
    problem.validate()
    return {
        "direction": problem.direction.value,
        "cameras": [
            {
                "camera_id": series.camera_id,
                "measurements": [
                    {"a": pose_to_obj(m.a), "b": pose_to_obj(m.b)} for m in series.measurements
                ],
            }
            for series in problem.sorted_cameras()
        ],
    }


def problem_from_obj(obj) -> CalibrationProblem:
    if not isinstance(obj, Mapping):
        raise InvalidProblemError("problem file must contain a JSON object at top level")
    try:
        direction = Direction(obj.get("direction"))
    except ValueError:
        raise InvalidProblemError(
            f"direction must be one of {[d.value for d in Direction]}, "
            f"got {obj.get('direction')!r}"
        ) from None
    raw_cameras = obj.get("cameras")
    if not isinstance(raw_cameras, list):
        raise InvalidProblemError("'cameras' must be a list")
    cameras = []
    for ci, raw in enumerate(raw_cameras):
        if not isinstance(raw, Mapping):
            raise InvalidProblemError(f"cameras[{ci}] must be an object")
        cid = raw.get("camera_id")
        if not isinstance(cid, str) or not cid:
            raise InvalidProblemError(f"cameras[{ci}] needs a non-empty string camera_id")
        raw_ms = raw.get("measurements")
        if not isinstance(raw_ms, list):
            raise InvalidProblemError(f"camera '{cid}': 'measurements' must be a list")
        pairs = []
        for i, raw_m in enumerate(raw_ms):
            if not isinstance(raw_m, Mapping) or "a" not in raw_m or "b" not in raw_m:
                raise InvalidProblemError(
                    f"camera '{cid}' measurement {i}: needs 'a' and 'b' poses"
                )
            a = pose_from_obj(raw_m["a"], f"camera '{cid}' measurement {i} pose 'a'")
            b = pose_from_obj(raw_m["b"], f"camera '{cid}' measurement {i} pose 'b'")
            pairs.append(MeasurementPair(a=a, b=b, index=i))
        cameras.append(CameraSeries(camera_id=cid, measurements=tuple(pairs)))
    problem = CalibrationProblem(cameras=tuple(cameras), direction=direction)
    problem.validate()
    return problem


def _read_json(path) -> object:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from None


def load_problem(path) -> CalibrationProblem:
    """Load and validate a dataset file; see module docstring for the schema."""
    return problem_from_obj(_read_json(path))


def save_problem(problem: CalibrationProblem, path) -> None:
    """Write a problem in canonical form (validates first, refuses bad data)."""
    Path(path).write_text(dumps_canonical(problem_to_obj(problem)), encoding="utf-8")


# ---------------------------------------------------------------------------
# solution / ground-truth files

def solution_to_obj(
    solution: Solution | GroundTruth,
    relative_extrinsics: Mapping[str, Pose] | None = None,
) -> dict:
    if not solution.x:
        raise InvalidProblemError("solution has no per-camera poses")
    obj: dict = {
        "y": pose_to_obj(solution.y),
        "x": {cid: pose_to_obj(solution.x[cid]) for cid in sorted(solution.x)},
    }
    diagnostics = getattr(solution, "diagnostics", None)
    if diagnostics is not None:
        obj["diagnostics"] = {
            "smallest_singular_value": diagnostics.smallest_singular_value,
            "second_smallest": diagnostics.second_smallest,
            "rotation_residual_deg": diagnostics.rotation_residual_deg,
            "translation_residual_m": diagnostics.translation_residual_m,
        }
    if relative_extrinsics is not None:
        obj["relative_extrinsics"] = {
            cid: pose_to_obj(relative_extrinsics[cid]) for cid in sorted(relative_extrinsics)
        }
    return obj


def solution_from_obj(obj) -> Solution:
    if not isinstance(obj, Mapping) or "y" not in obj or "x" not in obj:
        raise InvalidProblemError("solution file needs 'y' and 'x' fields")
    y = pose_from_obj(obj["y"], "pose 'y'")
    raw_x = obj["x"]
    if not isinstance(raw_x, Mapping) or not raw_x:
        raise InvalidProblemError("'x' must be a non-empty map of camera_id to pose")
    x = {cid: pose_from_obj(p, f"camera '{cid}' pose 'x'") for cid, p in raw_x.items()}
    diagnostics = None
    if "diagnostics" in obj:
        raw_d = obj["diagnostics"]
        try:
            diagnostics = Diagnostics(
                smallest_singular_value=float(raw_d["smallest_singular_value"]),
                second_smallest=float(raw_d["second_smallest"]),
                rotation_residual_deg=float(raw_d["rotation_residual_deg"]),
                translation_residual_m=float(raw_d["translation_residual_m"]),
            )
        except (TypeError, KeyError, ValueError):
            raise InvalidProblemError("malformed 'diagnostics' block") from None
    return Solution(y=y, x=x, diagnostics=diagnostics)


def load_solution(path) -> Solution:
    return solution_from_obj(_read_json(path))


def save_solution(
    solution: Solution,
    path,
    relative_extrinsics: Mapping[str, Pose] | None = None,
) -> None:
    Path(path).write_text(
        dumps_canonical(solution_to_obj(solution, relative_extrinsics)), encoding="utf-8"
    )


def load_ground_truth(path) -> GroundTruth:
    sol = solution_from_obj(_read_json(path))
    return GroundTruth(y=sol.y, x=sol.x)


def save_ground_truth(gt: GroundTruth, path) -> None:
    Path(path).write_text(dumps_canonical(solution_to_obj(gt)), encoding="utf-8")
