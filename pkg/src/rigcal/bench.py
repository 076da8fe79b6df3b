"""Sweep harness for the three simulation experiments, emitting CSV.

Each sweep varies one knob (noise ratio, camera count, or measurements per
camera) around the base operating point of 4 cameras, 40 measurements each,
5% noise, runs a fixed number of seeded trials per grid value, and scores
both the joint solver and the per-camera baseline (whose shared-pose
estimates are chordal-averaged before scoring). Rows are deterministic in the
seed; degenerate trials are excluded and counted, never retried.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DegenerateMotionError
from .geometry import Pose
from .metrics import consistency_error
from .model import CalibrationProblem, GroundTruth
from .solver import average_y, solve, solve_single_baseline
from .synth import NoiseConfig, RigConfig, generate_measurements, generate_rig, perturb

JOINT_SOLVER = "joint"
BASELINE_SOLVER = "per_camera"

CSV_HEADER = "sweep_value,solver,e_rot_deg,e_trans_m,time_ms,trials,excluded"


class SweepKind(str, Enum):
    NOISE = "noise"
    CAMERAS = "cameras"
    MEASUREMENTS = "measurements"


_KIND_INDEX = {SweepKind.NOISE: 0, SweepKind.CAMERAS: 1, SweepKind.MEASUREMENTS: 2}

DEFAULT_GRIDS: dict[SweepKind, tuple] = {
    SweepKind.NOISE: (0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30),
    SweepKind.CAMERAS: (1, 2, 3, 4),
    SweepKind.MEASUREMENTS: (3, 5, 10, 20, 40),
}


@dataclass(frozen=True)
class SweepConfig:
    kind: SweepKind
    seed: int
    grid: tuple = ()
    trials: int = 100
    base_cameras: int = 4
    base_measurements: int = 40
    base_noise: float = 0.05
    # wall-clock timing is inherently nondeterministic, so it is opt-in;
    # with measure_time False the time_ms column carries 0 and identical
    # (config, seed) pairs produce byte-identical CSV
    measure_time: bool = False

    def __post_init__(self):
        kind = SweepKind(self.kind)
        object.__setattr__(self, "kind", kind)
        grid = tuple(self.grid) if self.grid else DEFAULT_GRIDS[kind]
        object.__setattr__(self, "grid", grid)
        if not grid:
            raise ValueError("sweep grid must not be empty")
        if self.trials < 1:
            raise ValueError(f"trials must be positive, got {self.trials}")
        for value in grid:
            if kind == SweepKind.NOISE and not 0.0 <= value <= 0.3:
                raise ValueError(f"noise grid values must lie in [0, 0.3], got {value}")
            if kind == SweepKind.CAMERAS and not 1 <= value <= 4:
                raise ValueError(f"camera grid values must lie in [1, 4], got {value}")
            if kind == SweepKind.MEASUREMENTS and not 3 <= value <= 40:
                raise ValueError(f"measurement grid values must lie in [3, 40], got {value}")


@dataclass(frozen=True)
class SweepRow:
    sweep_value: float | int
    solver: str
    e_rot_deg: float
    e_trans_m: float
    time_ms: float
    trials: int  # trials actually averaged
    excluded: int  # degenerate trials dropped


@dataclass(frozen=True)
class SweepReport:
    kind: SweepKind
    rows: tuple[SweepRow, ...] = field(default_factory=tuple)

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for row in self.rows:
            value = format(row.sweep_value, ".17g") if isinstance(row.sweep_value, float) else str(row.sweep_value)
            lines.append(
                f"{value},{row.solver},{format(row.e_rot_deg, '.17g')},"
                f"{format(row.e_trans_m, '.17g')},{format(row.time_ms, '.17g')},"
                f"{row.trials},{row.excluded}"
            )
        return "\n".join(lines) + "\n"


def _derived_seed(*key: int) -> int:
    return int(np.random.SeedSequence(key).generate_state(1, np.uint64)[0])


def _trial_problem(config: SweepConfig, value_idx: int, trial: int) -> CalibrationProblem:
    value = config.grid[value_idx]
    kind = config.kind
    m = int(value) if kind == SweepKind.CAMERAS else config.base_cameras
    n = int(value) if kind == SweepKind.MEASUREMENTS else config.base_measurements
    ratio = float(value) if kind == SweepKind.NOISE else config.base_noise
    kind_idx = _KIND_INDEX[kind]
    rig_seed = _derived_seed(config.seed, kind_idx, value_idx, trial, 0)
    meas_seed = _derived_seed(config.seed, kind_idx, value_idx, trial, 1)
    noise_seed = _derived_seed(config.seed, kind_idx, value_idx, trial, 2)
    gt = generate_rig(RigConfig(camera_count=m, seed=rig_seed))
    problem = generate_measurements(gt, n, meas_seed)
    return perturb(problem, NoiseConfig(ratio=ratio, seed=noise_seed))


def _run_joint(problem: CalibrationProblem) -> tuple[float, float, float]:
    t0 = time.perf_counter()
    solution = solve(problem)
    elapsed_ms = (time.perf_counter() - t0) * 1e3
    d = solution.diagnostics
    return d.rotation_residual_deg, d.translation_residual_m, elapsed_ms


def _run_baseline(problem: CalibrationProblem) -> tuple[float, float, float]:
    t0 = time.perf_counter()
    x: dict[str, Pose] = {}
    y_estimates = []
    for series in problem.sorted_cameras():
        pose_x, pose_y = solve_single_baseline(series)
        x[series.camera_id] = pose_x
        y_estimates.append(pose_y)
    estimate = GroundTruth(y=average_y(y_estimates), x=x)
    elapsed_ms = (time.perf_counter() - t0) * 1e3
    report = consistency_error(problem, estimate)
    return report.e_rot, report.e_trans, elapsed_ms


def run_sweep(config: SweepConfig) -> SweepReport:
    """Run all trials for every grid value and return averaged rows.

    A trial that raises DegenerateMotionError for one solver is excluded from
    that solver's averages and counted in its row's excluded column.
    """
    rows = []
    for value_idx, value in enumerate(config.grid):
        sums = {JOINT_SOLVER: [0.0, 0.0, 0.0, 0], BASELINE_SOLVER: [0.0, 0.0, 0.0, 0]}
        excluded = {JOINT_SOLVER: 0, BASELINE_SOLVER: 0}
        for trial in range(config.trials):
            problem = _trial_problem(config, value_idx, trial)
            for name, runner in ((JOINT_SOLVER, _run_joint), (BASELINE_SOLVER, _run_baseline)):
                try:
                    e_rot, e_trans, elapsed_ms = runner(problem)
                except DegenerateMotionError:
                    excluded[name] += 1
                    continue
                acc = sums[name]
                acc[0] += e_rot
                acc[1] += e_trans
                acc[2] += elapsed_ms
                acc[3] += 1
        for name in (JOINT_SOLVER, BASELINE_SOLVER):
            e_rot_sum, e_trans_sum, time_sum, count = sums[name]
            rows.append(
                SweepRow(
                    sweep_value=value,
                    solver=name,
                    e_rot_deg=e_rot_sum / count if count else float("nan"),
                    e_trans_m=e_trans_sum / count if count else float("nan"),
                    time_ms=(time_sum / count if count else 0.0) if config.measure_time else 0.0,
                    trials=count,
                    excluded=excluded[name],
                )
            )
    rows.sort(key=lambda r: (r.sweep_value, r.solver))
    return SweepReport(kind=config.kind, rows=tuple(rows))


def time_solver(problem: CalibrationProblem, repetitions: int = 10) -> float:
    """Median wall-clock milliseconds of solve() alone over >= 10 repetitions."""
    repetitions = max(int(repetitions), 10)
    samples = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        solve(problem)
        samples.append((time.perf_counter() - t0) * 1e3)
    return statistics.median(samples)
