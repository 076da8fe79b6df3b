"""Closed-form joint calibration solvers.

The joint solver estimates one shared rotation plus one rotation per camera
from the nullspace of a compressed block system (18m x 9(m+1), independent of
the measurement count per camera), then recovers all translations from one
stacked least-squares problem. A per-camera single-system solver is kept as
an independent baseline, and the eye-on-hand variant reduces to the
eye-to-base path by inverting measurement pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CameraMismatchError, DegenerateInputError, DegenerateMotionError
from .geometry import Pose, devec3, kron3, project_to_so3, vec3
from .model import (
    CalibrationProblem,
    CameraSeries,
    Diagnostics,
    Direction,
    MeasurementPair,
    Solution,
)

# A singular value below this fraction of the largest counts as numerically
# zero. A second zero means the nullspace has dimension > 1 and the motion
# leaves the solution ambiguous (pure-translation or coaxial motion, or too
# few measurements). Measurement noise lifts the smallest singular value
# itself; that is misfit, not ambiguity, so the test keys on the
# second-smallest only and solves stay available across the full noise range.
RANK_REL_TOL = 1e-9

MIN_MEASUREMENTS = 3


@dataclass(frozen=True)
class RotationSystem:
    """Block system whose nullspace holds the stacked vectorized rotations.

    Column layout: the first 9 columns belong to the shared rotation, then 9
    columns per camera in sorted camera_id order. Rows: one 9-row block per
    camera carrying (n_j I | -K_j), then one per camera carrying (-L_j | n_j I).
    """

    u: np.ndarray  # (18m, 9(m+1))
    k_blocks: tuple[np.ndarray, ...]
    l_blocks: tuple[np.ndarray, ...]
    counts: tuple[int, ...]
    camera_ids: tuple[str, ...]


@dataclass(frozen=True)
class TranslationSystem:
    """Dense stacked translation system: coefficients (3N, 3(m+1)), rhs (3N,).

    Row block i of the rhs is t_a - R_y t_b for that measurement.
    """

    coefficients: np.ndarray
    rhs: np.ndarray
    camera_ids: tuple[str, ...]


def build_rotation_system(problem: CalibrationProblem) -> RotationSystem:
    """Assemble the joint rotation block system for an eye-to-base problem."""
    if problem.direction != Direction.EYE_TO_BASE:
        raise ValueError("rotation system is built in the eye-to-base form only")
    cameras = problem.sorted_cameras()
    m = len(cameras)
    u = np.zeros((18 * m, 9 * (m + 1)))
    k_blocks = []
    l_blocks = []
    counts = []
    eye9 = np.eye(9)
    for jj, series in enumerate(cameras):
        ra, _, rb, _ = series.stacked
        n = len(series)
        # sum of kron(rb_i, ra_i): out[3i+k, 3j+l] = sum_n rb[n,i,j] * ra[n,k,l]
        k = np.einsum("nij,nkl->ikjl", rb, ra).reshape(9, 9)
        l = np.einsum("nji,nlk->ikjl", rb, ra).reshape(9, 9)
        rows_k = slice(9 * jj, 9 * jj + 9)
        rows_l = slice(9 * m + 9 * jj, 9 * m + 9 * jj + 9)
        cols_x = slice(9 * (jj + 1), 9 * (jj + 2))
        u[rows_k, 0:9] = n * eye9
        u[rows_k, cols_x] = -k
        u[rows_l, 0:9] = -l
        u[rows_l, cols_x] = n * eye9
        k_blocks.append(k)
        l_blocks.append(l)
        counts.append(n)
    return RotationSystem(
        u=u,
        k_blocks=tuple(k_blocks),
        l_blocks=tuple(l_blocks),
        counts=tuple(counts),
        camera_ids=tuple(s.camera_id for s in cameras),
    )


def _check_nullspace_gap(s: np.ndarray) -> None:
    if s[-2] <= _SV_FLOOR * s[0]:
        raise DegenerateMotionError(
            "rotation nullspace has dimension > 1 (motion does not constrain the solution)",
            ratio=1.0,
        )
    ratio = float(s[-1] / s[-2])
    if ratio > NULLSPACE_RATIO_MAX:
        raise DegenerateMotionError(
            f"ambiguous rotation nullspace: singular value ratio {ratio:.4f} exceeds "
            f"{NULLSPACE_RATIO_MAX}",
            ratio=ratio,
        )


def _rotation_from_block(block: np.ndarray, label: str) -> np.ndarray:
    try:
        return project_to_so3(devec3(block))
    except DegenerateInputError as exc:
        raise DegenerateMotionError(f"nullspace block for {label} is singular: {exc}") from exc


def solve_rotations(
    problem: CalibrationProblem,
) -> tuple[np.ndarray, list[np.ndarray], np.ndarray]:
    """Estimate the shared rotation and all per-camera rotations jointly.

    Returns (r_y, [r_x per camera in sorted id order], singular values). The
    smallest right singular vector of the block system is de-vectorized, each
    block is determinant-normalized and SVD-orthogonalized onto SO(3).
    """
    for series in problem.sorted_cameras():
        if len(series) < MIN_MEASUREMENTS:
            raise DegenerateMotionError(
                f"camera '{series.camera_id}' has {len(series)} measurements; "
                f"at least {MIN_MEASUREMENTS} are required"
            )
    system = build_rotation_system(problem)
    _, s, vt = np.linalg.svd(system.u)
    _check_nullspace_gap(s)
    v = vt[-1]
    r_y = _rotation_from_block(v[0:9], "shared rotation")
    r_x = [
        _rotation_from_block(v[9 * (jj + 1) : 9 * (jj + 2)], f"camera '{cid}'")
        for jj, cid in enumerate(system.camera_ids)
    ]
    return r_y, r_x, s


def build_translation_system(
    problem: CalibrationProblem, r_y: np.ndarray
) -> TranslationSystem:
    """Materialize the dense stacked translation system (diagnostics/testing)."""
    cameras = problem.sorted_cameras()
    m = len(cameras)
    n_total = problem.n_pairs()
    coeff = np.zeros((3 * n_total, 3 * (m + 1)))
    rhs = np.zeros(3 * n_total)
    row = 0
    for jj, series in enumerate(cameras):
        ra, ta, _, tb = series.stacked
        for i in range(len(series)):
            coeff[row : row + 3, 0:3] = np.eye(3)
            coeff[row : row + 3, 3 * (jj + 1) : 3 * (jj + 2)] = -ra[i]
            rhs[row : row + 3] = ta[i] - r_y @ tb[i]
            row += 3
    return TranslationSystem(
        coefficients=coeff, rhs=rhs, camera_ids=tuple(s.camera_id for s in cameras)
    )


def solve_translations(
    problem: CalibrationProblem, r_y: np.ndarray, r_x: list[np.ndarray]
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Recover the shared translation and per-camera translations.

    Solves the normal equations of the stacked system by Cholesky
    factorization; the normal matrix is assembled blockwise so the cost per
    measurement stays a handful of 3x3 products. A rank-deficient normal
    matrix raises DegenerateMotionError (no silent regularization).
    """
    cameras = problem.sorted_cameras()
    m = len(cameras)
    if len(r_x) != m:
        raise ValueError(f"expected {m} per-camera rotations, got {len(r_x)}")
    dim = 3 * (m + 1)
    ata = np.zeros((dim, dim))
    atb = np.zeros(dim)
    n_total = 0
    for jj, series in enumerate(cameras):
        ra, ta, _, tb = series.stacked
        b_rows = ta - tb @ r_y.T
        cols = slice(3 * (jj + 1), 3 * (jj + 2))
        g = np.einsum("nij->ij", ra)
        ata[0:3, cols] = -g
        ata[cols, 0:3] = -g.T
        ata[cols, cols] = np.einsum("nij,nik->jk", ra, ra)
        atb[0:3] += b_rows.sum(axis=0)
        atb[cols] = -np.einsum("nij,ni->j", ra, b_rows)
        n_total += len(series)
    ata[0:3, 0:3] = n_total * np.eye(3)
    try:
        chol = np.linalg.cholesky(ata)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMotionError(
            f"translation normal equations are rank deficient: {exc}"
        ) from exc
    sol = np.linalg.solve(chol.T, np.linalg.solve(chol, atb))
    t_y = sol[0:3]
    t_x = [sol[3 * (jj + 1) : 3 * (jj + 2)] for jj in range(m)]
    return t_y, t_x


def _solve_eye_to_base(problem: CalibrationProblem) -> tuple[Pose, dict[str, Pose], np.ndarray]:
    r_y, r_x, s = solve_rotations(problem)
    t_y, t_x = solve_translations(problem, r_y, r_x)
    y = Pose(r_y, t_y)
    x = {
        cid: Pose(r, t)
        for cid, r, t in zip([c.camera_id for c in problem.sorted_cameras()], r_x, t_x)
    }
    return y, x, s


def solve(problem: CalibrationProblem) -> Solution:
    """Solve a validated problem in either direction.

    Eye-on-hand problems are mapped through the inverted constraint: each
    pair (a, b) is replaced by (b^-1, a^-1) and solved as eye-to-base; the
    recovered per-camera poses and shared pose are then inverted back, so
    x[j] holds the hand-to-camera transforms and y the base-to-target one.
    """
    problem.validate()
    if problem.direction == Direction.EYE_ON_HAND:
        swapped = CalibrationProblem(
            cameras=tuple(
                CameraSeries(
                    camera_id=series.camera_id,
                    measurements=tuple(
                        MeasurementPair(a=p.b.inverse(), b=p.a.inverse(), index=p.index)
                        for p in series.measurements
                    ),
                )
                for series in problem.cameras
            ),
            direction=Direction.EYE_TO_BASE,
        )
        y_int, x_int, s = _solve_eye_to_base(swapped)
        y = y_int.inverse()
        x = {cid: pose.inverse() for cid, pose in x_int.items()}
    else:
        y, x, s = _solve_eye_to_base(problem)

    from .metrics import consistency_error

    partial = Solution(y=y, x=x, diagnostics=None)
    report = consistency_error(problem, partial)
    diagnostics = Diagnostics(
        smallest_singular_value=float(s[-1]),
        second_smallest=float(s[-2]),
        rotation_residual_deg=report.e_rot,
        translation_residual_m=report.e_trans,
    )
    return Solution(y=y, x=x, diagnostics=diagnostics)


def solve_single_baseline(series: CameraSeries) -> tuple[Pose, Pose]:
    """Single-camera closed-form solver, kept independent of the joint path.

    Builds the classic 18x18 two-unknown system by direct Kronecker
    accumulation and recovers translations from the dense stacked
    least-squares problem. Returns (x, y).
    """
    n = len(series)
    if n < MIN_MEASUREMENTS:
        raise DegenerateMotionError(
            f"camera '{series.camera_id}' has {n} measurements; "
            f"at least {MIN_MEASUREMENTS} are required"
        )
    k = np.zeros((9, 9))
    l = np.zeros((9, 9))
    for pair in series.measurements:
        k += kron3(pair.b.r, pair.a.r)
        l += kron3(pair.b.r.T, pair.a.r.T)
    u = np.block([[n * np.eye(9), -k], [-l, n * np.eye(9)]])
    _, s, vt = np.linalg.svd(u)
    _check_nullspace_gap(s)
    v = vt[-1]
    r_y = _rotation_from_block(v[0:9], "shared rotation")
    r_x = _rotation_from_block(v[9:18], f"camera '{series.camera_id}'")
    coeff = np.zeros((3 * n, 6))
    rhs = np.zeros(3 * n)
    for i, pair in enumerate(series.measurements):
        coeff[3 * i : 3 * i + 3, 0:3] = np.eye(3)
        coeff[3 * i : 3 * i + 3, 3:6] = -pair.a.r
        rhs[3 * i : 3 * i + 3] = pair.a.t - r_y @ pair.b.t
    ata = coeff.T @ coeff
    try:
        chol = np.linalg.cholesky(ata)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMotionError(
            f"translation normal equations are rank deficient: {exc}"
        ) from exc
    sol = np.linalg.solve(chol.T, np.linalg.solve(chol, coeff.T @ rhs))
    return Pose(r_x, sol[3:6]), Pose(r_y, sol[0:3])


def average_y(estimates: list[Pose]) -> Pose:
    """Chordal-mean pose average: mean translation, projected mean rotation."""
    if not estimates:
        raise ValueError("cannot average an empty list of poses")
    t = np.mean([p.t for p in estimates], axis=0)
    r = project_to_so3(np.mean([p.r for p in estimates], axis=0))
    return Pose(r, t)


def relative_extrinsics(solution: Solution, reference: str) -> dict[str, Pose]:
    """Chained camera-to-reference transforms; the reference maps to identity."""
    if reference not in solution.x:
        raise CameraMismatchError(f"unknown reference camera '{reference}'")
    ref_inv = solution.x[reference].inverse()
    return {cid: ref_inv @ pose for cid, pose in solution.x.items()}
