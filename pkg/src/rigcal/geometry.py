"""SO(3)/SE(3) primitives and small dense linear-algebra kernels.

Rotations are plain 3x3 float64 arrays, poses are frozen dataclasses, and
every operation is a pure function on immutable values, so concurrent use
needs no synchronization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError

# A matrix counts as a rotation when ||R^T R - I||_F and |det R - 1| stay below this.
ROTATION_TOL = 1e-9

# Inputs with |det| below this cannot be meaningfully normalized onto SO(3).
_DET_FLOOR = 1e-12


def kron3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two 3x3 matrices.

    Block structure: out[3r:3r+3, 3c:3c+3] = a[r, c] * b, which gives the
    identity kron3(a, b) @ vec3(m) = vec3(b @ m @ a.T) under column-major vec.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (3, 3) or b.shape != (3, 3):
        raise ValueError(f"kron3 expects 3x3 inputs, got {a.shape} and {b.shape}")
    return np.kron(a, b)


def vec3(m: np.ndarray) -> np.ndarray:
    """Column-major stacking of a 3x3 matrix into a 9-vector."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"vec3 expects a 3x3 matrix, got {m.shape}")
    return m.reshape(9, order="F").copy()


def devec3(v: np.ndarray) -> np.ndarray:
    """Inverse of vec3: rebuild the 3x3 matrix from a column-major 9-vector."""
    v = np.asarray(v, dtype=float)
    if v.shape != (9,):
        raise ValueError(f"devec3 expects a 9-vector, got {v.shape}")
    return v.reshape((3, 3), order="F").copy()


def rotation_angle(r: np.ndarray) -> float | np.ndarray:
    """Rotation angle in degrees, in [0, 180]; accepts stacked (..., 3, 3) input.

    Evaluated as atan2(||skew part|| , (trace - 1) / 2). On SO(3) this equals
    acos(clamp((trace - 1) / 2, -1, 1)) but keeps full float64 resolution near
    0 and 180 degrees, where the acos form bottoms out around sqrt(eps)
    (~1e-6 deg); the noise-free exactness checks need angles far below that.
    """
    r = np.asarray(r, dtype=float)
    if r.shape[-2:] != (3, 3):
        raise ValueError(f"rotation_angle expects (..., 3, 3) input, got {r.shape}")
    cos_term = 0.5 * (np.trace(r, axis1=-2, axis2=-1) - 1.0)
    d = r - np.swapaxes(r, -1, -2)
    sin_term = 0.5 * np.sqrt(d[..., 2, 1] ** 2 + d[..., 0, 2] ** 2 + d[..., 1, 0] ** 2)
    angle = np.degrees(np.arctan2(sin_term, cos_term))
    return float(angle) if angle.ndim == 0 else angle


def rotation_about_axis(axis: np.ndarray, angle_rad: float) -> np.ndarray:
    """Rotation matrix for a right-handed turn of angle_rad about the given axis."""
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("rotation axis must be nonzero")
    x, y, z = axis / n
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle_rad) * k + (1.0 - np.cos(angle_rad)) * (k @ k)


def project_to_so3(m: np.ndarray) -> np.ndarray:
    """Nearest proper rotation to an invertible 3x3 matrix.

    The input is first scale-normalized by sign(det) * |det|**(-1/3) so the
    result has determinant +1, then SVD-orthogonalized with the reflection
    fix R = U diag(1, 1, det(U V^T)) V^T.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"project_to_so3 expects a 3x3 matrix, got {m.shape}")
    d = np.linalg.det(m)
    if not np.isfinite(d) or abs(d) < _DET_FLOOR:
        raise DegenerateInputError(f"matrix is numerically singular (det={d:.3e})")
    m = np.sign(d) * abs(d) ** (-1.0 / 3.0) * m
    u, _, vt = np.linalg.svd(m)
    flip = np.sign(np.linalg.det(u @ vt))
    return (u * np.array([1.0, 1.0, flip])) @ vt


def rotation_defect(r: np.ndarray) -> float:
    """Frobenius norm of R^T R - I (0 for an exactly orthonormal matrix)."""
    r = np.asarray(r, dtype=float)
    return float(np.linalg.norm(r.T @ r - np.eye(3)))


def is_rotation(r: np.ndarray, tol: float = ROTATION_TOL) -> bool:
    """True when r is orthonormal with determinant +1 within tol."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        return False
    return rotation_defect(r) <= tol and abs(np.linalg.det(r) - 1.0) <= tol


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix from a (w, x, y, z) quaternion; normalizes the input."""
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise ValueError(f"expected a 4-vector quaternion, got {q.shape}")
    n = np.linalg.norm(q)
    if n == 0.0:
        raise ValueError("zero quaternion has no orientation")
    w, x, y, z = q / n
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def matrix_to_quat(r: np.ndarray) -> np.ndarray:
    """Unit (w, x, y, z) quaternion for a rotation matrix, in canonical sign.

    Uses the max-pivot (Shepperd) branch selection for stability across the
    whole rotation range. Canonical sign: w > 0, with ties broken so the
    first nonzero of (x, y, z) is positive, which makes serialization
    deterministic.
    """
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ValueError(f"expected a 3x3 rotation matrix, got {r.shape}")
    tr = np.trace(r)
    if tr > 0.0:
        s = 2.0 * np.sqrt(tr + 1.0)
        q = np.array(
            [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s]
        )
    elif r[0, 0] >= r[1, 1] and r[0, 0] >= r[2, 2]:
        s = 2.0 * np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2])
        q = np.array(
            [(r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s]
        )
    elif r[1, 1] >= r[2, 2]:
        s = 2.0 * np.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2])
        q = np.array(
            [(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s]
        )
    else:
        s = 2.0 * np.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1])
        q = np.array(
            [(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s]
        )
    q = q / np.linalg.norm(q)
    nonzero = np.nonzero(q)[0]
    if nonzero.size and q[nonzero[0]] < 0.0:
        q = -q
    return q


@dataclass(frozen=True)
class Pose:
    """Rigid transformation p_out = r @ p_in + t, with t in meters."""

    r: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        t = np.array(self.t, dtype=float)
        if r.shape != (3, 3):
            raise ValueError(f"pose rotation must be 3x3, got {r.shape}")
        if t.shape != (3,):
            raise ValueError(f"pose translation must be a 3-vector, got {t.shape}")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise ValueError("pose entries must be finite")
        if not is_rotation(r):
            raise ValueError(
                f"pose rotation violates SO(3) invariants "
                f"(defect={rotation_defect(r):.3e}, det={np.linalg.det(r):.6f})"
            )
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "t", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Pose":
        """Build from a 4x4 homogeneous matrix; the bottom row must be (0, 0, 0, 1)."""
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got {m.shape}")
        if not np.allclose(m[3], [0.0, 0.0, 0.0, 1.0], atol=1e-9):
            raise ValueError(f"bottom row must be (0, 0, 0, 1), got {m[3]}")
        return cls(m[:3, :3], m[:3, 3])

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.r
        m[:3, 3] = self.t
        return m

    def compose(self, other: "Pose") -> "Pose":
        """self after other: (self.compose(other))(p) = self(other(p))."""
        return Pose(self.r @ other.r, self.r @ other.t + self.t)

    def __matmul__(self, other: "Pose") -> "Pose":
        return self.compose(other)

    def inverse(self) -> "Pose":
        rt = self.r.T
        return Pose(rt, -(rt @ self.t))
