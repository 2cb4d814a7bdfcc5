"""Homogeneous transforms, quaternions, dual quaternions and camera matrices.

Conventions: matrices are ``(4, 4)`` float64 numpy arrays indexed
``[row, col]`` and act on column vectors (``M @ p``). Applying ``A`` first and
then ``B`` is written ``B @ A``. Eye space is right handed with the camera
looking down ``-z``; projections map depth into the GL clip range ``[-1, 1]``.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import (
    DecompositionError,
    DegenerateAxis,
    DegenerateBasis,
    InvalidFrustum,
    NonUnitQuaternion,
    SingularMatrix,
)

AXIS_EPS = 1e-12
UNIT_QUAT_TOL = 1e-6
SINGULAR_DET = 1e-12


def vec3(x, y=None, z=None) -> np.ndarray:
    if y is None:
        v = np.asarray(x, dtype=np.float64).reshape(3)
        return v.copy()
    return np.array([x, y, z], dtype=np.float64)


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n < AXIS_EPS:
        raise DegenerateAxis(f"cannot normalize near-zero vector {v!r}")
    return v / n


def identity() -> np.ndarray:
    return np.eye(4)


def mat_translate(t) -> np.ndarray:
    t = vec3(t)
    m = np.eye(4)
    m[:3, 3] = t
    return m


def mat_scale(s) -> np.ndarray:
    s = np.broadcast_to(np.asarray(s, dtype=np.float64), (3,))
    m = np.eye(4)
    m[0, 0], m[1, 1], m[2, 2] = s
    return m


def mat_rotate(axis, angle: float) -> np.ndarray:
    """Right-handed rotation of ``angle`` radians about ``axis``."""
    return quat_to_mat(quat_from_axis_angle(axis, angle))


def apply_point(m: np.ndarray, p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    return p @ m[:3, :3].T + m[:3, 3]


def apply_direction(m: np.ndarray, d) -> np.ndarray:
    return np.asarray(d, dtype=np.float64) @ m[:3, :3].T


def invert(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    det = np.linalg.det(m)
    if not np.isfinite(det) or abs(det) < SINGULAR_DET:
        raise SingularMatrix(f"matrix is singular (det={det:g})")
    return np.linalg.inv(m)


def normal_matrix(model: np.ndarray) -> np.ndarray:
    """Inverse-transpose of the upper 3x3 block, for transforming normals."""
    (a, b, c), (d, e, f), (g, h, i) = np.asarray(model, dtype=np.float64)[:3, :3].tolist()
    # cofactor matrix over the determinant; explicit because this runs once per draw
    cof = np.array([
        [e * i - f * h, f * g - d * i, d * h - e * g],
        [c * h - b * i, a * i - c * g, b * g - a * h],
        [b * f - c * e, c * d - a * f, a * e - b * d],
    ])
    det = a * cof[0, 0] + b * cof[0, 1] + c * cof[0, 2]
    if abs(det) < SINGULAR_DET:
        raise SingularMatrix("model matrix has a singular linear part")
    return cof / det


# -- quaternions --------------------------------------------------------------


class Quaternion(NamedTuple):
    w: float
    x: float
    y: float
    z: float

    @classmethod
    def identity(cls) -> "Quaternion":
        return cls(1.0, 0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=np.float64)

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other):  # type: ignore[override]
        if isinstance(other, Quaternion):
            return quat_mul(self, other)
        return Quaternion(*(c * other for c in self))

    __rmul__ = __mul__

    def __add__(self, other):  # type: ignore[override]
        return Quaternion(*(a + b for a, b in zip(self, other)))

    def __neg__(self):
        return Quaternion(-self.w, -self.x, -self.y, -self.z)


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return Quaternion(
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_normalize(q) -> Quaternion:
    q = Quaternion(*map(float, q))
    n = q.norm()
    if n < AXIS_EPS:
        raise NonUnitQuaternion("zero quaternion")
    return Quaternion(*(c / n for c in q))


def quat_from_axis_angle(axis, angle: float) -> Quaternion:
    axis = np.asarray(axis, dtype=np.float64).reshape(3)
    n = float(np.linalg.norm(axis))
    if n < AXIS_EPS:
        raise DegenerateAxis(f"rotation axis {axis!r} is degenerate")
    h = 0.5 * angle
    s = math.sin(h) / n
    return Quaternion(math.cos(h), axis[0] * s, axis[1] * s, axis[2] * s)


def _check_unit(q: Quaternion, tol: float = UNIT_QUAT_TOL) -> None:
    if abs(q.norm() - 1.0) > tol:
        raise NonUnitQuaternion(f"|q| = {q.norm():.12g}, expected 1")


def quat_to_mat(q) -> np.ndarray:
    w, x, y, z = q
    m = np.eye(4)
    m[0, 0] = 1.0 - 2.0 * (y * y + z * z)
    m[0, 1] = 2.0 * (x * y - w * z)
    m[0, 2] = 2.0 * (x * z + w * y)
    m[1, 0] = 2.0 * (x * y + w * z)
    m[1, 1] = 1.0 - 2.0 * (x * x + z * z)
    m[1, 2] = 2.0 * (y * z - w * x)
    m[2, 0] = 2.0 * (x * z - w * y)
    m[2, 1] = 2.0 * (y * z + w * x)
    m[2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return m


def quat_from_mat(m) -> Quaternion:
    """Unit quaternion of a proper rotation matrix (Shepperd's method), w >= 0."""
    r = np.asarray(m, dtype=np.float64)[:3, :3]
    tr = r[0, 0] + r[1, 1] + r[2, 2]
    if tr > 0.0:
        s = 2.0 * math.sqrt(tr + 1.0)
        q = (0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s)
    elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
        s = 2.0 * math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2])
        q = ((r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s)
    elif r[1, 1] > r[2, 2]:
        s = 2.0 * math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2])
        q = ((r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s)
    else:
        s = 2.0 * math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1])
        q = ((r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s)
    q = quat_normalize(q)
    if q.w < 0.0:
        q = -q
    return q


def quat_angle(q0, q1) -> float:
    """Rotation angle between two unit quaternions, in [0, pi]."""
    d = abs(sum(a * b for a, b in zip(q0, q1)))
    return 2.0 * math.acos(min(1.0, d))


def quat_slerp(q0, q1, u: float) -> Quaternion:
    """Spherical interpolation along the shorter arc between unit quaternions."""
    q0 = Quaternion(*q0)
    q1 = Quaternion(*q1)
    d = sum(a * b for a, b in zip(q0, q1))
    if d < 0.0:
        q1 = -q1
        d = -d
    d = min(d, 1.0)
    theta = math.acos(d)
    if theta < 1e-6:
        return quat_normalize(q0 * (1.0 - u) + q1 * u)
    s = math.sin(theta)
    a = math.sin((1.0 - u) * theta) / s
    b = math.sin(u * theta) / s
    return quat_normalize(q0 * a + q1 * b)


def compose_trs(t, r, s: float) -> np.ndarray:
    """``T @ R @ S``: scale first, then rotate, then translate."""
    r = Quaternion(*r)
    _check_unit(r)
    if not s > 0:
        raise ValueError(f"scale must be positive, got {s}")
    return mat_translate(t) @ quat_to_mat(r) @ mat_scale(s)


def decompose_trs(m, tol: float = 1e-9) -> tuple[np.ndarray, Quaternion, float]:
    """Split a similarity transform into translation, rotation and uniform scale.

    Raises DecompositionError for shear, non-uniform scale, reflection or a
    projective bottom row.
    """
    m = np.asarray(m, dtype=np.float64)
    if not np.allclose(m[3], (0.0, 0.0, 0.0, 1.0), rtol=0.0, atol=tol):
        raise DecompositionError("bottom row is not (0, 0, 0, 1)")
    a = m[:3, :3]
    norms = np.linalg.norm(a, axis=0)
    s = float(norms.mean())
    if s < AXIS_EPS:
        raise DecompositionError("zero scale")
    if np.max(np.abs(norms - s)) > tol * max(1.0, s):
        raise DecompositionError(f"non-uniform scale {norms!r}")
    rot = a / s
    if np.max(np.abs(rot.T @ rot - np.eye(3))) > tol * 10:
        raise DecompositionError("linear part has shear")
    if np.linalg.det(rot) < 0:
        raise DecompositionError("linear part contains a reflection")
    return m[:3, 3].copy(), quat_from_mat(rot), s


# -- dual quaternions ------------------------------------------------------------


class DualQuaternion(NamedTuple):
    real: Quaternion
    dual: Quaternion


def dq_from_rt(r, t) -> DualQuaternion:
    r = Quaternion(*r)
    _check_unit(r)
    tx, ty, tz = vec3(t)
    dual = quat_mul(Quaternion(0.0, tx, ty, tz), r) * 0.5
    return DualQuaternion(r, dual)


def dq_translation(dq: DualQuaternion) -> np.ndarray:
    t = quat_mul(dq.dual, dq.real.conjugate()) * 2.0
    return np.array([t.x, t.y, t.z])


def dq_to_mat(dq: DualQuaternion) -> np.ndarray:
    _check_unit(dq.real)
    m = quat_to_mat(dq.real)
    m[:3, 3] = dq_translation(dq)
    return m


# -- camera ------------------------------------------------------------------------


def perspective(fovy: float, aspect: float, near: float, far: float) -> np.ndarray:
    if not (0.0 < fovy < math.pi) or aspect <= 0.0 or not (0.0 < near < far):
        raise InvalidFrustum(f"perspective(fovy={fovy}, aspect={aspect}, near={near}, far={far})")
    f = 1.0 / math.tan(0.5 * fovy)
    m = np.zeros((4, 4))
    m[0, 0] = f / aspect
    m[1, 1] = f
    m[2, 2] = (far + near) / (near - far)
    m[2, 3] = 2.0 * far * near / (near - far)
    m[3, 2] = -1.0
    return m


def ortho(left: float, right: float, bottom: float, top: float, near: float, far: float) -> np.ndarray:
    if not (right > left and top > bottom and far > near):
        raise InvalidFrustum(f"ortho({left}, {right}, {bottom}, {top}, {near}, {far})")
    m = np.eye(4)
    m[0, 0] = 2.0 / (right - left)
    m[1, 1] = 2.0 / (top - bottom)
    m[2, 2] = -2.0 / (far - near)
    m[0, 3] = -(right + left) / (right - left)
    m[1, 3] = -(top + bottom) / (top - bottom)
    m[2, 3] = -(far + near) / (far - near)
    return m


def lookat(eye, target, up) -> np.ndarray:
    """World-to-eye view matrix; the camera sits at ``eye`` looking at ``target``."""
    eye, target, up = vec3(eye), vec3(target), vec3(up)
    fwd = target - eye
    if np.linalg.norm(fwd) < AXIS_EPS:
        raise DegenerateBasis("eye and target coincide")
    fwd = fwd / np.linalg.norm(fwd)
    side = np.cross(fwd, up)
    if np.linalg.norm(side) < 1e-9:
        raise DegenerateBasis("up vector is parallel to the view direction")
    side = side / np.linalg.norm(side)
    new_up = np.cross(side, fwd)
    m = np.eye(4)
    m[0, :3] = side
    m[1, :3] = new_up
    m[2, :3] = -fwd
    m[:3, 3] = -(m[:3, :3] @ eye)
    return m
