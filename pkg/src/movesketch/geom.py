"""Core 3D math: vectors, quaternions, poses, and similarity transforms.

Conventions, used everywhere in this package:

* right-handed coordinates, Y up, meters and radians
* rotation matrices are row-major 3x3, quaternions are (w, x, y, z)
* a similarity transform maps a point p to ``scale * R @ p + translation``

All types here are immutable values and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

ORTHONORMAL_TOL = 1e-9

# Near-antipodal quaternion interpolation falls back to normalized lerp.
SLERP_LERP_DOT = 0.9995


@dataclass(frozen=True)
class Vec3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, other: Vec3) -> Vec3:
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: Vec3) -> Vec3:
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __mul__(self, s: float) -> Vec3:
        return Vec3(self.x * s, self.y * s, self.z * s)

    __rmul__ = __mul__

    def __neg__(self) -> Vec3:
        return Vec3(-self.x, -self.y, -self.z)

    def dot(self, other: Vec3) -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: Vec3) -> Vec3:
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def norm_sq(self) -> float:
        return self.dot(self)

    def distance(self, other: Vec3) -> float:
        return (self - other).norm()

    def normalized(self) -> Vec3:
        n = self.norm()
        if n == 0.0:
            raise ZeroDivisionError("cannot normalize zero vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def lerp(self, other: Vec3, u: float) -> Vec3:
        return Vec3(
            self.x + (other.x - self.x) * u,
            self.y + (other.y - self.y) * u,
            self.z + (other.z - self.z) * u,
        )

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    def to_list(self) -> list[float]:
        return [float(self.x), float(self.y), float(self.z)]

    @staticmethod
    def from_seq(seq: Sequence[float] | Iterable[float]) -> Vec3:
        x, y, z = seq
        return Vec3(float(x), float(y), float(z))

    @staticmethod
    def zero() -> Vec3:
        return Vec3(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Quat:
    """Unit quaternion (w, x, y, z)."""

    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @staticmethod
    def identity() -> Quat:
        return Quat(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis: Vec3, angle: float) -> Quat:
        a = axis.normalized()
        h = 0.5 * angle
        s = math.sin(h)
        return Quat(math.cos(h), a.x * s, a.y * s, a.z * s)

    @staticmethod
    def from_seq(seq: Sequence[float]) -> Quat:
        w, x, y, z = seq
        return Quat(float(w), float(x), float(y), float(z)).normalized()

    def to_list(self) -> list[float]:
        return [float(self.w), float(self.x), float(self.y), float(self.z)]

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def normalized(self) -> Quat:
        n = self.norm()
        if n == 0.0:
            raise ZeroDivisionError("cannot normalize zero quaternion")
        return Quat(self.w / n, self.x / n, self.y / n, self.z / n)

    def conjugate(self) -> Quat:
        return Quat(self.w, -self.x, -self.y, -self.z)

    # For unit quaternions inverse == conjugate.
    inverse = conjugate

    def dot(self, other: Quat) -> float:
        return self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z

    def __mul__(self, other: Quat) -> Quat:
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quat(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def rotate(self, v: Vec3) -> Vec3:
        # v' = v + 2 w (q_v x v) + 2 q_v x (q_v x v)
        qx, qy, qz = self.x, self.y, self.z
        tx = 2.0 * (qy * v.z - qz * v.y)
        ty = 2.0 * (qz * v.x - qx * v.z)
        tz = 2.0 * (qx * v.y - qy * v.x)
        return Vec3(
            v.x + self.w * tx + (qy * tz - qz * ty),
            v.y + self.w * ty + (qz * tx - qx * tz),
            v.z + self.w * tz + (qx * ty - qy * tx),
        )

    def to_matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ],
            dtype=np.float64,
        )

    @staticmethod
    def from_matrix(m: np.ndarray) -> Quat:
        """Shepperd's method; ``m`` must be a proper rotation matrix."""
        m = np.asarray(m, dtype=np.float64)
        t = m[0, 0] + m[1, 1] + m[2, 2]
        if t > 0.0:
            s = math.sqrt(t + 1.0) * 2.0
            q = Quat(0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s)
        elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
            s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
            q = Quat((m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s)
        elif m[1, 1] >= m[2, 2]:
            s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
            q = Quat((m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s)
        else:
            s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
            q = Quat((m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s)
        return q.normalized()

    @staticmethod
    def shortest_arc(a: Vec3, b: Vec3) -> Quat:
        """Quaternion rotating unit vector ``a`` onto unit vector ``b``."""
        d = a.dot(b)
        if d < -1.0 + 1e-12:
            # Opposite directions: pick any perpendicular axis deterministically.
            axis = Vec3(1.0, 0.0, 0.0).cross(a)
            if axis.norm_sq() < 1e-12:
                axis = Vec3(0.0, 1.0, 0.0).cross(a)
            return Quat.from_axis_angle(axis, math.pi)
        c = a.cross(b)
        return Quat(1.0 + d, c.x, c.y, c.z).normalized()

    def is_finite(self) -> bool:
        return all(math.isfinite(c) for c in (self.w, self.x, self.y, self.z))


def slerp(q0: Quat, q1: Quat, u: float) -> Quat:
    """Shortest-arc spherical interpolation; unit inputs, unit output."""
    d = q0.dot(q1)
    if d < 0.0:
        q1 = Quat(-q1.w, -q1.x, -q1.y, -q1.z)
        d = -d
    if d > SLERP_LERP_DOT:
        return Quat(
            q0.w + (q1.w - q0.w) * u,
            q0.x + (q1.x - q0.x) * u,
            q0.y + (q1.y - q0.y) * u,
            q0.z + (q1.z - q0.z) * u,
        ).normalized()
    theta = math.acos(min(1.0, d))
    s = math.sin(theta)
    w0 = math.sin((1.0 - u) * theta) / s
    w1 = math.sin(u * theta) / s
    return Quat(
        w0 * q0.w + w1 * q1.w,
        w0 * q0.x + w1 * q1.x,
        w0 * q0.y + w1 * q1.y,
        w0 * q0.z + w1 * q1.z,
    ).normalized()


@dataclass(frozen=True)
class Pose:
    """Rigid pose: a position plus a unit orientation."""

    position: Vec3 = Vec3()
    orientation: Quat = Quat()

    @staticmethod
    def identity() -> Pose:
        return Pose(Vec3.zero(), Quat.identity())

    def compose(self, local: Pose) -> Pose:
        """world = self o local (apply ``local`` in this pose's frame)."""
        return Pose(
            self.position + self.orientation.rotate(local.position),
            self.orientation * local.orientation,
        )

    def inverse(self) -> Pose:
        qi = self.orientation.conjugate()
        return Pose(qi.rotate(-self.position), qi)

    def transform_point(self, p: Vec3) -> Vec3:
        return self.position + self.orientation.rotate(p)

    def is_finite(self) -> bool:
        return self.position.is_finite() and self.orientation.is_finite()


class NonRotation(ValueError):
    """Matrix failed the orthonormal / det +1 check."""


@dataclass(frozen=True)
class SimilarityTransform:
    """x' = scale * rotation @ x + translation, with scale > 0 and a proper rotation."""

    scale: float
    rotation: np.ndarray
    translation: Vec3

    def __post_init__(self) -> None:
        rot = np.array(self.rotation, dtype=np.float64)
        if rot.shape != (3, 3):
            raise NonRotation(f"rotation must be 3x3, got {rot.shape}")
        if not np.all(np.isfinite(rot)):
            raise NonRotation("rotation has non-finite entries")
        if np.max(np.abs(rot.T @ rot - np.eye(3))) > ORTHONORMAL_TOL:
            raise NonRotation("rotation is not orthonormal within 1e-9")
        if abs(np.linalg.det(rot) - 1.0) > ORTHONORMAL_TOL:
            raise NonRotation("rotation determinant is not +1 within 1e-9")
        if not (math.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError(f"scale must be finite and > 0, got {self.scale}")
        rot.setflags(write=False)
        object.__setattr__(self, "rotation", rot)

    @staticmethod
    def identity() -> SimilarityTransform:
        return SimilarityTransform(1.0, np.eye(3), Vec3.zero())

    def apply(self, p: Vec3) -> Vec3:
        r = self.rotation
        x = r[0, 0] * p.x + r[0, 1] * p.y + r[0, 2] * p.z
        y = r[1, 0] * p.x + r[1, 1] * p.y + r[1, 2] * p.z
        z = r[2, 0] * p.x + r[2, 1] * p.y + r[2, 2] * p.z
        k = self.scale
        return Vec3(k * x + self.translation.x, k * y + self.translation.y, k * z + self.translation.z)

    def apply_many(self, points: np.ndarray) -> np.ndarray:
        """Vectorized apply for an (n, 3) array."""
        pts = np.asarray(points, dtype=np.float64)
        return self.scale * pts @ self.rotation.T + self.translation.to_array()


def apply_similarity(t: SimilarityTransform, p: Vec3) -> Vec3:
    return t.apply(p)


def compose(outer: SimilarityTransform, inner: SimilarityTransform) -> SimilarityTransform:
    """compose(T2, T1) applies T1 first: result(p) = T2(T1(p))."""
    return SimilarityTransform(
        outer.scale * inner.scale,
        outer.rotation @ inner.rotation,
        outer.apply(inner.translation),
    )


def invert(t: SimilarityTransform) -> SimilarityTransform:
    rot_t = t.rotation.T.copy()
    b = t.translation
    bx = -(rot_t[0, 0] * b.x + rot_t[0, 1] * b.y + rot_t[0, 2] * b.z) / t.scale
    by = -(rot_t[1, 0] * b.x + rot_t[1, 1] * b.y + rot_t[1, 2] * b.z) / t.scale
    bz = -(rot_t[2, 0] * b.x + rot_t[2, 1] * b.y + rot_t[2, 2] * b.z) / t.scale
    return SimilarityTransform(1.0 / t.scale, rot_t, Vec3(bx, by, bz))
