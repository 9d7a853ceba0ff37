"""Quaternion algebra for attitude representation.

Quaternions are stored scalar-first, ``(w, x, y, z)``, and a unit quaternion
``q`` maps body-frame vectors into the inertial frame via ``q ⊗ v ⊗ q*``.
Angle-axis vectors are plain ``(3,)`` numpy arrays holding ``θ·axis``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

# 1 - w**2 below this switches to the first-order angle-axis limit
SMALL_ANGLE_THRESHOLD = 1e-10


class Quaternion(NamedTuple):
    w: float
    x: float
    y: float
    z: float

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    @classmethod
    def from_array(cls, a) -> Quaternion:
        w, x, y, z = (float(c) for c in a)
        return cls(w, x, y, z)


IDENTITY = Quaternion(1.0, 0.0, 0.0, 0.0)


def norm(q: Quaternion) -> float:
    return math.sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z)


def conjugate(q: Quaternion) -> Quaternion:
    return Quaternion(q.w, -q.x, -q.y, -q.z)


def multiply(p: Quaternion, q: Quaternion) -> Quaternion:
    """Hamilton product ``p ⊗ q``."""
    pw, px, py, pz = p
    qw, qx, qy, qz = q
    return Quaternion(
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy - px * qz + py * qw + pz * qx,
        pw * qz + px * qy - py * qx + pz * qw,
    )


def normalize(q: Quaternion) -> Quaternion:
    n = norm(q)
    if n == 0.0:
        raise ValueError("cannot normalize the zero quaternion")
    return Quaternion(q.w / n, q.x / n, q.y / n, q.z / n)


def canonicalize(q: Quaternion) -> Quaternion:
    """Pick the representative with ``w >= 0`` (short-way rotation)."""
    if q.w < 0.0:
        return Quaternion(-q.w, -q.x, -q.y, -q.z)
    return q


def error_quaternion(p: Quaternion, q: Quaternion) -> Quaternion:
    """Relative rotation ``p ⊗ q*``, canonicalized to ``w >= 0``."""
    return canonicalize(multiply(p, conjugate(q)))


def to_angle_axis(q: Quaternion) -> np.ndarray:
    """Convert a unit quaternion to the angle-axis vector ``θ·axis``.

    The angle is ``2·acos(w)`` after canonicalization, so its magnitude never
    exceeds π. Near the identity the axis is ill-defined and the first-order
    limit ``2·(x, y, z)`` is returned instead.
    """
    q = canonicalize(q)
    s2 = q.x * q.x + q.y * q.y + q.z * q.z
    if s2 < SMALL_ANGLE_THRESHOLD:
        return 2.0 * np.array([q.x, q.y, q.z])
    s = math.sqrt(s2)
    # atan2 equals acos(w) for unit q but keeps precision near w = 1
    theta = 2.0 * math.atan2(s, q.w)
    return (theta / s) * np.array([q.x, q.y, q.z])


def from_angle_axis(v) -> Quaternion:
    v = np.asarray(v, dtype=float)
    theta = float(np.linalg.norm(v))
    half = 0.5 * theta
    if theta < 1e-12:
        scale = 0.5
    else:
        scale = math.sin(half) / theta
    return Quaternion(math.cos(half), scale * v[0], scale * v[1], scale * v[2])


def rotate_vector(q: Quaternion, v) -> np.ndarray:
    """Vector part of ``q ⊗ (0, v) ⊗ q*`` for a unit quaternion."""
    w, x, y, z = q
    vx, vy, vz = (float(c) for c in v)
    # t = 2 (u × v)
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return np.array([
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    ])


def to_rotation_matrix(q: Quaternion) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def from_euler(roll: float, pitch: float, yaw: float) -> Quaternion:
    """Quaternion from Z-Y-X intrinsic Euler angles in radians."""
    cr, sr = math.cos(0.5 * roll), math.sin(0.5 * roll)
    cp, sp = math.cos(0.5 * pitch), math.sin(0.5 * pitch)
    cy, sy = math.cos(0.5 * yaw), math.sin(0.5 * yaw)
    return Quaternion(
        cy * cp * cr + sy * sp * sr,
        cy * cp * sr - sy * sp * cr,
        cy * sp * cr + sy * cp * sr,
        sy * cp * cr - cy * sp * sr,
    )


def to_euler(q: Quaternion) -> np.ndarray:
    """Z-Y-X intrinsic Euler angles ``(roll, pitch, yaw)`` in radians.

    Used for reporting only; the control path never touches Euler angles.
    """
    w, x, y, z = q
    roll = math.atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    sinp = max(-1.0, min(1.0, 2.0 * (w * y - z * x)))
    pitch = math.asin(sinp)
    yaw = math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return np.array([roll, pitch, yaw])
