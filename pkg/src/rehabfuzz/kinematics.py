"""Analytic kinematics of a shoulder-yaw / shoulder-pitch / elbow chain.

``l1`` is a vertical offset from the origin to the shoulder, ``l2`` the upper
arm and ``l3`` the forearm (to the hand). Lengths are in meters, angles in
radians.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ._accel import kernels

SNAP_EPS = 1e-12
AXIS_EPS = 1e-12

ELBOW_UP = 1
ELBOW_DOWN = -1


class KinematicsError(ValueError):
    pass


class Unreachable(KinematicsError):
    pass


class Singular(KinematicsError):
    pass


@dataclass(frozen=True)
class ArmGeometry:
    l1: float
    l2: float
    l3: float

    def __post_init__(self):
        for name in ("l2", "l3"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive length, got {v}")
        if not (math.isfinite(self.l1) and self.l1 >= 0):
            raise ValueError(f"l1 must be a finite non-negative offset, got {self.l1}")

    @property
    def reach(self) -> tuple[float, float]:
        """Inner and outer radius of the reachable shell around the shoulder."""
        return abs(self.l2 - self.l3), self.l2 + self.l3


class JointAngles(NamedTuple):
    theta1: float
    theta2: float
    theta3: float


class Point3(NamedTuple):
    x: float
    y: float
    z: float


class AngularVelocitySample(NamedTuple):
    t: float
    v: float


def wrap_angle(a: float) -> float:
    """Map an angle to (-pi, pi]."""
    r = math.remainder(a, 2.0 * math.pi)
    return math.pi if r <= -math.pi else r


def _branch_sign(elbow) -> float:
    if elbow in (ELBOW_UP, "+", "up"):
        return 1.0
    if elbow in (ELBOW_DOWN, "-", "down"):
        return -1.0
    raise ValueError(f"elbow branch must be +1/-1, '+'/'-' or 'up'/'down', got {elbow!r}")


def solve_ik(geom: ArmGeometry, target: Sequence[float], elbow=ELBOW_UP) -> JointAngles:
    x, y, z = (float(v) for v in target)
    sign = _branch_sign(elbow)
    dz = z - geom.l1
    c3 = (x * x + y * y + dz * dz - geom.l2**2 - geom.l3**2) / (2.0 * geom.l2 * geom.l3)
    if abs(c3) > 1.0 + SNAP_EPS:
        raise Unreachable(
            f"target ({x}, {y}, {z}) is outside the reachable shell "
            f"[{geom.reach[0]}, {geom.reach[1]}] (c3 = {c3:.6g})"
        )
    rho = math.hypot(x, y)
    if rho <= AXIS_EPS:
        raise Singular(f"target ({x}, {y}, {z}) lies on the shoulder axis; theta1 is undefined")
    c3 = max(-1.0, min(1.0, c3))
    s3 = sign * math.sqrt(1.0 - c3 * c3)
    theta1 = math.atan2(y, x)
    theta2 = math.atan2(dz, rho) - math.atan2(geom.l3 * s3, geom.l2 + geom.l3 * c3)
    theta3 = math.atan2(s3, c3)
    return JointAngles(wrap_angle(theta1), wrap_angle(theta2), wrap_angle(theta3))


def forward_kinematics(geom: ArmGeometry, q: Sequence[float]) -> Point3:
    t1, t2, t3 = q
    radial = geom.l2 * math.cos(t2) + geom.l3 * math.cos(t2 + t3)
    return Point3(
        math.cos(t1) * radial,
        math.sin(t1) * radial,
        geom.l1 + geom.l2 * math.sin(t2) + geom.l3 * math.sin(t2 + t3),
    )


def elbow_position(geom: ArmGeometry, q: Sequence[float]) -> Point3:
    t1, t2, _ = q
    radial = geom.l2 * math.cos(t2)
    return Point3(math.cos(t1) * radial, math.sin(t1) * radial, geom.l1 + geom.l2 * math.sin(t2))


def reachable(geom: ArmGeometry, target: Sequence[float]) -> bool:
    x, y, z = target
    d = math.sqrt(x * x + y * y + (z - geom.l1) ** 2)
    inner, outer = geom.reach
    return inner <= d <= outer


def solve_ik_batch(geom: ArmGeometry, targets, elbow=ELBOW_UP):
    """Vectorised :func:`solve_ik`.

    Returns ``(angles, status)`` where ``status`` is 0 (ok), 1 (unreachable)
    or 2 (singular) per row; rows with nonzero status hold zeros.
    """
    targets = np.ascontiguousarray(targets, dtype=np.float64).reshape(-1, 3)
    return kernels.ik_batch(geom.l1, geom.l2, geom.l3, targets, int(_branch_sign(elbow)))


def forward_kinematics_batch(geom: ArmGeometry, angles) -> np.ndarray:
    angles = np.ascontiguousarray(angles, dtype=np.float64).reshape(-1, 3)
    return kernels.fk_batch(geom.l1, geom.l2, geom.l3, angles)


def average_angular_velocity(samples: Sequence) -> float:
    """Time-average of angular velocity over the sampled span (trapezoid rule).

    ``samples`` holds ``(t, v)`` pairs with strictly increasing ``t``.
    """
    if len(samples) < 2:
        raise ValueError("average angular velocity needs at least 2 samples")
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("samples must be (t, v) pairs")
    t = np.ascontiguousarray(arr[:, 0])
    v = np.ascontiguousarray(arr[:, 1])
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
        raise ValueError("samples must be finite")
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample timestamps must be strictly increasing")
    return kernels.trapezoid(t, v) / (t[-1] - t[0])


__all__ = [
    "AngularVelocitySample",
    "ArmGeometry",
    "ELBOW_DOWN",
    "ELBOW_UP",
    "JointAngles",
    "KinematicsError",
    "Point3",
    "Singular",
    "Unreachable",
    "average_angular_velocity",
    "elbow_position",
    "forward_kinematics",
    "forward_kinematics_batch",
    "reachable",
    "solve_ik",
    "solve_ik_batch",
    "wrap_angle",
]
