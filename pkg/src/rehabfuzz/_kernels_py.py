"""Pure numpy implementations of the hot loops.

Used when the compiled ``_kernels`` extension is unavailable. Every function
here must return the same values as its Cython twin (up to float rounding);
``tests/test_accel.py`` checks that.
"""
from __future__ import annotations

import numpy as np

SNAP_EPS = 1e-12
AXIS_EPS = 1e-12

STATUS_OK = 0
STATUS_UNREACHABLE = 1
STATUS_SINGULAR = 2

_TWO_PI = 2.0 * np.pi


def _wrap(a: np.ndarray) -> np.ndarray:
    r = a - _TWO_PI * np.round(a / _TWO_PI)
    return np.where(r <= -np.pi, r + _TWO_PI, r)


def tri_mf(x: np.ndarray, alpha: float, beta: float, gamma: float) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    rising = (x > alpha) & (x < beta)
    falling = (x > beta) & (x < gamma)
    if beta > alpha:
        out[rising] = (x[rising] - alpha) / (beta - alpha)
    if gamma > beta:
        out[falling] = (gamma - x[falling]) / (gamma - beta)
    out[x == beta] = 1.0
    return out


def aggregate_centroid(lo, hi, resolution, alphas, betas, gammas, heights):
    dx = (hi - lo) / resolution
    xs = lo + (np.arange(resolution) + 0.5) * dx
    agg = np.zeros(resolution)
    for a, b, c, h in zip(alphas, betas, gammas, heights):
        if h <= 0.0:
            continue
        np.maximum(agg, np.minimum(tri_mf(xs, a, b, c), h), out=agg)
    return float(np.dot(xs, agg)), float(agg.sum())


def ik_batch(l1, l2, l3, targets, branch):
    targets = np.asarray(targets, dtype=np.float64).reshape(-1, 3)
    x, y, z = targets[:, 0], targets[:, 1], targets[:, 2]
    rho = np.sqrt(x * x + y * y)
    dz = z - l1
    c3 = (x * x + y * y + dz * dz - l2 * l2 - l3 * l3) / (2.0 * l2 * l3)
    status = np.zeros(len(targets), dtype=np.int8)
    unreachable = np.abs(c3) > 1.0 + SNAP_EPS
    singular = ~unreachable & (rho <= AXIS_EPS)
    status[unreachable] = STATUS_UNREACHABLE
    status[singular] = STATUS_SINGULAR
    c3 = np.clip(c3, -1.0, 1.0)
    sgn = 1.0 if branch >= 0 else -1.0
    s3 = sgn * np.sqrt(1.0 - c3 * c3)
    out = np.empty((len(targets), 3))
    out[:, 0] = _wrap(np.arctan2(y, x))
    out[:, 1] = _wrap(np.arctan2(dz, rho) - np.arctan2(l3 * s3, l2 + l3 * c3))
    out[:, 2] = _wrap(np.arctan2(s3, c3))
    out[status != STATUS_OK] = 0.0
    return out, status


def fk_batch(l1, l2, l3, angles):
    angles = np.asarray(angles, dtype=np.float64).reshape(-1, 3)
    t1, t2, t3 = angles[:, 0], angles[:, 1], angles[:, 2]
    radial = l2 * np.cos(t2) + l3 * np.cos(t2 + t3)
    out = np.empty_like(angles)
    out[:, 0] = np.cos(t1) * radial
    out[:, 1] = np.sin(t1) * radial
    out[:, 2] = l1 + l2 * np.sin(t2) + l3 * np.sin(t2 + t3)
    return out


def trapezoid(t, v):
    t = np.asarray(t, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return float(np.sum(0.5 * (v[1:] + v[:-1]) * np.diff(t)))
